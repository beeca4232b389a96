// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "ghostedit/audit.hpp"
#include "ghostedit/engine.hpp"

namespace ghostedit::report {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

ordered_json to_json(const layerfs::EntrySummary& summary);
ordered_json to_json(const layerfs::EntryDiff& diff);
ordered_json to_json(const audit::Finding& finding);
ordered_json to_json(const audit::IntegrityReport& report);
ordered_json to_json(const audit::TamperReport& report);
ordered_json to_json(const audit::TrustRecord& record);
ordered_json to_json(const engine::EditReport& report);

/// Per-image inspection summary as printed by the inspect command.
ordered_json inspect_summary(const archive::ImageArchive& image,
                             const std::string& last_touch_prefix);

/// Wraps a payload in the versioned report envelope.
ordered_json envelope(const std::string& command, const std::string& generated_at,
                      ordered_json payload);

std::string render(const ordered_json& doc);

} // namespace ghostedit::report
