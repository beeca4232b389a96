// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ghostedit/archive.hpp"
#include "ghostedit/layerfs.hpp"

namespace ghostedit::audit {

using archive::ImageArchive;
using layerfs::EntryDiff;

enum class Severity { Info, Warn, Critical };

const char* severity_name(Severity severity);

// Finding codes and their fixed severities:
//   DIFFID_MISMATCH        critical   recomputed layer digest disagrees with config
//   HISTORY_COUNT_MISMATCH critical   non-empty history entries vs layer count
//   TRUST_DIGEST_MISMATCH  critical   image id differs from the recorded trusted digest
//   ENTRYPOINT_DRIFT       critical   entrypoint/command prefix changed vs reference
//   TYPE_TRANSITION        warn       entry kind changed (e.g. symlink became regular)
//   CONTENT_DRIFT          warn       entry content changed vs reference
//   ENTRY_ADDED            warn       entry present only in suspect
//   ENTRY_REMOVED          warn       entry present only in reference
//   MTIME_ANOMALY          warn       entry mtime after image creation + tolerance
//   IMAGE_ID               info       informational image id listing
struct Finding {
    std::string code;
    Severity severity = Severity::Info;
    std::optional<int> layer_index;
    std::optional<std::string> path;
    std::string evidence;

    bool operator==(const Finding&) const = default;
};

enum class Verdict { Clean, Suspicious, Tampered };

const char* verdict_name(Verdict verdict);

/// Tampered iff any critical finding, suspicious iff any warn and no
/// critical, clean otherwise.
Verdict verdict_for(const std::vector<Finding>& findings);

struct IntegrityReport {
    Digest image_id;
    std::vector<Finding> findings;
    Verdict verdict = Verdict::Clean;
};

struct ConfigDrift {
    std::string field;
    std::string before;
    std::string after;

    bool operator==(const ConfigDrift&) const = default;
};

struct TamperReport {
    Digest reference_image_id;
    Digest suspect_image_id;
    std::vector<std::pair<int, std::vector<EntryDiff>>> per_layer;
    std::vector<ConfigDrift> config_drift;
    std::vector<Finding> findings;
};

/// Self-verification: recomputes every layer digest and checks the
/// history/layer count. All problems become findings, never errors.
/// A rehashed ghost edit comes back clean here by construction.
IntegrityReport verify_integrity(const ImageArchive& image);

/// Reference diff: layers aligned positionally, per-layer entry diffs,
/// field-level config drift. Kind transitions and content changes are
/// elevated to findings; entrypoint prefix changes are critical.
TamperReport diff_images(const ImageArchive& reference, const ImageArchive& suspect);

/// One warn finding per entry whose mtime exceeds the image creation
/// time by more than tolerance_seconds.
std::vector<Finding> detect_mtime_anomalies(const ImageArchive& image,
                                            std::int64_t tolerance_seconds);

inline constexpr std::int64_t kDefaultMtimeToleranceSeconds = 86400;

struct TrustRecord {
    std::string name_tag;
    Digest image_id;
    std::string recorded_at;

    bool operator==(const TrustRecord&) const = default;
};

/// Appends or replaces the record for name_tag in a line-delimited
/// JSON store. The write is temp-file-then-rename; concurrent writers
/// to one store file must be serialized by the caller.
TrustRecord record_trust(const ImageArchive& image, const std::string& name_tag,
                         const std::filesystem::path& store_path,
                         std::optional<std::string> recorded_at = std::nullopt);

/// nullopt on pass; a critical TRUST_DIGEST_MISMATCH finding carrying
/// both digests otherwise. Throws RecordNotFound for an unknown tag.
std::optional<Finding> verify_trust(const ImageArchive& image, const std::string& name_tag,
                                    const std::filesystem::path& store_path);

std::vector<TrustRecord> read_trust_store(const std::filesystem::path& store_path);

} // namespace ghostedit::audit
