// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ghostedit {

/// Parses an RFC 3339 timestamp ("2024-08-14T00:00:00Z", fractional
/// seconds and numeric offsets accepted) to seconds since the epoch.
std::optional<std::int64_t> parse_rfc3339(std::string_view text);

/// Formats seconds since the epoch as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(std::int64_t epoch_seconds);

std::int64_t wall_clock_seconds();

} // namespace ghostedit
