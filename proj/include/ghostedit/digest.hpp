// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ghostedit {

using Bytes = std::vector<std::uint8_t>;

/// A sha256 content digest rendered as 64 lowercase hex characters.
/// Equality is equality of the hex strings.
struct Digest {
    std::string hex;

    static bool valid_hex(std::string_view hex);

    /// Accepts either a bare 64-hex string or one carrying the
    /// "sha256:" prefix. Throws ConfigUnparseable on anything else.
    static Digest parse(std::string_view text);

    /// "sha256:<hex>" as written inside config diff_ids.
    std::string prefixed() const { return "sha256:" + hex; }

    auto operator<=>(const Digest&) const = default;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

} // namespace ghostedit
