// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ghostedit/digest.hpp"

namespace ghostedit::tar {

enum class EntryKind {
    Regular,
    Symlink,
    Directory,
    Hardlink,
    /// Header types we do not model but must carry through a
    /// read/write round trip unchanged (raw typeflag preserved).
    Opaque,
};

const char* kind_name(EntryKind kind);

struct TarEntry {
    std::string path; // normalized, slash separated, no trailing slash
    EntryKind kind = EntryKind::Regular;
    std::uint16_t mode = 0644; // low 12 permission bits
    std::int64_t mtime = 0;    // seconds since epoch
    std::string link_target;   // Symlink/Hardlink only
    Bytes content;             // Regular/Opaque only
    int uid = 0;
    int gid = 0;
    char raw_typeflag = '0'; // as stored on tape; meaningful for Opaque

    bool operator==(const TarEntry&) const = default;
};

/// Parses a tar stream into entries in on-tape order.
///
/// Path rules: a leading "./" is stripped and duplicate slashes are
/// collapsed; "." or ".." segments, absolute paths and empty names are
/// a PathTraversal error. Device nodes, FIFOs, sparse entries and PAX
/// keys other than path/linkpath raise UnsupportedEntryType.
std::vector<TarEntry> read_tar(std::span<const std::uint8_t> bytes);

/// Serializes entries in order as canonical USTAR: a PAX extension
/// precedes an entry only when its path or link target exceeds 100
/// bytes, and the stream ends with exactly two 512-byte zero blocks
/// (no blocking-factor padding). Equal inputs give identical bytes.
Bytes write_tar(std::span<const TarEntry> entries);

/// Applies the reader's normalization rules to a caller-supplied path.
std::string normalize_path(std::string_view path);

} // namespace ghostedit::tar
