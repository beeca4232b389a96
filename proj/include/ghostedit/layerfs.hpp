// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ghostedit/digest.hpp"
#include "ghostedit/tar.hpp"

namespace ghostedit::layerfs {

using tar::EntryKind;
using tar::TarEntry;

/// The ordered contents of one layer tar. Entry order is preserved
/// exactly through read/write round trips.
struct LayerBlob {
    std::vector<TarEntry> entries;

    bool operator==(const LayerBlob&) const = default;

    const TarEntry* find(std::string_view path) const;
};

LayerBlob read_layer(std::span<const std::uint8_t> tar_bytes);
Bytes write_layer(const LayerBlob& layer);

// Whiteout encoding: ".wh.<name>" removes <name> from lower layers,
// ".wh..wh..opq" hides all lower-layer contents of its directory.
bool is_whiteout(std::string_view path);
bool is_opaque_marker(std::string_view path);
/// Path hidden by a plain whiteout entry ("a/.wh.b" -> "a/b").
std::string whiteout_target(std::string_view whiteout_path);

struct RootFsRecord {
    EntryKind kind = EntryKind::Regular;
    std::uint16_t mode = 0;
    Bytes content;           // Regular; for resolved hardlinks the target's bytes
    std::string link_target; // Symlink, or an unresolved (dangling) hardlink
    int provenance_layer = 0;

    bool operator==(const RootFsRecord&) const = default;
};

struct RootFs {
    std::map<std::string, RootFsRecord> files;
    /// Hardlinks whose target was missing at materialization time.
    std::vector<std::string> dangling_links;

    bool operator==(const RootFs&) const = default;
};

/// Overlays the stack bottom-up: later layers win per path, whiteouts
/// remove lower-layer paths (subtree included), an opaque marker hides
/// everything its directory held before the marker's layer, and a
/// non-directory entry replacing a directory drops the old subtree.
RootFs materialize_rootfs(std::span<const LayerBlob> layers);

enum class ChangeKind { Added, Removed, ContentModified, TypeChanged, MetaChanged };

const char* change_name(ChangeKind kind);

struct EntrySummary {
    EntryKind kind = EntryKind::Regular;
    std::uint64_t size = 0;
    std::string content_sha256;
    std::int64_t mtime = 0;

    bool operator==(const EntrySummary&) const = default;
};

struct EntryDiff {
    std::string path;
    ChangeKind change = ChangeKind::Added;
    std::optional<EntrySummary> before;
    std::optional<EntrySummary> after;

    bool operator==(const EntryDiff&) const = default;
};

/// Complete path-keyed diff. Kind changes win over content changes;
/// content over metadata. An order-only difference (same entries,
/// different tape order) is reported as one MetaChanged diff so that
/// an empty result still implies byte-identical serialization.
std::vector<EntryDiff> layer_diff(const LayerBlob& before, const LayerBlob& after);

/// Greatest index of a layer containing any entry (whiteouts included)
/// at or under path_prefix; nullopt when no layer touches it.
std::optional<int> find_last_layer_touching(std::span<const LayerBlob> layers,
                                            std::string_view path_prefix);

} // namespace ghostedit::layerfs
