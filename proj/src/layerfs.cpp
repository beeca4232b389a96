// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/layerfs.hpp"

#include <algorithm>
#include <map>

#include "ghostedit/errors.hpp"

namespace ghostedit::layerfs {

namespace {

constexpr std::string_view kWhiteoutPrefix = ".wh.";
constexpr std::string_view kOpaqueMarker = ".wh..wh..opq";

std::string_view basename_of(std::string_view path) {
    auto slash = path.rfind('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

std::string dirname_of(std::string_view path) {
    auto slash = path.rfind('/');
    return slash == std::string_view::npos ? std::string() : std::string(path.substr(0, slash));
}

bool path_under(std::string_view path, std::string_view dir) {
    if (dir.empty())
        return true;
    return path.size() > dir.size() + 1 && path.starts_with(dir) && path[dir.size()] == '/';
}

/// Drops `path` and everything below it from the view. Children are
/// contiguous only under the "path/" key prefix ('/' sorts after '-'
/// and '.'), so the exact key and the subtree range are handled
/// separately.
void erase_subtree(std::map<std::string, RootFsRecord>& files, const std::string& path) {
    files.erase(path);
    const std::string child_prefix = path + "/";
    auto it = files.lower_bound(child_prefix);
    while (it != files.end() && it->first.starts_with(child_prefix))
        it = files.erase(it);
}

std::string summary_digest(const TarEntry& entry) {
    switch (entry.kind) {
    case EntryKind::Regular:
    case EntryKind::Opaque:
        return sha256(std::span(entry.content)).hex;
    case EntryKind::Symlink:
    case EntryKind::Hardlink:
        return sha256(entry.link_target).hex;
    case EntryKind::Directory:
        return sha256(std::string_view{}).hex;
    }
    return {};
}

EntrySummary summarize(const TarEntry& entry) {
    EntrySummary s;
    s.kind = entry.kind;
    s.size = entry.content.size();
    s.content_sha256 = summary_digest(entry);
    s.mtime = entry.mtime;
    return s;
}

bool payload_equal(const TarEntry& a, const TarEntry& b) {
    return a.content == b.content && a.link_target == b.link_target;
}

bool meta_equal(const TarEntry& a, const TarEntry& b) {
    return a.mode == b.mode && a.mtime == b.mtime && a.uid == b.uid && a.gid == b.gid;
}

} // namespace

const TarEntry* LayerBlob::find(std::string_view path) const {
    // Later duplicates win, so scan from the back.
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->path == path)
            return &*it;
    }
    return nullptr;
}

LayerBlob read_layer(std::span<const std::uint8_t> tar_bytes) {
    return LayerBlob{tar::read_tar(tar_bytes)};
}

Bytes write_layer(const LayerBlob& layer) { return tar::write_tar(layer.entries); }

bool is_whiteout(std::string_view path) { return basename_of(path).starts_with(kWhiteoutPrefix); }

bool is_opaque_marker(std::string_view path) { return basename_of(path) == kOpaqueMarker; }

std::string whiteout_target(std::string_view whiteout_path) {
    std::string_view base = basename_of(whiteout_path);
    if (!base.starts_with(kWhiteoutPrefix) || is_opaque_marker(whiteout_path))
        raise(Errc::InvariantViolation,
              "not a plain whiteout entry: '" + std::string(whiteout_path) + "'");
    std::string dir = dirname_of(whiteout_path);
    std::string name(base.substr(kWhiteoutPrefix.size()));
    return dir.empty() ? name : dir + "/" + name;
}

RootFs materialize_rootfs(std::span<const LayerBlob> layers) {
    RootFs fs;
    for (std::size_t layer_index = 0; layer_index < layers.size(); ++layer_index) {
        for (const TarEntry& entry : layers[layer_index].entries) {
            if (is_opaque_marker(entry.path)) {
                // Hides lower-layer contents of the directory; entries
                // unpacked earlier in this same layer survive.
                std::string dir = dirname_of(entry.path);
                std::string child_prefix = dir.empty() ? "" : dir + "/";
                auto it = child_prefix.empty() ? fs.files.begin()
                                               : fs.files.lower_bound(child_prefix);
                while (it != fs.files.end() && it->first.starts_with(child_prefix)) {
                    if (it->second.provenance_layer < static_cast<int>(layer_index))
                        it = fs.files.erase(it);
                    else
                        ++it;
                }
                continue;
            }
            if (is_whiteout(entry.path)) {
                erase_subtree(fs.files, whiteout_target(entry.path));
                continue;
            }

            RootFsRecord record;
            record.kind = entry.kind;
            record.mode = entry.mode;
            record.provenance_layer = static_cast<int>(layer_index);
            if (entry.kind == EntryKind::Hardlink) {
                record.link_target = entry.link_target;
                auto target = fs.files.find(entry.link_target);
                if (target != fs.files.end() && target->second.kind == EntryKind::Regular) {
                    record.content = target->second.content;
                } else {
                    fs.dangling_links.push_back(entry.path);
                }
            } else {
                record.content = entry.content;
                record.link_target = entry.link_target;
            }

            if (entry.kind != EntryKind::Directory) {
                // A file cannot shelter children from a replaced directory.
                erase_subtree(fs.files, entry.path);
            }
            fs.files[entry.path] = std::move(record);
        }
    }
    return fs;
}

const char* change_name(ChangeKind kind) {
    switch (kind) {
    case ChangeKind::Added: return "added";
    case ChangeKind::Removed: return "removed";
    case ChangeKind::ContentModified: return "content_modified";
    case ChangeKind::TypeChanged: return "type_changed";
    case ChangeKind::MetaChanged: return "meta_changed";
    }
    return "?";
}

std::vector<EntryDiff> layer_diff(const LayerBlob& before, const LayerBlob& after) {
    std::map<std::string, const TarEntry*> lhs, rhs;
    for (const TarEntry& e : before.entries)
        lhs[e.path] = &e;
    for (const TarEntry& e : after.entries)
        rhs[e.path] = &e;

    std::vector<EntryDiff> diffs;
    auto li = lhs.begin();
    auto ri = rhs.begin();
    while (li != lhs.end() || ri != rhs.end()) {
        if (ri == rhs.end() || (li != lhs.end() && li->first < ri->first)) {
            diffs.push_back({li->first, ChangeKind::Removed, summarize(*li->second), std::nullopt});
            ++li;
            continue;
        }
        if (li == lhs.end() || ri->first < li->first) {
            diffs.push_back({ri->first, ChangeKind::Added, std::nullopt, summarize(*ri->second)});
            ++ri;
            continue;
        }
        const TarEntry& a = *li->second;
        const TarEntry& b = *ri->second;
        if (a.kind != b.kind)
            diffs.push_back({li->first, ChangeKind::TypeChanged, summarize(a), summarize(b)});
        else if (!payload_equal(a, b))
            diffs.push_back({li->first, ChangeKind::ContentModified, summarize(a), summarize(b)});
        else if (!meta_equal(a, b))
            diffs.push_back({li->first, ChangeKind::MetaChanged, summarize(a), summarize(b)});
        ++li;
        ++ri;
    }

    if (diffs.empty() && write_layer(before) != write_layer(after)) {
        // Same path-keyed view but different tape order or duplicate
        // structure; surface it so an empty diff still implies
        // byte-identical serialization.
        std::size_t i = 0;
        std::size_t limit = std::min(before.entries.size(), after.entries.size());
        while (i < limit && before.entries[i] == after.entries[i])
            ++i;
        EntryDiff diff;
        diff.change = ChangeKind::MetaChanged;
        if (i < before.entries.size()) {
            diff.path = before.entries[i].path;
            diff.before = summarize(before.entries[i]);
        }
        if (i < after.entries.size()) {
            if (diff.path.empty())
                diff.path = after.entries[i].path;
            diff.after = summarize(after.entries[i]);
        }
        diffs.push_back(std::move(diff));
    }
    return diffs;
}

std::optional<int> find_last_layer_touching(std::span<const LayerBlob> layers,
                                            std::string_view path_prefix) {
    std::string prefix = tar::normalize_path(path_prefix);
    std::optional<int> last;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (const TarEntry& entry : layers[i].entries) {
            if (entry.path == prefix || path_under(entry.path, prefix)) {
                last = static_cast<int>(i);
                break;
            }
        }
    }
    return last;
}

} // namespace ghostedit::layerfs
