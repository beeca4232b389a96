// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/archive.hpp"

#include <algorithm>
#include <exception>
#include <map>

#include <json.hpp>

#include "ghostedit/errors.hpp"

namespace ghostedit::archive {

using json = nlohmann::json;

namespace {

std::vector<std::string> string_list(const json& value, const char* what) {
    std::vector<std::string> out;
    if (value.is_null())
        return out;
    if (!value.is_array())
        raise(Errc::ConfigUnparseable, std::string(what) + " is not an array");
    for (const auto& item : value) {
        if (!item.is_string())
            raise(Errc::ConfigUnparseable, std::string(what) + " holds a non-string element");
        out.push_back(item.get<std::string>());
    }
    return out;
}

json parse_json(const Bytes& raw, const char* what) {
    json doc = json::parse(raw.begin(), raw.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded())
        raise(Errc::ConfigUnparseable, std::string(what) + " is not valid JSON");
    return doc;
}

bool looks_gzipped(const Bytes& content) {
    return content.size() >= 2 && content[0] == 0x1f && content[1] == 0x8b;
}

/// Layout classification over already-parsed outer entries.
LayoutKind classify(const std::vector<tar::TarEntry>& entries) {
    const tar::TarEntry* manifest = nullptr;
    bool has_index = false;
    bool has_blobs = false;
    for (const auto& entry : entries) {
        if (entry.path == "manifest.json" && entry.kind == tar::EntryKind::Regular)
            manifest = &entry;
        if (entry.path == "index.json" && entry.kind == tar::EntryKind::Regular)
            has_index = true;
        if (entry.path == "blobs" || entry.path.starts_with("blobs/"))
            has_blobs = true;
    }
    if (manifest) {
        json doc = json::parse(manifest->content.begin(), manifest->content.end(), nullptr,
                               /*allow_exceptions=*/false);
        if (doc.is_array() && !doc.empty() &&
            std::all_of(doc.begin(), doc.end(), [](const json& item) {
                return item.is_object() && item.contains("Config") && item.contains("Layers");
            }))
            return LayoutKind::LegacyDockerSave;
    }
    if (has_index && has_blobs)
        return LayoutKind::OciNested;
    return LayoutKind::Unknown;
}

} // namespace

ImageConfig ImageConfig::parse(Bytes raw) {
    json doc = parse_json(raw, "image config");
    if (!doc.is_object())
        raise(Errc::ConfigUnparseable, "image config is not a JSON object");

    ImageConfig config;
    config.raw_bytes = std::move(raw);

    if (!doc.contains("created") || !doc["created"].is_string())
        raise(Errc::ConfigUnparseable, "image config lacks a created timestamp");
    config.created = doc["created"].get<std::string>();

    if (!doc.contains("rootfs") || !doc["rootfs"].is_object())
        raise(Errc::ConfigUnparseable, "image config lacks a rootfs object");
    const json& rootfs = doc["rootfs"];
    if (rootfs.value("type", std::string{}) != "layers")
        raise(Errc::ConfigUnparseable, "rootfs type is not \"layers\"");
    if (!rootfs.contains("diff_ids") || !rootfs["diff_ids"].is_array())
        raise(Errc::ConfigUnparseable, "rootfs lacks diff_ids");
    for (const auto& id : rootfs["diff_ids"]) {
        if (!id.is_string())
            raise(Errc::ConfigUnparseable, "diff_ids holds a non-string element");
        config.diff_ids.push_back(Digest::parse(id.get<std::string>()));
    }

    if (doc.contains("history")) {
        if (!doc["history"].is_array())
            raise(Errc::ConfigUnparseable, "history is not an array");
        for (const auto& item : doc["history"]) {
            if (!item.is_object())
                raise(Errc::ConfigUnparseable, "history holds a non-object element");
            HistoryEntry entry;
            entry.created = item.value("created", std::string{});
            entry.created_by = item.value("created_by", std::string{});
            entry.empty_layer = item.value("empty_layer", false);
            config.history.push_back(std::move(entry));
        }
    }
    std::size_t non_empty = static_cast<std::size_t>(
        std::count_if(config.history.begin(), config.history.end(),
                      [](const HistoryEntry& h) { return !h.empty_layer; }));
    if (non_empty != config.diff_ids.size())
        raise(Errc::ConfigUnparseable,
              "history lists " + std::to_string(non_empty) + " non-empty entries but rootfs has " +
                  std::to_string(config.diff_ids.size()) + " diff_ids");

    if (doc.contains("config") && doc["config"].is_object()) {
        const json& runtime = doc["config"];
        if (runtime.contains("Entrypoint"))
            config.runtime.entrypoint = string_list(runtime["Entrypoint"], "Entrypoint");
        if (runtime.contains("Cmd"))
            config.runtime.command = string_list(runtime["Cmd"], "Cmd");
        if (runtime.contains("Env"))
            config.runtime.env = string_list(runtime["Env"], "Env");
    }
    return config;
}

Manifest Manifest::parse(Bytes raw) {
    json doc = parse_json(raw, "manifest.json");
    if (!doc.is_array() || doc.empty())
        raise(Errc::ConfigUnparseable, "manifest.json is not a non-empty array");
    if (doc.size() != 1)
        raise(Errc::LayoutUnsupported, "multi-image archives are not supported");
    const json& item = doc[0];
    if (!item.is_object())
        raise(Errc::ConfigUnparseable, "manifest entry is not an object");

    Manifest manifest;
    manifest.raw_bytes = std::move(raw);
    if (!item.contains("Config") || !item["Config"].is_string())
        raise(Errc::ConfigUnparseable, "manifest entry lacks a Config path");
    manifest.config_path = item["Config"].get<std::string>();
    if (item.contains("RepoTags"))
        manifest.repo_tags = string_list(item["RepoTags"], "RepoTags");
    if (!item.contains("Layers"))
        raise(Errc::ConfigUnparseable, "manifest entry lacks Layers");
    manifest.layer_paths = string_list(item["Layers"], "Layers");
    if (manifest.layer_paths.empty())
        raise(Errc::ConfigUnparseable, "manifest Layers array is empty");
    return manifest;
}

std::vector<const ArchiveMember*> ImageArchive::extras() const {
    std::vector<const ArchiveMember*> out;
    for (const auto& member : members)
        if (member.role == MemberRole::Extra)
            out.push_back(&member);
    return out;
}

const char* layout_name(LayoutKind kind) {
    switch (kind) {
    case LayoutKind::LegacyDockerSave: return "legacy-docker-save";
    case LayoutKind::OciNested: return "oci-nested";
    case LayoutKind::Unknown: return "unknown";
    }
    return "?";
}

LayoutKind detect_layout(std::span<const std::uint8_t> archive_bytes) {
    return classify(tar::read_tar(archive_bytes));
}

ImageArchive load_archive(std::span<const std::uint8_t> archive_bytes) {
    std::vector<tar::TarEntry> entries = tar::read_tar(archive_bytes);

    LayoutKind layout = classify(entries);
    if (layout != LayoutKind::LegacyDockerSave) {
        bool manifest_present = std::any_of(entries.begin(), entries.end(), [](const auto& e) {
            return e.path == "manifest.json" && e.kind == tar::EntryKind::Regular;
        });
        if (layout == LayoutKind::Unknown && !manifest_present)
            raise(Errc::ManifestMissing, "archive has no root-level manifest.json");
        raise(Errc::LayoutUnsupported,
              std::string("layout unsupported for editing; detected: ") + layout_name(layout));
    }

    ImageArchive image;
    const tar::TarEntry* manifest_entry = nullptr;
    for (const auto& entry : entries)
        if (entry.path == "manifest.json" && entry.kind == tar::EntryKind::Regular)
            manifest_entry = &entry;
    image.manifest = Manifest::parse(manifest_entry->content);

    std::map<std::string, int> layer_index_by_path;
    for (std::size_t i = 0; i < image.manifest.layer_paths.size(); ++i)
        layer_index_by_path.emplace(tar::normalize_path(image.manifest.layer_paths[i]),
                                    static_cast<int>(i));
    const std::string config_path = tar::normalize_path(image.manifest.config_path);

    image.layers.resize(image.manifest.layer_paths.size());
    std::vector<bool> layer_seen(image.layers.size(), false);
    bool config_seen = false;

    for (auto& entry : entries) {
        ArchiveMember member;
        member.entry = entry;
        if (entry.path == "manifest.json" && entry.kind == tar::EntryKind::Regular) {
            member.role = MemberRole::Manifest;
            member.entry.content.clear();
        } else if (entry.path == config_path && entry.kind == tar::EntryKind::Regular &&
                   !config_seen) {
            member.role = MemberRole::Config;
            image.config = ImageConfig::parse(std::move(entry.content));
            member.entry.content.clear();
            config_seen = true;
        } else if (auto it = layer_index_by_path.find(entry.path);
                   it != layer_index_by_path.end() && entry.kind == tar::EntryKind::Regular &&
                   !layer_seen[static_cast<std::size_t>(it->second)]) {
            if (looks_gzipped(entry.content))
                raise(Errc::LayoutUnsupported,
                      "layer '" + entry.path + "' is gzip-compressed; only uncompressed "
                      "docker-save layers are supported");
            member.role = MemberRole::Layer;
            member.layer_index = it->second;
            image.layers[static_cast<std::size_t>(it->second)] =
                layerfs::read_layer(entry.content);
            member.entry.content.clear();
            layer_seen[static_cast<std::size_t>(it->second)] = true;
        }
        image.members.push_back(std::move(member));
    }

    if (!config_seen)
        raise(Errc::ConfigUnparseable,
              "config '" + image.manifest.config_path + "' not present in archive");
    for (std::size_t i = 0; i < layer_seen.size(); ++i)
        if (!layer_seen[i])
            raise(Errc::InvariantViolation,
                  "layer path '" + image.manifest.layer_paths[i] + "' not present in archive");
    if (image.config.diff_ids.size() != image.layers.size())
        raise(Errc::InvariantViolation,
              "config lists " + std::to_string(image.config.diff_ids.size()) +
                  " diff_ids but manifest has " + std::to_string(image.layers.size()) +
                  " layers");

    std::vector<Digest> actual = compute_all_diff_ids(image.layers);
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] != image.config.diff_ids[i]) {
            Error err(Errc::DigestMismatch,
                      "layer " + std::to_string(i) + " digest " + actual[i].hex +
                          " does not match config diff_id " + image.config.diff_ids[i].hex);
            err.layer_index = static_cast<int>(i);
            err.expected = image.config.diff_ids[i].hex;
            err.actual = actual[i].hex;
            throw err;
        }
    }
    return image;
}

Bytes save_archive(const ImageArchive& image) {
    const std::size_t n = image.layers.size();
    if (image.manifest.layer_paths.size() != n || image.config.diff_ids.size() != n)
        raise(Errc::InvariantViolation,
              "layer/diff_ids/manifest alignment broken: " + std::to_string(n) + "/" +
                  std::to_string(image.config.diff_ids.size()) + "/" +
                  std::to_string(image.manifest.layer_paths.size()));

    std::vector<Bytes> layer_bytes(n);
    for (std::size_t i = 0; i < n; ++i)
        layer_bytes[i] = layerfs::write_layer(image.layers[i]);
    for (std::size_t i = 0; i < n; ++i) {
        Digest actual = sha256(std::span(layer_bytes[i]));
        if (actual != image.config.diff_ids[i]) {
            Error err(Errc::InvariantViolation,
                      "layer " + std::to_string(i) + " digest " + actual.hex +
                          " disagrees with config diff_id " + image.config.diff_ids[i].hex +
                          "; rehash before saving");
            err.layer_index = static_cast<int>(i);
            throw err;
        }
    }

    std::vector<tar::TarEntry> out;
    out.reserve(image.members.size());
    const ArchiveMember* manifest_member = nullptr;
    std::vector<bool> layer_emitted(n, false);
    bool config_emitted = false;

    auto materialize = [&](const ArchiveMember& member) {
        tar::TarEntry entry = member.entry;
        switch (member.role) {
        case MemberRole::Extra:
            break;
        case MemberRole::Config:
            entry.content = image.config.raw_bytes;
            config_emitted = true;
            break;
        case MemberRole::Manifest:
            entry.content = image.manifest.raw_bytes;
            break;
        case MemberRole::Layer: {
            auto index = static_cast<std::size_t>(member.layer_index);
            if (member.layer_index < 0 || index >= n)
                raise(Errc::InvariantViolation, "layer member index out of range");
            entry.content = layer_bytes[index];
            layer_emitted[index] = true;
            break;
        }
        }
        out.push_back(std::move(entry));
    };

    for (const auto& member : image.members) {
        if (member.role == MemberRole::Manifest) {
            manifest_member = &member; // canonical order keeps manifest.json last
            continue;
        }
        materialize(member);
    }
    if (!manifest_member)
        raise(Errc::InvariantViolation, "archive model lacks a manifest member");
    materialize(*manifest_member);

    if (!config_emitted)
        raise(Errc::InvariantViolation, "archive model lacks a config member");
    for (std::size_t i = 0; i < n; ++i)
        if (!layer_emitted[i])
            raise(Errc::InvariantViolation,
                  "archive model lacks a member for layer " + std::to_string(i));

    return tar::write_tar(out);
}

Digest compute_diff_id(const LayerBlob& layer) {
    Bytes bytes = layerfs::write_layer(layer);
    return sha256(std::span(bytes));
}

std::vector<Digest> compute_all_diff_ids_serial(std::span<const LayerBlob> layers) {
    std::vector<Digest> out(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i)
        out[i] = compute_diff_id(layers[i]);
    return out;
}

std::vector<Digest> compute_all_diff_ids(std::span<const LayerBlob> layers) {
    const auto n = static_cast<std::int64_t>(layers.size());
    if (n < 2)
        return compute_all_diff_ids_serial(layers);

    std::vector<Digest> out(layers.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = compute_diff_id(layers[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

Digest compute_image_id(const ImageConfig& config) {
    if (config.raw_bytes.empty())
        raise(Errc::InvariantViolation, "config raw bytes are absent");
    return sha256(std::span(config.raw_bytes));
}

std::optional<Digest> parent_of(const ImageArchive& image, int layer_index) {
    if (layer_index < 0 || static_cast<std::size_t>(layer_index) >= image.layers.size())
        raise(Errc::IndexOutOfRange,
              "layer index " + std::to_string(layer_index) + " outside 0.." +
                  std::to_string(image.layers.size() ? image.layers.size() - 1 : 0));
    if (layer_index == 0)
        return std::nullopt;
    return image.config.diff_ids[static_cast<std::size_t>(layer_index) - 1];
}

} // namespace ghostedit::archive
