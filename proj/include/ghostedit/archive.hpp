// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghostedit/digest.hpp"
#include "ghostedit/layerfs.hpp"
#include "ghostedit/tar.hpp"

namespace ghostedit::archive {

using layerfs::LayerBlob;

struct HistoryEntry {
    std::string created;
    std::string created_by;
    bool empty_layer = false;

    bool operator==(const HistoryEntry&) const = default;
};

struct RuntimeConfig {
    std::vector<std::string> entrypoint;
    std::vector<std::string> command;
    std::vector<std::string> env;

    bool operator==(const RuntimeConfig&) const = default;
};

/// Image config JSON. raw_bytes holds the exact original document and
/// is authoritative: edits are applied as textual splices into it, the
/// parsed fields are a read-only view kept in sync.
struct ImageConfig {
    std::string created;
    std::vector<HistoryEntry> history;
    std::vector<Digest> diff_ids;
    RuntimeConfig runtime;
    Bytes raw_bytes;

    /// Throws ConfigUnparseable on bad JSON, a missing rootfs of type
    /// "layers", malformed diff_ids, or a history whose non-empty
    /// count disagrees with diff_ids.
    static ImageConfig parse(Bytes raw);

    bool operator==(const ImageConfig&) const = default;
};

struct Manifest {
    std::string config_path;
    std::vector<std::string> repo_tags;
    std::vector<std::string> layer_paths;
    Bytes raw_bytes;

    static Manifest parse(Bytes raw);

    bool operator==(const Manifest&) const = default;
};

enum class MemberRole { Extra, Config, Layer, Manifest };

/// One member of the outer tar, in on-tape order. Extras carry their
/// bytes verbatim in entry.content; config, manifest and layer members
/// keep only the header template here and are re-serialized from the
/// model on save.
struct ArchiveMember {
    MemberRole role = MemberRole::Extra;
    int layer_index = -1;
    tar::TarEntry entry;

    bool operator==(const ArchiveMember&) const = default;
};

struct ImageArchive {
    Manifest manifest;
    ImageConfig config;
    std::vector<LayerBlob> layers; // aligned with manifest.layer_paths / config.diff_ids
    std::vector<ArchiveMember> members;

    bool operator==(const ImageArchive&) const = default;

    std::vector<const ArchiveMember*> extras() const;
};

enum class LayoutKind { LegacyDockerSave, OciNested, Unknown };

const char* layout_name(LayoutKind kind);

/// LegacyDockerSave iff a root-level manifest.json parses to an array
/// whose entries carry Config and Layers keys; OciNested iff index.json
/// plus a blobs directory are present; Unknown otherwise.
LayoutKind detect_layout(std::span<const std::uint8_t> archive_bytes);

/// Parses a legacy docker-save archive and verifies that every
/// recomputed layer digest matches its config diff_ids entry.
ImageArchive load_archive(std::span<const std::uint8_t> archive_bytes);

/// Canonical writer: members in recorded order with manifest.json
/// last. Verifies alignment and digest invariants before writing.
Bytes save_archive(const ImageArchive& image);

/// sha256 of the layer's serialized (uncompressed) tar bytes.
Digest compute_diff_id(const LayerBlob& layer);

/// Digests for the whole stack, order-deterministic. The parallel path
/// distributes layers over OpenMP threads; the serial path is the
/// reference the tests compare against.
std::vector<Digest> compute_all_diff_ids_serial(std::span<const LayerBlob> layers);
std::vector<Digest> compute_all_diff_ids(std::span<const LayerBlob> layers);

/// sha256 of the config raw bytes; changes whenever any diff_ids entry
/// (or anything else in the config) changes.
Digest compute_image_id(const ImageConfig& config);

/// diff_ids[index - 1], or nullopt for the base layer.
std::optional<Digest> parent_of(const ImageArchive& image, int layer_index);

} // namespace ghostedit::archive
