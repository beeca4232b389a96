// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ghostedit/archive.hpp"

namespace ghostedit::engine {

using archive::ImageArchive;
using archive::ImageConfig;

/// Controls the mtime written onto touched entries. Stealth copies the
/// image creation time so the edit leaves no timestamp trace; Honest
/// uses the wall clock and is what gives the mtime detector its true
/// positives.
enum class MtimePolicy { Stealth, PreserveOriginal, Honest };

const char* mtime_policy_name(MtimePolicy policy);

struct InjectFile {
    std::string path;
    Bytes content;
    std::uint16_t mode = 0755;
    MtimePolicy mtime_policy = MtimePolicy::Stealth;
};

struct ReplaceEntry {
    std::string path;
    tar::EntryKind new_kind = tar::EntryKind::Regular;
    Bytes content;           // Regular
    std::string link_target; // Symlink/Hardlink
    std::uint16_t mode = 0755;
    MtimePolicy mtime_policy = MtimePolicy::Stealth;
};

struct RemoveEntry {
    std::string path;
};

struct PrependEntrypoint {
    std::string payload_path; // absolute within the image rootfs
};

using EditAction = std::variant<InjectFile, ReplaceEntry, RemoveEntry, PrependEntrypoint>;

struct AutoLatestTouching {
    std::string path_prefix;
};

using TargetSelector = std::variant<int, AutoLatestTouching>;

struct EditPlan {
    TargetSelector target = 0;
    std::vector<EditAction> actions;
    /// An empty action list is only valid when the plan is explicitly
    /// a no-op probe.
    bool probe = false;
};

struct ActionRecord {
    std::string action;
    std::string path;

    bool operator==(const ActionRecord&) const = default;
};

struct EditReport {
    int resolved_layer = -1;
    Digest old_diff_id;
    Digest new_diff_id;
    Digest old_image_id;
    Digest new_image_id;
    std::vector<ActionRecord> actions_applied;
    std::int64_t bytes_delta = 0; // serialized layer tar size, after minus before
    std::vector<std::string> entrypoint_after;
    std::vector<std::string> command_after;
};

/// Bounds-checks an explicit index; AutoLatestTouching delegates to
/// find_last_layer_touching and raises TargetNotFound on no match.
int resolve_target(const ImageArchive& image, const EditPlan& plan);

/// Applies the plan against the resolved layer, then rewrites the one
/// diff_ids token and the manifest layer path so the result reloads as
/// verified. History entries and the created timestamp stay
/// byte-identical; with PrependEntrypoint only the entrypoint/command
/// list additionally differs.
std::pair<ImageArchive, EditReport> apply_edit(const ImageArchive& image, const EditPlan& plan);

/// Puts payload_path in front of the entrypoint (or the command when
/// the entrypoint is empty; or as a fresh one-element entrypoint when
/// both are). Spliced into raw_bytes in place.
ImageConfig prepend_entrypoint(const ImageConfig& config, const std::string& payload_path);

/// Recomputes the digest of layers[edited_index], splices it into the
/// config raw bytes, renames the layer directory to the new hex and
/// updates the manifest. Refuses with SpliceAmbiguous when the old
/// token is not unique in the document being patched.
ImageArchive rehash_and_relink(ImageArchive image, int edited_index);

struct AttackResult {
    Bytes archive_bytes;
    EditReport report;
};

/// One-shot automation: pick the latest layer touching target_prefix,
/// drop the payload there and prepend its absolute path to the image
/// entrypoint, then re-archive.
AttackResult run_attack_chain(std::span<const std::uint8_t> archive_bytes, const Bytes& payload,
                              const std::string& payload_name, const std::string& target_prefix);

} // namespace ghostedit::engine
