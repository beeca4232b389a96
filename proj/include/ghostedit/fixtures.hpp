// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ghostedit/archive.hpp"

namespace ghostedit::fixtures {

using archive::ImageArchive;
using tar::EntryKind;

/// Everything fixture archives derive their timestamps from; chosen
/// fixed so two builds of the same spec are byte-identical.
inline constexpr const char* kFixtureCreated = "2024-08-14T00:00:00Z";
inline constexpr std::int64_t kFixtureCreatedEpoch = 1723593600;

struct FixtureEntrySpec {
    std::string path;
    EntryKind kind = EntryKind::Regular;
    std::string content_or_target;
    std::uint16_t mode = 0644;
    std::optional<std::int64_t> mtime; // defaults to the image created time
};

struct LayerSpec {
    std::vector<FixtureEntrySpec> entries;
};

struct HistorySpec {
    std::string created_by;
    bool empty_layer = false;
};

struct FixtureSpec {
    std::string name_tag;
    std::string created = kFixtureCreated;
    std::vector<LayerSpec> layers;
    std::vector<HistorySpec> history;
    std::vector<std::string> entrypoint;
    std::vector<std::string> command;
    std::vector<std::string> env;
};

/// Synthesizes a complete docker-save model: layer tars, config JSON,
/// manifest, per-layer stubs and repositories file, all with explicit
/// timestamps. Throws SpecInvalid when the non-empty history count
/// disagrees with the layer count or a field is malformed.
ImageArchive build_fixture(const FixtureSpec& spec);

std::vector<std::string> canned_fixture_names();
FixtureSpec canned_spec(const std::string& name);
ImageArchive canned_fixture(const std::string& name);
std::vector<std::pair<std::string, ImageArchive>> canned_fixtures();

/// The seven base-image analogues the attack-chain breadth checks run
/// against.
std::vector<std::string> attack_chain_fixture_names();

} // namespace ghostedit::fixtures
