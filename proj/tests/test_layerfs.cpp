// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "ghostedit/errors.hpp"
#include "ghostedit/layerfs.hpp"
#include "test_util.hpp"

using namespace ghostedit;
using layerfs::ChangeKind;
using layerfs::LayerBlob;
using tar::EntryKind;
using tar::TarEntry;

namespace {

TarEntry entry(std::string path, EntryKind kind, std::string payload = "",
               std::uint16_t mode = 0644, std::int64_t mtime = 1723593600) {
    TarEntry e;
    e.path = std::move(path);
    e.kind = kind;
    e.mode = mode;
    e.mtime = mtime;
    if (kind == EntryKind::Regular)
        e.content.assign(payload.begin(), payload.end());
    else if (kind == EntryKind::Symlink || kind == EntryKind::Hardlink)
        e.link_target = std::move(payload);
    return e;
}

LayerBlob layer(std::vector<TarEntry> entries) { return LayerBlob{std::move(entries)}; }

/// Applies a diff to `base` the way the soundness property reads: every
/// diffed path is taken from `target`, removed paths disappear, and the
/// result must equal `target` as a path-keyed view.
std::map<std::string, TarEntry> apply_diffs(const LayerBlob& base,
                                            const std::vector<layerfs::EntryDiff>& diffs,
                                            const LayerBlob& target) {
    std::map<std::string, TarEntry> result;
    for (const auto& e : base.entries)
        result[e.path] = e;
    for (const auto& diff : diffs) {
        if (diff.change == ChangeKind::Removed) {
            result.erase(diff.path);
            continue;
        }
        const TarEntry* replacement = target.find(diff.path);
        REQUIRE(replacement != nullptr);
        result[diff.path] = *replacement;
    }
    return result;
}

std::map<std::string, TarEntry> path_view(const LayerBlob& blob) {
    std::map<std::string, TarEntry> view;
    for (const auto& e : blob.entries)
        view[e.path] = e;
    return view;
}

} // namespace

TEST_CASE("an end-of-archive-only stream is an empty layer") {
    Bytes zeros(1024, 0);
    CHECK(layerfs::read_layer(zeros).entries.empty());
    CHECK(layerfs::write_layer(LayerBlob{}) == zeros);
}

TEST_CASE("write_layer is deterministic and round trips") {
    testutil::Rng rng(11);
    for (int i = 0; i < 30; ++i) {
        LayerBlob blob = testutil::random_layer(rng, true);
        Bytes bytes = layerfs::write_layer(blob);
        CHECK(layerfs::write_layer(blob) == bytes);
        CHECK(layerfs::read_layer(bytes) == blob);
        CHECK(layerfs::write_layer(layerfs::read_layer(bytes)) == bytes);
    }
}

TEST_CASE("whiteout helpers") {
    CHECK(layerfs::is_whiteout("bin/.wh.tool"));
    CHECK(layerfs::is_whiteout(".wh.rootfile"));
    CHECK(!layerfs::is_whiteout("bin/tool"));
    CHECK(layerfs::is_opaque_marker("dir/.wh..wh..opq"));
    CHECK(!layerfs::is_opaque_marker("dir/.wh.file"));
    CHECK(layerfs::whiteout_target("bin/.wh.tool") == "bin/tool");
    CHECK(layerfs::whiteout_target(".wh.rootfile") == "rootfile");
    CHECK_THROWS_AS(layerfs::whiteout_target("dir/.wh..wh..opq"), Error);
}

TEST_CASE("materialize: single layer") {
    auto fs = layerfs::materialize_rootfs(
        std::vector<LayerBlob>{layer({entry("a.txt", EntryKind::Regular, "hello")})});
    REQUIRE(fs.files.count("a.txt") == 1);
    CHECK(fs.files.at("a.txt").provenance_layer == 0);
    CHECK(fs.files.at("a.txt").content == Bytes{'h', 'e', 'l', 'l', 'o'});
}

TEST_CASE("materialize: whiteout removes a lower-layer path") {
    std::vector<LayerBlob> layers{
        layer({entry("bin", EntryKind::Directory), entry("bin/tool", EntryKind::Regular, "v1")}),
        layer({entry("bin/.wh.tool", EntryKind::Regular)}),
    };
    auto fs = layerfs::materialize_rootfs(layers);
    CHECK(fs.files.count("bin/tool") == 0);
    CHECK(fs.files.count("bin/.wh.tool") == 0);
    CHECK(fs.files.count("bin") == 1);
}

TEST_CASE("materialize: later layers shadow earlier content") {
    std::vector<LayerBlob> layers{
        layer({entry("f", EntryKind::Regular, "v1")}),
        layer({entry("unrelated", EntryKind::Regular, "x")}),
        layer({entry("f", EntryKind::Regular, "v2")}),
    };
    auto fs = layerfs::materialize_rootfs(layers);
    CHECK(fs.files.at("f").content == Bytes{'v', '2'});
    CHECK(fs.files.at("f").provenance_layer == 2);
}

TEST_CASE("materialize: opaque marker hides lower contents but not same-layer entries") {
    std::vector<LayerBlob> layers{
        layer({entry("d", EntryKind::Directory), entry("d/a", EntryKind::Regular, "a"),
               entry("d/b", EntryKind::Regular, "b"),
               entry("d/sub", EntryKind::Directory),
               entry("d/sub/deep", EntryKind::Regular, "deep")}),
        layer({entry("d/early", EntryKind::Regular, "early"),
               entry("d/.wh..wh..opq", EntryKind::Regular),
               entry("d/late", EntryKind::Regular, "late")}),
    };
    auto fs = layerfs::materialize_rootfs(layers);
    CHECK(fs.files.count("d") == 1); // the directory itself survives
    CHECK(fs.files.count("d/a") == 0);
    CHECK(fs.files.count("d/b") == 0);
    CHECK(fs.files.count("d/sub") == 0);
    CHECK(fs.files.count("d/sub/deep") == 0);
    CHECK(fs.files.count("d/early") == 1);
    CHECK(fs.files.count("d/late") == 1);
}

TEST_CASE("materialize: kind conflicts resolve to the later layer") {
    std::vector<LayerBlob> layers{
        layer({entry("d", EntryKind::Directory), entry("d/child", EntryKind::Regular, "x")}),
        layer({entry("d", EntryKind::Regular, "now a file")}),
    };
    auto fs = layerfs::materialize_rootfs(layers);
    CHECK(fs.files.at("d").kind == EntryKind::Regular);
    CHECK(fs.files.count("d/child") == 0); // a file cannot shelter children

    std::vector<LayerBlob> reversed{
        layer({entry("f", EntryKind::Regular, "file")}),
        layer({entry("f", EntryKind::Directory)}),
    };
    CHECK(layerfs::materialize_rootfs(reversed).files.at("f").kind == EntryKind::Directory);
}

TEST_CASE("materialize: hardlinks resolve to target content; dangling links are kept") {
    std::vector<LayerBlob> layers{
        layer({entry("data", EntryKind::Regular, "shared bytes")}),
        layer({entry("alias", EntryKind::Hardlink, "data"),
               entry("broken", EntryKind::Hardlink, "missing")}),
    };
    auto fs = layerfs::materialize_rootfs(layers);
    CHECK(fs.files.at("alias").content == Bytes{'s', 'h', 'a', 'r', 'e', 'd', ' ', 'b', 'y',
                                                't', 'e', 's'});
    CHECK(fs.files.at("alias").link_target == "data");
    CHECK(fs.files.at("broken").content.empty());
    CHECK(fs.dangling_links == std::vector<std::string>{"broken"});
}

TEST_CASE("materialize agrees with the sequential-extraction oracle on random stacks") {
    testutil::Rng rng(20240814);
    for (int i = 0; i < 300; ++i) {
        auto stack = testutil::random_stack(rng, 1, 6, true);
        auto fs = layerfs::materialize_rootfs(stack);
        auto oracle = testutil::oracle_extract(stack);
        std::string mismatch;
        bool ok = testutil::rootfs_matches_oracle(fs, oracle, &mismatch);
        if (!ok)
            FAIL("stack ", i, ": ", mismatch);
    }
}

TEST_CASE("overlay associativity: collapsing a whiteout-free prefix preserves the view") {
    testutil::Rng rng(31337);
    auto flatten = [](const layerfs::RootFs& fs) {
        LayerBlob flat;
        for (const auto& [path, record] : fs.files) {
            TarEntry e;
            e.path = path;
            e.kind = record.kind;
            e.mode = record.mode;
            e.mtime = 1723593600;
            e.content = record.content;
            e.link_target = record.link_target;
            flat.entries.push_back(std::move(e));
        }
        return flat;
    };
    auto strip_provenance = [](const layerfs::RootFs& fs) {
        std::map<std::string, std::tuple<EntryKind, std::uint16_t, Bytes, std::string>> view;
        for (const auto& [path, record] : fs.files)
            view[path] = {record.kind, record.mode, record.content, record.link_target};
        return view;
    };

    for (int i = 0; i < 100; ++i) {
        // whiteouts and hardlinks excluded: a collapsed layer cannot
        // re-encode cross-split deletions or link resolution order
        std::vector<LayerBlob> stack;
        for (int l = 0; l < 3; ++l) {
            LayerBlob blob = testutil::random_layer(rng, false);
            std::erase_if(blob.entries, [](const TarEntry& e) {
                return e.kind == tar::EntryKind::Hardlink;
            });
            if (blob.entries.empty())
                continue;
            stack.push_back(std::move(blob));
        }
        if (stack.size() < 3)
            continue;

        auto direct = layerfs::materialize_rootfs(stack);
        std::vector<LayerBlob> prefix(stack.begin(), stack.begin() + 2);
        std::vector<LayerBlob> collapsed{flatten(layerfs::materialize_rootfs(prefix)),
                                         stack[2]};
        auto split = layerfs::materialize_rootfs(collapsed);
        CHECK(strip_provenance(direct) == strip_provenance(split));
    }
}

TEST_CASE("layer_diff: identical layers produce no diffs") {
    LayerBlob a = layer({entry("x", EntryKind::Regular, "same"),
                         entry("l", EntryKind::Symlink, "x")});
    CHECK(layerfs::layer_diff(a, a).empty());
}

TEST_CASE("layer_diff: symlink to regular is a type transition") {
    LayerBlob before = layer({entry("usr/local/bin/python3", EntryKind::Symlink, "python3.12")});
    LayerBlob after =
        layer({entry("usr/local/bin/python3", EntryKind::Regular, "wrapped binary", 0755)});
    auto diffs = layerfs::layer_diff(before, after);
    REQUIRE(diffs.size() == 1);
    CHECK(diffs[0].path == "usr/local/bin/python3");
    CHECK(diffs[0].change == ChangeKind::TypeChanged);
    CHECK(diffs[0].before->kind == EntryKind::Symlink);
    CHECK(diffs[0].after->kind == EntryKind::Regular);
}

TEST_CASE("layer_diff: content swap is content drift") {
    LayerBlob before = layer({entry("bin/busybox", EntryKind::Regular, "busybox 1.36.1")});
    LayerBlob after = layer({entry("bin/busybox", EntryKind::Regular, "busybox 1.35.0")});
    auto diffs = layerfs::layer_diff(before, after);
    REQUIRE(diffs.size() == 1);
    CHECK(diffs[0].change == ChangeKind::ContentModified);
    CHECK(diffs[0].before->content_sha256 != diffs[0].after->content_sha256);
}

TEST_CASE("layer_diff: added, removed, metadata") {
    LayerBlob before = layer({entry("keep", EntryKind::Regular, "k"),
                              entry("gone", EntryKind::Regular, "g"),
                              entry("chmod", EntryKind::Regular, "c", 0644)});
    LayerBlob after = layer({entry("keep", EntryKind::Regular, "k"),
                             entry("new", EntryKind::Regular, "n"),
                             entry("chmod", EntryKind::Regular, "c", 0755)});
    auto diffs = layerfs::layer_diff(before, after);
    REQUIRE(diffs.size() == 3);
    std::map<std::string, ChangeKind> by_path;
    for (const auto& diff : diffs)
        by_path[diff.path] = diff.change;
    CHECK(by_path.at("gone") == ChangeKind::Removed);
    CHECK(by_path.at("new") == ChangeKind::Added);
    CHECK(by_path.at("chmod") == ChangeKind::MetaChanged);
}

TEST_CASE("layer_diff is empty exactly when serializations are byte-equal") {
    SUBCASE("reordered entries still surface a diff") {
        LayerBlob a = layer({entry("one", EntryKind::Regular, "1"),
                             entry("two", EntryKind::Regular, "2")});
        LayerBlob b = layer({entry("two", EntryKind::Regular, "2"),
                             entry("one", EntryKind::Regular, "1")});
        CHECK(layerfs::write_layer(a) != layerfs::write_layer(b));
        CHECK(!layerfs::layer_diff(a, b).empty());
    }
    SUBCASE("random pairs") {
        testutil::Rng rng(99);
        for (int i = 0; i < 200; ++i) {
            LayerBlob a = testutil::random_layer(rng, false);
            LayerBlob b = rng.chance(25) ? a : testutil::random_layer(rng, false);
            bool empty = layerfs::layer_diff(a, b).empty();
            bool byte_equal = layerfs::write_layer(a) == layerfs::write_layer(b);
            CHECK(empty == byte_equal);
        }
    }
}

TEST_CASE("diff soundness: applying the diff to before yields after") {
    testutil::Rng rng(123);
    for (int i = 0; i < 200; ++i) {
        LayerBlob a = testutil::random_layer(rng, false);
        LayerBlob b = testutil::random_layer(rng, false);
        auto diffs = layerfs::layer_diff(a, b);
        if (diffs.size() == 1 && diffs[0].change == ChangeKind::MetaChanged &&
            path_view(a) == path_view(b))
            continue; // order-only marker diff; path-keyed views already match
        CHECK(apply_diffs(a, diffs, b) == path_view(b));
    }
}

TEST_CASE("find_last_layer_touching") {
    std::vector<LayerBlob> layers{
        layer({entry("usr/local/bin/tool", EntryKind::Regular, "t")}),
        layer({entry("etc/conf", EntryKind::Regular, "c")}),
        layer({entry("usr/local/bin/.wh.tool", EntryKind::Regular)}),
    };

    SUBCASE("whiteouts count as touches") {
        CHECK(layerfs::find_last_layer_touching(layers, "usr/local/bin") == 2);
    }
    SUBCASE("prefix equality counts") {
        CHECK(layerfs::find_last_layer_touching(layers, "usr/local/bin/tool") == 0);
    }
    SUBCASE("untouched prefix yields nothing") {
        CHECK(!layerfs::find_last_layer_touching(layers, "nonexistent").has_value());
    }
    SUBCASE("matching is segment-aware, not plain string prefix") {
        std::vector<LayerBlob> tricky{layer({entry("usr/local/binx", EntryKind::Regular, "x")})};
        CHECK(!layerfs::find_last_layer_touching(tricky, "usr/local/bin").has_value());
    }
    SUBCASE("trailing slash on the prefix is normalized away") {
        CHECK(layerfs::find_last_layer_touching(layers, "usr/local/bin/") == 2);
    }
}

TEST_CASE("find_last_layer_touching matches a brute-force scan on random stacks") {
    testutil::Rng rng(4242);
    for (int i = 0; i < 300; ++i) {
        auto stack = testutil::random_stack(rng, 1, 6, true);
        std::string prefix = rng.pick(testutil::dir_pool());
        auto got = layerfs::find_last_layer_touching(stack, prefix);
        int expected = testutil::brute_force_last_touch(stack, prefix);
        CHECK(got.value_or(-1) == expected);
    }
}
