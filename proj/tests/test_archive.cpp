// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "ghostedit/archive.hpp"
#include "ghostedit/errors.hpp"
#include "ghostedit/fixtures.hpp"
#include "test_util.hpp"

using namespace ghostedit;
using archive::ImageArchive;
using archive::LayoutKind;

namespace {

Bytes fixture_bytes(const std::string& name) {
    return archive::save_archive(fixtures::canned_fixture(name));
}

tar::TarEntry regular(std::string path, std::string content) {
    tar::TarEntry entry;
    entry.path = std::move(path);
    entry.kind = tar::EntryKind::Regular;
    entry.content.assign(content.begin(), content.end());
    entry.mtime = 1723593600;
    return entry;
}

Bytes config_bytes(const std::string& text) { return Bytes(text.begin(), text.end()); }

// Minimal parseable config with the given diff_ids.
std::string minimal_config(const std::vector<std::string>& diff_hex) {
    nlohmann::ordered_json doc;
    doc["architecture"] = "amd64";
    doc["config"] = {{"Env", nlohmann::json::array()},
                     {"Cmd", nlohmann::json::array()},
                     {"Entrypoint", nlohmann::json::array()}};
    doc["created"] = "2024-08-14T00:00:00Z";
    doc["history"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < diff_hex.size(); ++i)
        doc["history"].push_back({{"created", "2024-08-14T00:00:00Z"},
                                  {"created_by", "/bin/sh -c step " + std::to_string(i)}});
    doc["os"] = "linux";
    doc["rootfs"] = {{"type", "layers"}, {"diff_ids", nlohmann::json::array()}};
    for (const auto& hex : diff_hex)
        doc["rootfs"]["diff_ids"].push_back("sha256:" + hex);
    return doc.dump();
}

} // namespace

TEST_CASE("layout detection over the three archive shapes") {
    SUBCASE("fixture archives are legacy docker-save") {
        Bytes bytes = fixture_bytes("alpine-like");
        CHECK(archive::detect_layout(bytes) == LayoutKind::LegacyDockerSave);
    }
    SUBCASE("index.json plus blobs is oci-nested") {
        tar::TarEntry blobs_dir;
        blobs_dir.path = "blobs/sha256";
        blobs_dir.kind = tar::EntryKind::Directory;
        blobs_dir.mode = 0755;
        Bytes bytes = tar::write_tar(
            std::vector<tar::TarEntry>{regular("index.json", "{\"schemaVersion\":2}"),
                                       blobs_dir});
        CHECK(archive::detect_layout(bytes) == LayoutKind::OciNested);
    }
    SUBCASE("an empty tar classifies as unknown") {
        Bytes empty(1024, 0);
        CHECK(archive::detect_layout(empty) == LayoutKind::Unknown);
    }
    SUBCASE("a manifest without Config/Layers keys is not legacy") {
        Bytes bytes = tar::write_tar(
            std::vector<tar::TarEntry>{regular("manifest.json", "[{\"foo\":1}]")});
        CHECK(archive::detect_layout(bytes) == LayoutKind::Unknown);
    }
    SUBCASE("classification is deterministic") {
        Bytes bytes = fixture_bytes("alpine-like");
        CHECK(archive::detect_layout(bytes) == archive::detect_layout(bytes));
    }
    SUBCASE("unwalkable streams raise TarMalformed") {
        Bytes garbage(1536, 0x41);
        CHECK_THROWS_AS(archive::detect_layout(garbage), Error);
    }
}

TEST_CASE("load/save round trip is byte-identical for canonical archives") {
    for (const std::string name : {"alpine-like", "python-like", "nginx-like"}) {
        Bytes bytes = fixture_bytes(name);
        ImageArchive loaded = archive::load_archive(bytes);
        CHECK(archive::save_archive(loaded) == bytes);

        ImageArchive reloaded = archive::load_archive(archive::save_archive(loaded));
        CHECK(reloaded == loaded);
    }
}

TEST_CASE("a flipped layer byte without rehash fails digest verification") {
    Bytes bytes = fixture_bytes("ubuntu-like");

    // corrupt one content byte of layer 1 by finding its unique marker
    const std::string marker = "stub: apt 2.0 (focal)";
    auto view = std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    auto pos = view.find(marker);
    REQUIRE(pos != std::string_view::npos);
    bytes[pos] ^= 0x20;

    try {
        archive::load_archive(bytes);
        FAIL("expected DigestMismatch");
    } catch (const Error& error) {
        CHECK(error.code() == Errc::DigestMismatch);
        CHECK(error.layer_index == 1);

        // expected hex comes from the config; actual must equal an
        // independently computed digest of the corrupted layer bytes
        // (match on the marker suffix that survived the bit flip)
        const std::string surviving = marker.substr(1);
        auto outer = tar::read_tar(bytes);
        const tar::TarEntry* layer_member = nullptr;
        for (const auto& entry : outer)
            if (entry.path.ends_with("/layer.tar") &&
                std::string(entry.content.begin(), entry.content.end()).find(surviving) !=
                    std::string::npos)
                layer_member = &entry;
        REQUIRE(layer_member != nullptr);
        CHECK(error.actual == testutil::ref_sha256_hex(layer_member->content));
        CHECK(error.expected != error.actual);
    }
}

TEST_CASE("missing manifest and nested layouts are typed load failures") {
    SUBCASE("no manifest member") {
        Bytes bytes =
            tar::write_tar(std::vector<tar::TarEntry>{regular("something.txt", "hello")});
        try {
            archive::load_archive(bytes);
            FAIL("expected ManifestMissing");
        } catch (const Error& error) {
            CHECK(error.code() == Errc::ManifestMissing);
        }
    }
    SUBCASE("oci-nested archives are rejected for editing") {
        tar::TarEntry blobs_dir;
        blobs_dir.path = "blobs/sha256";
        blobs_dir.kind = tar::EntryKind::Directory;
        Bytes bytes = tar::write_tar(std::vector<tar::TarEntry>{
            regular("index.json", "{\"schemaVersion\":2}"), blobs_dir});
        try {
            archive::load_archive(bytes);
            FAIL("expected LayoutUnsupported");
        } catch (const Error& error) {
            CHECK(error.code() == Errc::LayoutUnsupported);
            CHECK(std::string(error.what()).find("oci-nested") != std::string::npos);
        }
    }
    SUBCASE("multi-image manifests are rejected") {
        std::string manifest = R"([{"Config":"a.json","Layers":["a/layer.tar"]},)"
                               R"({"Config":"b.json","Layers":["b/layer.tar"]}])";
        Bytes bytes = tar::write_tar(std::vector<tar::TarEntry>{
            regular("manifest.json", manifest)});
        CHECK_THROWS_AS(archive::load_archive(bytes), Error);
    }
}

TEST_CASE("gzip-compressed layers are rejected with LayoutUnsupported") {
    Bytes layer_tar{0x1f, 0x8b, 0x08, 0x00, 0x00, 0x00, 0x00, 0x00};
    std::string config = minimal_config({std::string(64, 'a')});
    std::string config_name = testutil::ref_sha256_hex(config) + ".json";
    std::string manifest = R"([{"Config":")" + config_name +
                           R"(","RepoTags":["t:1"],"Layers":["lay/layer.tar"]}])";

    tar::TarEntry layer_entry;
    layer_entry.path = "lay/layer.tar";
    layer_entry.kind = tar::EntryKind::Regular;
    layer_entry.content = layer_tar;

    Bytes bytes = tar::write_tar(std::vector<tar::TarEntry>{
        regular(config_name, config), layer_entry, regular("manifest.json", manifest)});
    try {
        archive::load_archive(bytes);
        FAIL("expected LayoutUnsupported");
    } catch (const Error& error) {
        CHECK(error.code() == Errc::LayoutUnsupported);
        CHECK(std::string(error.what()).find("gzip") != std::string::npos);
    }
}

TEST_CASE("config parsing enforces structure and preserves bytes") {
    SUBCASE("raw bytes round trip to identical field values") {
        ImageArchive image = fixtures::canned_fixture("python-like");
        archive::ImageConfig reparsed = archive::ImageConfig::parse(image.config.raw_bytes);
        CHECK(reparsed == image.config);
    }
    SUBCASE("bad JSON") {
        CHECK_THROWS_AS(archive::ImageConfig::parse(config_bytes("{nope")), Error);
    }
    SUBCASE("wrong rootfs type") {
        std::string text = minimal_config({std::string(64, 'a')});
        auto pos = text.find("layers");
        text.replace(pos, 6, "liarss");
        CHECK_THROWS_AS(archive::ImageConfig::parse(config_bytes(text)), Error);
    }
    SUBCASE("history count must match diff_ids") {
        std::string text = minimal_config({std::string(64, 'a')});
        // drop the single history entry
        nlohmann::json doc = nlohmann::json::parse(text);
        doc["history"] = nlohmann::json::array();
        CHECK_THROWS_AS(archive::ImageConfig::parse(config_bytes(doc.dump())), Error);
    }
    SUBCASE("malformed digest") {
        std::string text = minimal_config({std::string(64, 'a')});
        auto pos = text.find(std::string(64, 'a'));
        text.replace(pos, 64, std::string(64, 'Z'));
        CHECK_THROWS_AS(archive::ImageConfig::parse(config_bytes(text)), Error);
    }
}

TEST_CASE("manifest parsing") {
    std::string good = R"([{"Config":"c.json","RepoTags":["a:b"],"Layers":["x/layer.tar"]}])";
    archive::Manifest manifest = archive::Manifest::parse(config_bytes(good));
    CHECK(manifest.config_path == "c.json");
    CHECK(manifest.repo_tags == std::vector<std::string>{"a:b"});
    CHECK(manifest.layer_paths == std::vector<std::string>{"x/layer.tar"});

    CHECK_THROWS_AS(archive::Manifest::parse(config_bytes("[]")), Error);
    CHECK_THROWS_AS(archive::Manifest::parse(config_bytes("{}")), Error);
    CHECK_THROWS_AS(
        archive::Manifest::parse(config_bytes(R"([{"Config":"c.json","Layers":[]}])")), Error);
    // null RepoTags is how docker renders untagged images
    archive::Manifest untagged = archive::Manifest::parse(
        config_bytes(R"([{"Config":"c.json","RepoTags":null,"Layers":["x/layer.tar"]}])"));
    CHECK(untagged.repo_tags.empty());
}

TEST_CASE("diff_id of the empty layer equals the precomputed zero-block digest") {
    CHECK(archive::compute_diff_id(layerfs::LayerBlob{}).hex ==
          "5f70bf18a086007016e948b04aed3b82103a36bea41755b6cddfaf10ace3c6ef");
    // determinism
    layerfs::LayerBlob blob;
    blob.entries.push_back(regular("f", "content"));
    CHECK(archive::compute_diff_id(blob) == archive::compute_diff_id(blob));
}

TEST_CASE("parallel and serial digest paths agree") {
    testutil::Rng rng(5150);
    for (int i = 0; i < 20; ++i) {
        auto stack = testutil::random_stack(rng, 1, 12, true);
        CHECK(archive::compute_all_diff_ids(stack) ==
              archive::compute_all_diff_ids_serial(stack));
    }
    ImageArchive image = fixtures::canned_fixture("python-like");
    CHECK(archive::compute_all_diff_ids(image.layers) ==
          archive::compute_all_diff_ids_serial(image.layers));
    CHECK(archive::compute_all_diff_ids(image.layers) == image.config.diff_ids);
}

TEST_CASE("image id is the config digest and reacts to any diff_ids change") {
    ImageArchive image = fixtures::canned_fixture("alpine-like");
    Digest id = archive::compute_image_id(image.config);
    CHECK(id == archive::compute_image_id(image.config));
    CHECK(id.hex == testutil::ref_sha256_hex(image.config.raw_bytes));

    // rewrite one hex character of the first diff_ids token
    archive::ImageConfig mutated = image.config;
    std::string target = image.config.diff_ids[0].hex;
    auto view = std::string(mutated.raw_bytes.begin(), mutated.raw_bytes.end());
    auto pos = view.find(target);
    REQUIRE(pos != std::string::npos);
    mutated.raw_bytes[pos] = mutated.raw_bytes[pos] == '0' ? '1' : '0';
    CHECK(archive::compute_image_id(mutated) != id);
}

TEST_CASE("parent linkage over a config carrying the documented example digests") {
    // parse-target vector: the highlighted layer's parent and the
    // final layers[-1] entry, embedded in a synthetic config
    const std::string parent_hex =
        "c4de813b514787fcf51c1a819257340d2cd55582bda6c1bf4976abd8ce3b182f";
    const std::string last_hex =
        "bb08757677326f0612dfedb81d774197163a11f962cde60f12abe8fc38f21c4e";
    std::vector<std::string> diff_hex = {std::string(64, '1'), parent_hex, std::string(64, '2'),
                                         std::string(64, '3'), last_hex};

    ImageArchive image;
    image.config = archive::ImageConfig::parse(config_bytes(minimal_config(diff_hex)));
    image.layers.resize(diff_hex.size());
    image.manifest.layer_paths.resize(diff_hex.size());

    CHECK(image.config.diff_ids.back().hex == last_hex);
    // the layer after the parent is the "highlighted" one
    CHECK(archive::parent_of(image, 2).value().hex == parent_hex);
    CHECK(!archive::parent_of(image, 0).has_value());
    CHECK(archive::parent_of(image, 4).value().hex == std::string(64, '3'));
    CHECK_THROWS_AS(archive::parent_of(image, 5), Error);
    CHECK_THROWS_AS(archive::parent_of(image, -1), Error);
}

TEST_CASE("parent_of reads straight from a fixture's diff_ids") {
    ImageArchive image = fixtures::canned_fixture("httpd-like");
    REQUIRE(image.layers.size() >= 3);
    CHECK(archive::parent_of(image, 2).value() == image.config.diff_ids[1]);
    CHECK(!archive::parent_of(image, 0).has_value());
}

TEST_CASE("save_archive verifies alignment and digest binding") {
    ImageArchive image = fixtures::canned_fixture("alpine-like");

    SUBCASE("misaligned diff_ids") {
        image.config.diff_ids.push_back(Digest{std::string(64, 'f')});
        CHECK_THROWS_AS(archive::save_archive(image), Error);
    }
    SUBCASE("stale digest after unrehashed layer mutation") {
        image.layers[0].entries[1].content.push_back('!');
        try {
            archive::save_archive(image);
            FAIL("expected InvariantViolation");
        } catch (const Error& error) {
            CHECK(error.code() == Errc::InvariantViolation);
        }
    }
    SUBCASE("missing manifest member") {
        std::erase_if(image.members, [](const archive::ArchiveMember& m) {
            return m.role == archive::MemberRole::Manifest;
        });
        CHECK_THROWS_AS(archive::save_archive(image), Error);
    }
}

TEST_CASE("history created_by strings survive load/save byte-for-byte") {
    Bytes bytes = fixture_bytes("python-like");
    ImageArchive a = archive::load_archive(bytes);
    ImageArchive b = archive::load_archive(archive::save_archive(a));
    REQUIRE(a.config.history.size() == b.config.history.size());
    for (std::size_t i = 0; i < a.config.history.size(); ++i)
        CHECK(a.config.history[i].created_by == b.config.history[i].created_by);
}
