// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ghostedit/errors.hpp"
#include "ghostedit/tar.hpp"
#include "test_util.hpp"

using namespace ghostedit;
using tar::EntryKind;
using tar::TarEntry;

namespace {

TarEntry regular(std::string path, std::string content, std::uint16_t mode = 0644) {
    TarEntry entry;
    entry.path = std::move(path);
    entry.kind = EntryKind::Regular;
    entry.content.assign(content.begin(), content.end());
    entry.mode = mode;
    entry.mtime = 1723593600;
    return entry;
}

TarEntry symlink(std::string path, std::string target) {
    TarEntry entry;
    entry.path = std::move(path);
    entry.kind = EntryKind::Symlink;
    entry.link_target = std::move(target);
    entry.mode = 0777;
    entry.mtime = 1723593600;
    return entry;
}

TarEntry directory(std::string path) {
    TarEntry entry;
    entry.path = std::move(path);
    entry.kind = EntryKind::Directory;
    entry.mode = 0755;
    entry.mtime = 1723593600;
    return entry;
}

std::vector<TarEntry> sample_entries() {
    TarEntry hardlink;
    hardlink.path = "usr/bin/alias";
    hardlink.kind = EntryKind::Hardlink;
    hardlink.link_target = "usr/bin/tool";
    hardlink.mtime = 1723593600;

    return {
        directory("usr"),
        directory("usr/bin"),
        regular("usr/bin/tool", "binary payload bytes", 0755),
        symlink("usr/bin/shortcut", "tool"),
        hardlink,
        regular("etc/empty", ""),
    };
}

// Recomputes a patched header's checksum the way tar requires.
void fix_checksum(Bytes& tar_bytes, std::size_t header_offset) {
    std::memset(tar_bytes.data() + header_offset + 148, ' ', 8);
    unsigned sum = 0;
    for (std::size_t i = 0; i < 512; ++i)
        sum += tar_bytes[header_offset + i];
    char buf[8];
    std::snprintf(buf, sizeof buf, "%06o", sum);
    std::memcpy(tar_bytes.data() + header_offset + 148, buf, 6);
    tar_bytes[header_offset + 148 + 6] = 0;
    tar_bytes[header_offset + 148 + 7] = ' ';
}

} // namespace

TEST_CASE("empty stream round trip") {
    Bytes empty_archive = tar::write_tar({});
    CHECK(empty_archive == Bytes(1024, 0));
    CHECK(tar::read_tar(empty_archive).empty());
}

TEST_CASE("entries round trip by value and by byte") {
    auto entries = sample_entries();
    Bytes bytes = tar::write_tar(entries);
    CHECK(bytes.size() % 512 == 0);

    auto read_back = tar::read_tar(bytes);
    CHECK(read_back == entries);

    // canonical writer output re-serializes byte-identically
    CHECK(tar::write_tar(read_back) == bytes);
    // and is deterministic for equal inputs
    CHECK(tar::write_tar(entries) == bytes);
}

TEST_CASE("paths over 100 bytes travel through a PAX extension") {
    std::string long_dir(130, 'd');
    TarEntry entry = regular(long_dir + "/file.txt", "deep");
    Bytes bytes = tar::write_tar({{entry}});

    // a PAX header ('x' at typeflag offset of the first header) precedes the entry
    CHECK(bytes[156] == 'x');
    auto read_back = tar::read_tar(bytes);
    REQUIRE(read_back.size() == 1);
    CHECK(read_back[0] == entry);

    std::string long_target(140, 't');
    TarEntry link = symlink("s", long_target);
    auto link_back = tar::read_tar(tar::write_tar({{link}}));
    REQUIRE(link_back.size() == 1);
    CHECK(link_back[0] == link);
}

TEST_CASE("path normalization rules") {
    CHECK(tar::normalize_path("./a/b") == "a/b");
    CHECK(tar::normalize_path("a//b") == "a/b");
    CHECK(tar::normalize_path("a/b/") == "a/b");
    CHECK_THROWS_AS(tar::normalize_path("/abs"), Error);
    CHECK_THROWS_AS(tar::normalize_path("a/../b"), Error);
    CHECK_THROWS_AS(tar::normalize_path("../escape"), Error);
    CHECK_THROWS_AS(tar::normalize_path("a/./b"), Error);
    CHECK_THROWS_AS(tar::normalize_path(""), Error);
    CHECK_THROWS_AS(tar::normalize_path("."), Error);

    try {
        tar::normalize_path("../escape");
        FAIL("expected PathTraversal");
    } catch (const Error& error) {
        CHECK(error.code() == Errc::PathTraversal);
    }
}

TEST_CASE("malformed streams are rejected") {
    Bytes bytes = tar::write_tar(sample_entries());

    SUBCASE("length not a block multiple") {
        bytes.pop_back();
        CHECK_THROWS_AS(tar::read_tar(bytes), Error);
    }
    SUBCASE("header checksum corruption") {
        bytes[0] ^= 0xff;
        try {
            tar::read_tar(bytes);
            FAIL("expected TarMalformed");
        } catch (const Error& error) {
            CHECK(error.code() == Errc::TarMalformed);
        }
    }
    SUBCASE("truncation before the end marker") {
        bytes.resize(bytes.size() - 1024);
        CHECK_THROWS_AS(tar::read_tar(bytes), Error);
    }
    SUBCASE("lone zero block") {
        Bytes lone(512, 0);
        lone.insert(lone.end(), 512, 1);
        CHECK_THROWS_AS(tar::read_tar(lone), Error);
    }
}

TEST_CASE("unsupported entry types carry a typed error") {
    auto expect_unsupported = [](char typeflag) {
        Bytes bytes = tar::write_tar({{regular("dev/node", "")}});
        bytes[156] = static_cast<std::uint8_t>(typeflag);
        fix_checksum(bytes, 0);
        try {
            tar::read_tar(bytes);
            FAIL("expected UnsupportedEntryType for typeflag ", typeflag);
        } catch (const Error& error) {
            CHECK(error.code() == Errc::UnsupportedEntryType);
        }
    };
    expect_unsupported('3'); // char device
    expect_unsupported('4'); // block device
    expect_unsupported('6'); // fifo
    expect_unsupported('S'); // sparse
}

TEST_CASE("unknown header types are preserved opaquely") {
    TarEntry vendor;
    vendor.path = "weird";
    vendor.kind = EntryKind::Opaque;
    vendor.raw_typeflag = 'V';
    vendor.content = {1, 2, 3};
    vendor.mtime = 1723593600;

    Bytes bytes = tar::write_tar({{vendor}});
    auto read_back = tar::read_tar(bytes);
    REQUIRE(read_back.size() == 1);
    CHECK(read_back[0].kind == EntryKind::Opaque);
    CHECK(read_back[0].raw_typeflag == 'V');
    CHECK(read_back[0].content == Bytes{1, 2, 3});
    CHECK(tar::write_tar(read_back) == bytes);
}

TEST_CASE("PAX keys other than path/linkpath are refused") {
    TarEntry pax;
    pax.path = "pax-header";
    pax.kind = EntryKind::Opaque;
    pax.raw_typeflag = 'x';
    std::string record = "12 uid=1000\n";
    pax.content.assign(record.begin(), record.end());

    Bytes bytes = tar::write_tar({{pax, regular("f", "x")}});
    try {
        tar::read_tar(bytes);
        FAIL("expected UnsupportedEntryType");
    } catch (const Error& error) {
        CHECK(error.code() == Errc::UnsupportedEntryType);
        CHECK(error.path == "uid");
    }
}

TEST_CASE("GNU long-name data applies to the following entry") {
    std::string real_name = "gnu/long/name/target";
    TarEntry longname;
    longname.path = "././@LongLink";
    longname.kind = EntryKind::Opaque;
    longname.raw_typeflag = 'L';
    longname.content.assign(real_name.begin(), real_name.end());
    longname.content.push_back('\0');

    // write_tar normalizes the marker path; build the stream, then read
    longname.path = "LongLink";
    Bytes bytes = tar::write_tar({{longname, regular("placeholder", "data")}});
    auto read_back = tar::read_tar(bytes);
    REQUIRE(read_back.size() == 1);
    CHECK(read_back[0].path == real_name);
    CHECK(read_back[0].content == Bytes{'d', 'a', 't', 'a'});
}

TEST_CASE("traversal names inside a stream are refused, not sanitized") {
    Bytes bytes = tar::write_tar({{regular("safe", "x")}});
    // patch the stored name to an absolute path
    const char* evil = "/etc/passwd";
    std::memset(bytes.data(), 0, 100);
    std::memcpy(bytes.data(), evil, std::strlen(evil));
    fix_checksum(bytes, 0);
    try {
        tar::read_tar(bytes);
        FAIL("expected PathTraversal");
    } catch (const Error& error) {
        CHECK(error.code() == Errc::PathTraversal);
    }
}

TEST_CASE("duplicate paths are preserved in tape order") {
    auto entries = std::vector<TarEntry>{regular("f", "one"), regular("f", "two")};
    auto read_back = tar::read_tar(tar::write_tar(entries));
    REQUIRE(read_back.size() == 2);
    CHECK(read_back[0].content == Bytes{'o', 'n', 'e'});
    CHECK(read_back[1].content == Bytes{'t', 'w', 'o'});
}

TEST_CASE("negative mtime is not representable") {
    TarEntry entry = regular("f", "x");
    entry.mtime = -1;
    CHECK_THROWS_AS(tar::write_tar({{entry}}), Error);
}

TEST_CASE("random round trips agree with the reference digest") {
    testutil::Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        auto layer = testutil::random_layer(rng, true);
        Bytes bytes = tar::write_tar(layer.entries);
        CHECK(tar::read_tar(bytes) == layer.entries);
        CHECK(sha256(std::span(bytes)).hex == testutil::ref_sha256_hex(bytes));
    }
}
