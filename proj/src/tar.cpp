// SPDX-License-Identifier: Apache-2.0
//
// Canonical USTAR reader/writer. The writer is deliberately rigid:
// fixed field formatting, PAX only for paths or link targets over 100
// bytes, and exactly two zero blocks at the end. Digest binding and
// the round-trip guarantees depend on this byte layout staying fixed.
#include "ghostedit/tar.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <optional>

#include "ghostedit/errors.hpp"

namespace ghostedit::tar {

namespace {

constexpr std::size_t kBlockSize = 512;

// USTAR header field offsets/lengths.
constexpr std::size_t kName = 0, kNameLen = 100;
constexpr std::size_t kMode = 100, kModeLen = 8;
constexpr std::size_t kUid = 108, kUidLen = 8;
constexpr std::size_t kGid = 116, kGidLen = 8;
constexpr std::size_t kSize = 124, kSizeLen = 12;
constexpr std::size_t kMtime = 136, kMtimeLen = 12;
constexpr std::size_t kChksum = 148, kChksumLen = 8;
constexpr std::size_t kTypeflag = 156;
constexpr std::size_t kLinkname = 157, kLinknameLen = 100;
constexpr std::size_t kMagic = 257;
constexpr std::size_t kPrefix = 345, kPrefixLen = 155;

bool is_zero_block(std::span<const std::uint8_t> block) {
    return std::all_of(block.begin(), block.end(), [](std::uint8_t b) { return b == 0; });
}

std::int64_t parse_octal(std::span<const std::uint8_t> field, const char* what) {
    if (!field.empty() && (field[0] & 0x80))
        raise(Errc::TarMalformed, std::string("base-256 ") + what + " field not supported");
    std::size_t i = 0;
    while (i < field.size() && (field[i] == ' ' || field[i] == 0))
        ++i;
    std::int64_t value = 0;
    bool any = false;
    for (; i < field.size(); ++i) {
        std::uint8_t c = field[i];
        if (c == ' ' || c == 0)
            break;
        if (c < '0' || c > '7')
            raise(Errc::TarMalformed, std::string("bad octal digit in ") + what + " field");
        value = value * 8 + (c - '0');
        any = true;
    }
    if (!any)
        return 0;
    return value;
}

std::string read_string(std::span<const std::uint8_t> field) {
    auto end = std::find(field.begin(), field.end(), std::uint8_t{0});
    return std::string(field.begin(), end);
}

// Header checksum over all 512 bytes with the chksum field read as
// spaces. Historic writers used signed bytes; accept both sums.
bool checksum_ok(std::span<const std::uint8_t> header, std::int64_t stored) {
    std::int64_t unsigned_sum = 0;
    std::int64_t signed_sum = 0;
    for (std::size_t i = 0; i < kBlockSize; ++i) {
        std::uint8_t b = (i >= kChksum && i < kChksum + kChksumLen) ? ' ' : header[i];
        unsigned_sum += b;
        signed_sum += static_cast<std::int8_t>(b);
    }
    return stored == unsigned_sum || stored == signed_sum;
}

struct PaxOverrides {
    std::optional<std::string> path;
    std::optional<std::string> linkpath;
};

PaxOverrides parse_pax_records(std::span<const std::uint8_t> data) {
    PaxOverrides out;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t len = 0;
        std::size_t i = pos;
        while (i < data.size() && data[i] >= '0' && data[i] <= '9') {
            len = len * 10 + (data[i] - '0');
            ++i;
        }
        if (i == pos || i >= data.size() || data[i] != ' ' || len == 0 || pos + len > data.size())
            raise(Errc::TarMalformed, "malformed PAX record length");
        std::string record(data.begin() + static_cast<std::ptrdiff_t>(i + 1),
                           data.begin() + static_cast<std::ptrdiff_t>(pos + len));
        if (record.empty() || record.back() != '\n')
            raise(Errc::TarMalformed, "PAX record missing trailing newline");
        record.pop_back();
        auto eq = record.find('=');
        if (eq == std::string::npos)
            raise(Errc::TarMalformed, "PAX record missing '='");
        std::string key = record.substr(0, eq);
        std::string value = record.substr(eq + 1);
        if (key == "path") {
            out.path = value;
        } else if (key == "linkpath") {
            out.linkpath = value;
        } else {
            Error err(Errc::UnsupportedEntryType, "unsupported PAX key '" + key + "'");
            err.path = key;
            throw err;
        }
        pos += len;
    }
    return out;
}

void put_octal(std::uint8_t* field, std::size_t len, std::int64_t value, const char* what) {
    if (value < 0)
        raise(Errc::InvariantViolation, std::string("negative ") + what + " not representable");
    char buf[32];
    int written = std::snprintf(buf, sizeof buf, "%0*llo", static_cast<int>(len - 1),
                                static_cast<unsigned long long>(value));
    if (written < 0 || static_cast<std::size_t>(written) != len - 1)
        raise(Errc::InvariantViolation, std::string(what) + " value too large for octal field");
    std::memcpy(field, buf, len - 1);
    field[len - 1] = 0;
}

char typeflag_for(const TarEntry& entry) {
    switch (entry.kind) {
    case EntryKind::Regular: return '0';
    case EntryKind::Symlink: return '2';
    case EntryKind::Directory: return '5';
    case EntryKind::Hardlink: return '1';
    case EntryKind::Opaque: return entry.raw_typeflag;
    }
    raise(Errc::InvariantViolation, "unknown entry kind");
}

std::string pax_name_for(const std::string& path) {
    std::string name = "PaxHeaders/" + path;
    if (name.size() > kNameLen)
        name.resize(kNameLen);
    return name;
}

std::string pax_record(std::string_view key, std::string_view value) {
    // "<len> <key>=<value>\n" where len counts the whole record.
    std::size_t base = key.size() + value.size() + 3;
    std::size_t total = base + std::to_string(base).size();
    total = base + std::to_string(total).size();
    return std::to_string(total) + " " + std::string(key) + "=" + std::string(value) + "\n";
}

void write_header(Bytes& out, const std::string& name, std::uint16_t mode, int uid, int gid,
                  std::uint64_t size, std::int64_t mtime, char typeflag,
                  const std::string& linkname) {
    std::uint8_t header[kBlockSize] = {};
    if (name.size() > kNameLen)
        raise(Errc::InvariantViolation, "header name exceeds 100 bytes");
    std::memcpy(header + kName, name.data(), name.size());
    put_octal(header + kMode, kModeLen, mode & 07777, "mode");
    put_octal(header + kUid, kUidLen, uid, "uid");
    put_octal(header + kGid, kGidLen, gid, "gid");
    put_octal(header + kSize, kSizeLen, static_cast<std::int64_t>(size), "size");
    put_octal(header + kMtime, kMtimeLen, mtime, "mtime");
    header[kTypeflag] = static_cast<std::uint8_t>(typeflag);
    if (linkname.size() > kLinknameLen)
        raise(Errc::InvariantViolation, "header linkname exceeds 100 bytes");
    std::memcpy(header + kLinkname, linkname.data(), linkname.size());
    std::memcpy(header + kMagic, "ustar\0" "00", 8);

    std::memset(header + kChksum, ' ', kChksumLen);
    std::uint32_t sum = 0;
    for (std::uint8_t b : header)
        sum += b;
    char chk[16]; // sum of 512 unsigned bytes fits in 6 octal digits
    std::snprintf(chk, sizeof chk, "%06o", sum);
    std::memcpy(header + kChksum, chk, 6);
    header[kChksum + 6] = 0;
    header[kChksum + 7] = ' ';

    out.insert(out.end(), header, header + kBlockSize);
}

void write_padded(Bytes& out, std::span<const std::uint8_t> data) {
    out.insert(out.end(), data.begin(), data.end());
    std::size_t rem = data.size() % kBlockSize;
    if (rem != 0)
        out.insert(out.end(), kBlockSize - rem, 0);
}

} // namespace

const char* kind_name(EntryKind kind) {
    switch (kind) {
    case EntryKind::Regular: return "regular";
    case EntryKind::Symlink: return "symlink";
    case EntryKind::Directory: return "directory";
    case EntryKind::Hardlink: return "hardlink";
    case EntryKind::Opaque: return "opaque";
    }
    return "?";
}

std::string normalize_path(std::string_view path) {
    if (path.find('\0') != std::string_view::npos)
        raise(Errc::PathTraversal, "path contains NUL byte");
    if (!path.empty() && path.front() == '/') {
        Error err(Errc::PathTraversal, "absolute path in archive: '" + std::string(path) + "'");
        err.path = std::string(path);
        throw err;
    }
    while (path.starts_with("./"))
        path.remove_prefix(2);

    std::string result;
    result.reserve(path.size());
    std::size_t pos = 0;
    while (pos <= path.size()) {
        std::size_t slash = path.find('/', pos);
        std::string_view segment =
            path.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
        if (segment == "." || segment == "..") {
            Error err(Errc::PathTraversal,
                      "traversal segment in path: '" + std::string(path) + "'");
            err.path = std::string(path);
            throw err;
        }
        if (!segment.empty()) {
            if (!result.empty())
                result.push_back('/');
            result.append(segment);
        }
        if (slash == std::string_view::npos)
            break;
        pos = slash + 1;
    }
    if (result.empty()) {
        Error err(Errc::PathTraversal, "empty archive path");
        err.path = std::string(path);
        throw err;
    }
    return result;
}

std::vector<TarEntry> read_tar(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % kBlockSize != 0)
        raise(Errc::TarMalformed, "stream length is not a multiple of 512");

    std::vector<TarEntry> entries;
    PaxOverrides pending;
    bool have_pending = false;
    std::size_t pos = 0;

    while (true) {
        if (pos + kBlockSize > bytes.size())
            raise(Errc::TarMalformed, "unexpected end of stream before end-of-archive marker");
        auto header = bytes.subspan(pos, kBlockSize);
        if (is_zero_block(header)) {
            if (pos + 2 * kBlockSize > bytes.size() ||
                !is_zero_block(bytes.subspan(pos + kBlockSize, kBlockSize)))
                raise(Errc::TarMalformed, "lone zero block without end-of-archive pair");
            break; // trailing blocking-factor padding, if any, is ignored
        }

        std::int64_t stored_sum = parse_octal(header.subspan(kChksum, kChksumLen), "chksum");
        if (!checksum_ok(header, stored_sum))
            raise(Errc::TarMalformed, "header checksum mismatch");

        std::string raw_name = read_string(header.subspan(kName, kNameLen));
        std::string prefix = read_string(header.subspan(kPrefix, kPrefixLen));
        if (!prefix.empty())
            raw_name = prefix + "/" + raw_name;
        char typeflag = static_cast<char>(header[kTypeflag]);
        std::int64_t size = parse_octal(header.subspan(kSize, kSizeLen), "size");
        if (size < 0)
            raise(Errc::TarMalformed, "negative entry size");
        std::size_t data_blocks = (static_cast<std::size_t>(size) + kBlockSize - 1) / kBlockSize;
        if (pos + kBlockSize + data_blocks * kBlockSize > bytes.size())
            raise(Errc::TarMalformed, "entry data extends past end of stream");
        auto data = bytes.subspan(pos + kBlockSize, static_cast<std::size_t>(size));
        pos += kBlockSize + data_blocks * kBlockSize;

        switch (typeflag) {
        case 'x': {
            PaxOverrides pax = parse_pax_records(data);
            if (pax.path)
                pending.path = pax.path;
            if (pax.linkpath)
                pending.linkpath = pax.linkpath;
            have_pending = true;
            continue;
        }
        case 'g':
            raise(Errc::UnsupportedEntryType, "PAX global header not supported");
        case 'L': { // GNU long name
            std::string name(data.begin(), data.end());
            while (!name.empty() && name.back() == '\0')
                name.pop_back();
            pending.path = name;
            have_pending = true;
            continue;
        }
        case 'K': { // GNU long link
            std::string link(data.begin(), data.end());
            while (!link.empty() && link.back() == '\0')
                link.pop_back();
            pending.linkpath = link;
            have_pending = true;
            continue;
        }
        case '3':
        case '4':
            raise(Errc::UnsupportedEntryType, "device node entry '" + raw_name + "'");
        case '6':
            raise(Errc::UnsupportedEntryType, "FIFO entry '" + raw_name + "'");
        case 'S':
            raise(Errc::UnsupportedEntryType, "sparse entry '" + raw_name + "'");
        default:
            break;
        }

        TarEntry entry;
        entry.mode = static_cast<std::uint16_t>(parse_octal(header.subspan(kMode, kModeLen),
                                                            "mode") & 07777);
        entry.uid = static_cast<int>(parse_octal(header.subspan(kUid, kUidLen), "uid"));
        entry.gid = static_cast<int>(parse_octal(header.subspan(kGid, kGidLen), "gid"));
        entry.mtime = parse_octal(header.subspan(kMtime, kMtimeLen), "mtime");
        std::string link = read_string(header.subspan(kLinkname, kLinknameLen));

        if (have_pending) {
            if (pending.path)
                raw_name = *pending.path;
            if (pending.linkpath)
                link = *pending.linkpath;
            pending = {};
            have_pending = false;
        }

        bool trailing_slash = !raw_name.empty() && raw_name.back() == '/';

        switch (typeflag) {
        case '0':
        case '\0':
        case '7': // contiguous files read back as regular
            entry.kind = trailing_slash ? EntryKind::Directory : EntryKind::Regular;
            if (entry.kind == EntryKind::Regular)
                entry.content.assign(data.begin(), data.end());
            break;
        case '2':
            entry.kind = EntryKind::Symlink;
            entry.link_target = link; // verbatim; may legitimately point outside
            break;
        case '1':
            entry.kind = EntryKind::Hardlink;
            entry.link_target = normalize_path(link); // archive-relative target
            break;
        case '5':
            entry.kind = EntryKind::Directory;
            break;
        default:
            entry.kind = EntryKind::Opaque;
            entry.raw_typeflag = typeflag;
            entry.content.assign(data.begin(), data.end());
            entry.link_target = link;
            break;
        }
        entry.path = normalize_path(raw_name);
        entries.push_back(std::move(entry));
    }
    return entries;
}

Bytes write_tar(std::span<const TarEntry> entries) {
    Bytes out;
    for (const TarEntry& entry : entries) {
        if (entry.path.empty())
            raise(Errc::InvariantViolation, "entry with empty path");

        std::string name = entry.path;
        if (entry.kind == EntryKind::Directory)
            name.push_back('/');
        std::string linkname;
        if (entry.kind == EntryKind::Symlink || entry.kind == EntryKind::Hardlink)
            linkname = entry.link_target;

        bool need_pax = name.size() > kNameLen || linkname.size() > kLinknameLen;
        if (need_pax) {
            std::string records;
            if (linkname.size() > kLinknameLen)
                records += pax_record("linkpath", linkname);
            if (name.size() > kNameLen)
                records += pax_record("path", name);
            write_header(out, pax_name_for(entry.path), 0644, entry.uid, entry.gid,
                         records.size(), entry.mtime, 'x', "");
            write_padded(out, std::span(reinterpret_cast<const std::uint8_t*>(records.data()),
                                        records.size()));
            if (name.size() > kNameLen)
                name.resize(kNameLen);
            if (linkname.size() > kLinknameLen)
                linkname.resize(kLinknameLen);
        }

        const bool has_data = entry.kind == EntryKind::Regular || entry.kind == EntryKind::Opaque;
        if (!has_data && !entry.content.empty())
            raise(Errc::InvariantViolation,
                  "non-regular entry '" + entry.path + "' carries content");
        if (entry.kind != EntryKind::Symlink && entry.kind != EntryKind::Hardlink &&
            entry.kind != EntryKind::Opaque && !entry.link_target.empty())
            raise(Errc::InvariantViolation,
                  "non-link entry '" + entry.path + "' carries link target");

        write_header(out, name, entry.mode, entry.uid, entry.gid,
                     has_data ? entry.content.size() : 0, entry.mtime, typeflag_for(entry),
                     linkname);
        if (has_data)
            write_padded(out, entry.content);
    }
    out.insert(out.end(), 2 * kBlockSize, 0);
    return out;
}

} // namespace ghostedit::tar
