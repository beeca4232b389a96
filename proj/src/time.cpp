// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/time.hpp"

#include <cstdio>
#include <ctime>

namespace ghostedit {

namespace {

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size())
        return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = text[i];
        if (c < '0' || c > '9')
            return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

std::int64_t days_from_civil(int y, int m, int d) {
    // Howard Hinnant's algorithm; valid over the full int range.
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                         static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

} // namespace

std::optional<std::int64_t> parse_rfc3339(std::string_view text) {
    int year, month, day, hour, minute, second;
    if (!parse_fixed_int(text, 0, 4, year) || text.size() < 20 || text[4] != '-' ||
        !parse_fixed_int(text, 5, 2, month) || text[7] != '-' ||
        !parse_fixed_int(text, 8, 2, day) || (text[10] != 'T' && text[10] != 't') ||
        !parse_fixed_int(text, 11, 2, hour) || text[13] != ':' ||
        !parse_fixed_int(text, 14, 2, minute) || text[16] != ':' ||
        !parse_fixed_int(text, 17, 2, second))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
        return std::nullopt;

    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            ++pos;
            ++digits;
        }
        if (digits == 0)
            return std::nullopt;
    }

    std::int64_t offset = 0;
    if (pos >= text.size())
        return std::nullopt;
    if (text[pos] == 'Z' || text[pos] == 'z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        int off_hour, off_min;
        bool negative = text[pos] == '-';
        if (!parse_fixed_int(text, pos + 1, 2, off_hour) || pos + 3 >= text.size() ||
            text[pos + 3] != ':' || !parse_fixed_int(text, pos + 4, 2, off_min))
            return std::nullopt;
        offset = (off_hour * 60 + off_min) * 60;
        if (negative)
            offset = -offset;
        pos += 6;
    } else {
        return std::nullopt;
    }
    if (pos != text.size())
        return std::nullopt;

    std::int64_t days = days_from_civil(year, month, day);
    return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

std::string format_rfc3339(std::int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm_utc.tm_year + 1900,
                  tm_utc.tm_mon + 1, tm_utc.tm_mday, tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec);
    return buf;
}

std::int64_t wall_clock_seconds() { return static_cast<std::int64_t>(std::time(nullptr)); }

} // namespace ghostedit
