// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/digest.hpp"

#include <array>

#include <openssl/evp.h>

#include "ghostedit/errors.hpp"

namespace ghostedit {

bool Digest::valid_hex(std::string_view hex) {
    if (hex.size() != 64)
        return false;
    for (char c : hex) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
            return false;
    }
    return true;
}

Digest Digest::parse(std::string_view text) {
    constexpr std::string_view prefix = "sha256:";
    if (text.starts_with(prefix))
        text.remove_prefix(prefix.size());
    if (!valid_hex(text))
        raise(Errc::ConfigUnparseable, "not a sha256 digest: '" + std::string(text) + "'");
    return Digest{std::string(text)};
}

Digest sha256(std::span<const std::uint8_t> data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
    unsigned int raw_len = 0;
    if (EVP_Digest(data.data(), data.size(), raw.data(), &raw_len, EVP_sha256(), nullptr) != 1)
        raise(Errc::InvariantViolation, "sha256 computation failed");

    static constexpr char hex_chars[] = "0123456789abcdef";
    std::string hex(static_cast<std::size_t>(raw_len) * 2, '0');
    for (unsigned int i = 0; i < raw_len; ++i) {
        hex[2 * i] = hex_chars[raw[i] >> 4];
        hex[2 * i + 1] = hex_chars[raw[i] & 0x0f];
    }
    return Digest{std::move(hex)};
}

Digest sha256(std::string_view data) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

} // namespace ghostedit
