// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ghostedit {

/// Error categories for everything that can go wrong while parsing,
/// editing or auditing an archive. One exception type carries the code
/// plus whatever structured context the failure site had available.
enum class Errc {
    TarMalformed,
    PathTraversal,
    UnsupportedEntryType,
    PathTooLongUnrepresentable,
    LayoutUnsupported,
    ManifestMissing,
    ConfigUnparseable,
    DigestMismatch,
    InvariantViolation,
    IndexOutOfRange,
    TargetNotFound,
    PreconditionViolated,
    SpliceAmbiguous,
    SpecInvalid,
    RecordNotFound,
    StoreUnwritable,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

    // Optional context, filled where the failure site knows it.
    int layer_index = -1;
    std::string path;
    std::string expected;
    std::string actual;

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) { throw Error(code, message); }

} // namespace ghostedit
