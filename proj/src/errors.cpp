// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/errors.hpp"

namespace ghostedit {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::TarMalformed: return "TarMalformed";
    case Errc::PathTraversal: return "PathTraversal";
    case Errc::UnsupportedEntryType: return "UnsupportedEntryType";
    case Errc::PathTooLongUnrepresentable: return "PathTooLongUnrepresentable";
    case Errc::LayoutUnsupported: return "LayoutUnsupported";
    case Errc::ManifestMissing: return "ManifestMissing";
    case Errc::ConfigUnparseable: return "ConfigUnparseable";
    case Errc::DigestMismatch: return "DigestMismatch";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::TargetNotFound: return "TargetNotFound";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::SpliceAmbiguous: return "SpliceAmbiguous";
    case Errc::SpecInvalid: return "SpecInvalid";
    case Errc::RecordNotFound: return "RecordNotFound";
    case Errc::StoreUnwritable: return "StoreUnwritable";
    }
    return "UnknownError";
}

} // namespace ghostedit
