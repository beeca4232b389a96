// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace ghostedit::cli {

// Exit code contract, stable across releases:
//   0 clean / success
//   1 suspicious
//   2 parse error
//   3 target not found
//   4 precondition violated
//   5 tampered / digest mismatch
//   6 missing trust record
//   64 usage error
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitSuspicious = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitTarget = 3;
inline constexpr int kExitPrecondition = 4;
inline constexpr int kExitTampered = 5;
inline constexpr int kExitMissingRecord = 6;
inline constexpr int kExitUsage = 64;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ghostedit::cli
