#pragma once

#include <iosfwd>

namespace ifs::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kDomainFailure = 1, kUsage = 2 };

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace ifs::cli
