#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mrk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitVerdict = 3;
inline constexpr int kExitQuality = 4;
inline constexpr int kExitSlope = 5;

inline constexpr const char* kSampleCsvSchema = "mrk-sample/1";
inline constexpr const char* kConvergeCsvSchema = "mrk-converge/1";

/// Runs `mrk <command> ...`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrk::cli
