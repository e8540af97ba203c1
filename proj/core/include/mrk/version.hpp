#pragma once

namespace mrk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mrk
