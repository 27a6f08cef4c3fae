#pragma once

namespace gridopt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gridopt
