#pragma once

namespace embedlab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "embedlab";

}  // namespace embedlab
