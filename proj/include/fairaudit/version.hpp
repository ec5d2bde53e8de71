#pragma once

namespace fairaudit {

inline constexpr const char* kToolName = "fairaudit";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace fairaudit
