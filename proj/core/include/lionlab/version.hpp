#pragma once

namespace lionlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lionlab
