#pragma once

namespace condinf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace condinf
