#pragma once

namespace trapforge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace trapforge
