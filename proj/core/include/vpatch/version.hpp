#pragma once

namespace vpatch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vpatch
