#pragma once

namespace bdnas {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bdnas
