#pragma once

namespace eosprobe {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace eosprobe
