#pragma once

namespace auxsel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace auxsel
