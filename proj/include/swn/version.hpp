#pragma once

namespace swn {

inline constexpr const char* version = "0.1.0";

} // namespace swn
