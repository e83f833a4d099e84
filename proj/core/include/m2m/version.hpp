#pragma once

namespace m2m {
inline constexpr const char* kVersion = "0.1.0";
}
