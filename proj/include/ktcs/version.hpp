#pragma once

namespace ktcs {
inline constexpr const char* version = "0.1.0";
}
