#pragma once

namespace mfrc {
inline constexpr const char* kVersion = "0.1.0";
}
