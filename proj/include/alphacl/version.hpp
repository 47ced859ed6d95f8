#pragma once

namespace alphacl {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace alphacl
