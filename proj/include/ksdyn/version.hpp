#pragma once

namespace ksdyn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ksdyn
