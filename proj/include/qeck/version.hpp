#pragma once

namespace qeck {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace qeck
