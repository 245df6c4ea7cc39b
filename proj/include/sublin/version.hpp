#pragma once

namespace sublin {

inline constexpr const char* kLibraryVersion = "0.1.0";

} // namespace sublin
