#pragma once

#include <string_view>

namespace stable_width {

inline constexpr std::string_view kLibraryVersion = "1.0.0";

// Bumped whenever a module's numerical output changes for a fixed seed.
inline constexpr std::string_view kModuleVersions =
    "stable_dist=1;heavy_tail=1;mlp=1;limit_theory=1;stats=1;counterexample=1;cli=1";

}  // namespace stable_width
