#ifndef FOG_LEVEL_HPP
#define FOG_LEVEL_HPP

#include <array>
#include <string>

#include "fog/common.hpp"

namespace fog {

/// Three-way fog stratum. Doubles as the identity of the dehazing branch
/// tailored to that stratum.
enum class FogLevel { Light = 0, Medium = 1, Heavy = 2 };

inline constexpr std::array<FogLevel, 3> kAllLevels{FogLevel::Light, FogLevel::Medium,
                                                    FogLevel::Heavy};

inline const char* to_string(FogLevel level) {
    switch (level) {
        case FogLevel::Light: return "Light";
        case FogLevel::Medium: return "Medium";
        case FogLevel::Heavy: return "Heavy";
    }
    return "?";
}

inline FogLevel level_from_string(const std::string& s) {
    if (s == "Light") return FogLevel::Light;
    if (s == "Medium") return FogLevel::Medium;
    if (s == "Heavy") return FogLevel::Heavy;
    throw ValidationError("unknown fog level label: '" + s + "'");
}

}  // namespace fog

#endif
