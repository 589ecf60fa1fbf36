#ifndef FOG_FOGSIM_HPP
#define FOG_FOGSIM_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fog/image.hpp"
#include "fog/level.hpp"

namespace fog {

/// Per-meter attenuation of the scattering medium. 0.03 / 0.06 / 0.09 define
/// the canonical light / medium / heavy strata; any positive value is valid
/// for custom synthesis.
class ScatterCoefficient {
public:
    explicit ScatterCoefficient(double beta);
    double beta() const { return beta_; }

private:
    double beta_;
};

inline constexpr std::array<double, 3> kCanonicalBetas{0.03, 0.06, 0.09};

/// Global airlight color. Dataset generation samples each channel in a
/// configurable bright range; the type itself accepts any [0,1] color.
class AtmosphericLight {
public:
    AtmosphericLight(double r, double g, double b);
    double channel(int c) const { return rgb_[c]; }
    const std::array<double, 3>& rgb() const { return rgb_; }

private:
    std::array<double, 3> rgb_;
};

struct ManifestEntry {
    std::string clear;  // paths as resolved at synthesis time
    std::string depth;
    std::string hazy;  // relative to the manifest's directory
    double beta = 0.0;
    std::array<double, 3> airlight{1.0, 1.0, 1.0};
    FogLevel level = FogLevel::Light;
};

/// Persistent record of one synthesized dataset. Serialized as a single JSON
/// document; loading remembers the manifest's directory so relative hazy
/// paths resolve regardless of the caller's working directory.
struct DatasetManifest {
    std::uint64_t seed = 0;
    double meters_per_unit = 1.0;
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;  // not serialized

    static DatasetManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    void validate() const;

    std::filesystem::path clear_path(std::size_t i) const;
    std::filesystem::path depth_path(std::size_t i) const;
    std::filesystem::path hazy_path(std::size_t i) const;

    std::array<std::size_t, 3> level_counts() const;
};

// ---- scattering model --------------------------------------------------

/// t(x) = max(exp(-beta * depth(x)), floor). Zero depth (holes) gives t = 1.
TransmissionMap compute_transmission(const DepthMap& depth, const ScatterCoefficient& beta);

/// P = J*t + A*(1-t), clamped to [0,1] (a no-op for in-range inputs).
RgbImage synthesize_haze(const RgbImage& clear, const TransmissionMap& trans,
                         const AtmosphericLight& airlight);

/// Exact algebraic inverse J = (P - A*(1-t)) / t, clamped to [0,1]. Serves
/// as the data-fidelity step of unfolding and as a round-trip oracle.
RgbImage invert_haze(const RgbImage& hazy, const TransmissionMap& trans,
                     const AtmosphericLight& airlight);

// ---- dataset generation --------------------------------------------------

struct SynthesisOptions {
    std::vector<double> betas{kCanonicalBetas.begin(), kCanonicalBetas.end()};  // ascending
    double meters_per_unit = 1.0;
    double airlight_lo = 0.7;  // per-channel sampling range for A
    double airlight_hi = 1.0;
    std::size_t total = 0;  // 0 -> one slot per (pair, level)
};

/// Splits `total` logical slots 1:1:1 across the three levels, remainder on
/// Heavy (25,000 -> 8,333 / 8,333 / 8,334).
std::array<std::size_t, 3> level_allocation(std::size_t total);

/// Synthesizes one hazy image per slot and writes manifest.json plus the
/// hazy PNGs under out_dir. Deterministic for a fixed seed: airlight comes
/// from a per-slot stream and entry order is the canonical slot order, so
/// parallel workers cannot reorder the output.
DatasetManifest generate_dataset(
    const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& pairs,
    const std::filesystem::path& out_dir, std::uint64_t seed,
    const SynthesisOptions& options = {});

}  // namespace fog

#endif
