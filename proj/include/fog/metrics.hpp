#ifndef FOG_METRICS_HPP
#define FOG_METRICS_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fog/fogsim.hpp"
#include "fog/hden.hpp"
#include "fog/image.hpp"

namespace fog {

/// 10*log10(1/MSE) on [0,1] intensities; +inf for identical images
/// (serialized as the "inf" sentinel).
double psnr(const RgbImage& a, const RgbImage& b);

/// Single-scale SSIM on luma: 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, mean over all fully-covered window positions.
double ssim(const RgbImage& a, const RgbImage& b);

struct MetricRow {
    std::string image_id;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double density = 0.0;
    FogLevel level = FogLevel::Light;
    bool missing = false;  // restored file absent; excluded from means
};

struct LevelMean {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double density = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::vector<MetricRow> rows;                 // manifest order
    std::array<std::optional<LevelMean>, 3> level_means;
    std::vector<std::string> missing;            // restored files that were absent
};

/// Scores every manifest entry against its restored image in results_dir
/// (same file stem as the hazy image). Missing results flag the row and stay
/// out of the per-level means.
EvalReport evaluate_manifest(const DatasetManifest& manifest,
                             const std::filesystem::path& results_dir, const HdenParams& hden);

/// CSV schema: image_id,psnr_db,ssim,density,level (psnr "inf" allowed).
void write_metrics_csv(const EvalReport& report, const std::filesystem::path& path);

std::string format_double(double v);  // deterministic shortest-ish formatting

}  // namespace fog

#endif
