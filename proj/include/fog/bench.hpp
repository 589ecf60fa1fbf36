#ifndef FOG_BENCH_HPP
#define FOG_BENCH_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fog/pipeline.hpp"

namespace fog {

struct BranchBench {
    FogLevel branch = FogLevel::Light;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double est_ops = 0.0;
};

struct BenchReport {
    std::vector<BranchBench> per_branch;  // Light, Medium, Heavy
    double fixed_baseline_ms = 0.0;       // Complex branch on every image
    double adaptive_mean_ms = 0.0;        // routed branch per image
    double savings_fraction = 0.0;        // 1 - adaptive/fixed
    std::vector<std::string> warnings;

    void save_json(const std::filesystem::path& path) const;
    void save_csv(const std::filesystem::path& path) const;
};

/// Closed-form arithmetic-operation model (not hardware FLOPs): per-pixel
/// stage costs times pixel count, plus the non-local refinement term. Linear
/// in pixel count by construction.
double estimate_ops(const BranchParams& branch, int width, int height);
double estimate_ops_model(std::size_t stages, bool nonlocal, int patch, int search, int width,
                          int height);

/// Wall-clock profile: every branch runs on every image `repeats` times after
/// two warm-ups; the per-image statistic is the median of repeats, branch
/// means aggregate over images. Timed regions are single-threaded. The
/// adaptive row reuses the routed branch's timings so the comparison against
/// the fixed-Complex baseline sees identical measurement noise.
BenchReport run_bench(const DatasetManifest& manifest, const TrainState& state, int repeats,
                      const RoutingThresholds& thr = {});

}  // namespace fog

#endif
