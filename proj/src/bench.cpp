#include "fog/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fog/codec.hpp"

namespace fog {

using nlohmann::json;

// Per-pixel cost constants of the analytic operation model. One stage spends
// roughly: 18 ops on the radiance data step, ~45 on its guided smoothing,
// 15 on the least-squares transmission, ~45 on the transmission guided
// filter and 9 on the residual. Non-local refinement costs one patch
// comparison (3 ops per patch sample) per search offset.
namespace {
constexpr double kStageOpsPerPixel = 18 + 45 + 15 + 45 + 9;
constexpr double kNlmOpsPerPatchSample = 3.0;
}  // namespace

double estimate_ops_model(std::size_t stages, bool nonlocal, int patch, int search, int width,
                          int height) {
    double pixels = static_cast<double>(width) * height;
    double ops = static_cast<double>(stages) * kStageOpsPerPixel * pixels;
    if (nonlocal)
        ops += pixels * static_cast<double>(patch) * patch * static_cast<double>(search) *
               search * kNlmOpsPerPatchSample;
    return ops;
}

double estimate_ops(const BranchParams& branch, int width, int height) {
    branch.validate();
    return estimate_ops_model(branch.stage_count(), branch.nonlocal_refine,
                              branch.nonlocal_patch, branch.nonlocal_search, width, height);
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchReport run_bench(const DatasetManifest& manifest, const TrainState& state, int repeats,
                      const RoutingThresholds& thr) {
    if (repeats < 5) throw ValidationError("run_bench: repeats must be >= 5");
    if (manifest.entries.empty()) throw ValidationError("run_bench: manifest is empty");

    BenchReport report;
    auto counts = manifest.level_counts();
    if (counts[0] != counts[1] || counts[1] != counts[2])
        report.warnings.push_back("manifest is not balanced across fog levels (" +
                                  std::to_string(counts[0]) + "/" + std::to_string(counts[1]) +
                                  "/" + std::to_string(counts[2]) + ")");

    std::size_t n = manifest.entries.size();
    std::vector<RgbImage> images(n);
    std::vector<int> routed(n);
    for (std::size_t i = 0; i < n; ++i) {
        images[i] = load_image(manifest.hazy_path(i));
        routed[i] = static_cast<int>(classify_level(estimate_density(images[i], state.hden), thr));
    }

    // timed[b][i] = median over repeats, measured single-threaded
    using clock = std::chrono::steady_clock;
    std::array<std::vector<double>, 3> timed;
    for (int b = 0; b < 3; ++b) {
        timed[b].resize(n);
        const BranchParams& branch = state.branches[b];
        for (std::size_t i = 0; i < n; ++i) {
            DehazeResult sink = dehaze(images[i], branch);  // warm-up
            sink = dehaze(images[i], branch);
            std::vector<double> ms(repeats);
            for (int r = 0; r < repeats; ++r) {
                auto t0 = clock::now();
                sink = dehaze(images[i], branch);
                auto t1 = clock::now();
                ms[r] = std::chrono::duration<double, std::milli>(t1 - t0).count();
            }
            timed[b][i] = median(std::move(ms));
        }
    }

    for (int b = 0; b < 3; ++b) {
        BranchBench bb;
        bb.branch = static_cast<FogLevel>(b);
        double mean = 0.0;
        for (double v : timed[b]) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : timed[b]) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        bb.mean_ms = mean;
        bb.std_ms = std::sqrt(var);
        bb.est_ops = estimate_ops(state.branches[b], images[0].width(), images[0].height());
        report.per_branch.push_back(bb);
    }

    double adaptive = 0.0, fixed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        adaptive += timed[routed[i]][i];
        fixed += timed[static_cast<int>(FogLevel::Heavy)][i];
    }
    report.adaptive_mean_ms = adaptive / static_cast<double>(n);
    report.fixed_baseline_ms = fixed / static_cast<double>(n);
    report.savings_fraction = 1.0 - report.adaptive_mean_ms / report.fixed_baseline_ms;
    return report;
}

void BenchReport::save_json(const std::filesystem::path& path) const {
    json doc;
    json branches = json::array();
    for (const BranchBench& b : per_branch)
        branches.push_back({{"branch", to_string(b.branch)},
                            {"mean_ms", b.mean_ms},
                            {"std_ms", b.std_ms},
                            {"est_ops", b.est_ops}});
    doc["per_branch"] = std::move(branches);
    doc["fixed_baseline_ms"] = fixed_baseline_ms;
    doc["adaptive_mean_ms"] = adaptive_mean_ms;
    doc["savings_fraction"] = savings_fraction;
    doc["warnings"] = warnings;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write bench report '" + path.string() + "'");
    out << doc.dump(2) << "\n";
}

void BenchReport::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write bench CSV '" + path.string() + "'");
    out << "branch,mean_ms,std_ms,est_ops\n";
    for (const BranchBench& b : per_branch)
        out << to_string(b.branch) << "," << format_double(b.mean_ms) << ","
            << format_double(b.std_ms) << "," << format_double(b.est_ops) << "\n";
    out << "fixed_baseline," << format_double(fixed_baseline_ms) << ",,\n";
    out << "adaptive," << format_double(adaptive_mean_ms) << ",,\n";
}

}  // namespace fog
