#ifndef FOG_PIPELINE_HPP
#define FOG_PIPELINE_HPP

#include <array>
#include <optional>
#include <set>

#include "fog/losses.hpp"
#include "fog/metrics.hpp"
#include "fog/unfold.hpp"

namespace fog {

enum class AblationFlag { DropCoherence, DropContra, DropDensity, DropProximal };

const char* to_string(AblationFlag flag);
AblationFlag ablation_from_string(const std::string& name);

struct TrainConfig {
    int epochs = 10;
    double lr = 0.05;
    RoutingThresholds thresholds;
    GammaSchedule gamma;  // gamma.thresholds mirrors `thresholds`
    std::uint64_t seed = 0;
    std::set<AblationFlag> ablation;
    PerceptualWeights perceptual;
    int hden_epochs = 200;  // density-estimator pretraining budget
    double hden_lr = 0.5;

    void validate() const;
    static TrainConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct TrainState {
    HdenParams hden;
    std::array<BranchParams, 3> branches{BranchParams::defaults(FogLevel::Light),
                                         BranchParams::defaults(FogLevel::Medium),
                                         BranchParams::defaults(FogLevel::Heavy)};
    int epoch = 0;
    std::vector<LossReport> loss_history;  // per-epoch means

    /// Directory layout: hden.json, light.json, medium.json, complex.json,
    /// history.csv.
    void save(const std::filesystem::path& dir) const;
    static TrainState load(const std::filesystem::path& dir);
};

/// The continuous per-stage scalars gradient descent tunes (the integer
/// guided-filter radius is architectural and excluded).
std::vector<double> branch_trainable(const BranchParams& branch);
void set_branch_trainable(BranchParams& branch, std::span<const double> values);

/// Joint training: the density estimator is pretrained, then each image
/// updates its routed branch by central finite differences over the stage
/// scalars and co-refines the estimator head analytically. One image touches
/// exactly one branch. Deterministic for a fixed config.
TrainState train(const TrainConfig& config, const DatasetManifest& train_manifest,
                 const DatasetManifest& val_manifest);

/// Mean adaptive loss of the trained pipeline over a manifest (components
/// honor the config's ablation flags).
LossReport mean_validation_loss(const TrainState& state, const DatasetManifest& manifest,
                                const TrainConfig& config);

struct RunSummary {
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_density = 0.0;
    double residual_final_mean = 0.0;
    double residual_final_var = 0.0;
};

struct AblationReport {
    AblationFlag flag = AblationFlag::DropCoherence;
    RunSummary full;
    RunSummary ablated;
};

/// Trains the full and the single-flag-ablated pipeline on the same seed and
/// manifests, then scores both on the validation set.
AblationReport ablate(const TrainConfig& config, const DatasetManifest& train_manifest,
                      const DatasetManifest& val_manifest);

/// Scores a trained state on a manifest without touching the filesystem.
RunSummary summarize_run(const TrainState& state, const DatasetManifest& manifest,
                         const TrainConfig& config);

struct InferSummary {
    EvalReport metrics;
    std::array<std::size_t, 3> routed_counts{0, 0, 0};
};

/// Routes and restores every manifest entry, writes the restored PNGs and
/// metrics.csv under out_dir.
InferSummary infer_batch(const DatasetManifest& manifest, const TrainState& state,
                         const std::filesystem::path& out_dir,
                         std::optional<FogLevel> force_level = {},
                         const RoutingThresholds& thr = {},
                         const UnfoldOptions& options = {});

}  // namespace fog

#endif
