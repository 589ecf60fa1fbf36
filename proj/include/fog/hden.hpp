#ifndef FOG_HDEN_HPP
#define FOG_HDEN_HPP

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "fog/fogsim.hpp"
#include "fog/image.hpp"
#include "fog/level.hpp"

namespace fog {

/// Six flip-invariant scalar statistics of a hazy image, each in [0,1].
/// A deliberately small stand-in for a CNN backbone: haze lifts the dark
/// channel and suppresses contrast, saturation and gradients, which is
/// exactly what these capture.
struct HazeFeatures {
    double dark_channel_mean = 0.0;
    double dark_channel_p90 = 0.0;
    double rms_contrast = 0.0;
    double mean_saturation = 0.0;
    double gradient_energy = 0.0;
    double airlight_proximity = 0.0;

    std::array<double, 6> as_array() const {
        return {dark_channel_mean, dark_channel_p90,     rms_contrast,
                mean_saturation,   gradient_energy, airlight_proximity};
    }
};

/// Routing thresholds of the three-way branch dispatch: Light for d < alpha,
/// Medium for alpha <= d <= beta_thr (boundaries inclusive), Heavy above.
/// Named beta_thr to keep it apart from the scattering coefficient.
struct RoutingThresholds {
    double alpha = 1.0 / 3.0;
    double beta_thr = 2.0 / 3.0;

    void validate() const;
};

FogLevel classify_level(double d, const RoutingThresholds& thr);

/// 6 -> 8 -> 1 affine map, tanh hidden units, logistic output. Small enough
/// to train with deterministic full-batch gradient descent.
struct HdenParams {
    std::array<std::array<double, 6>, 8> w1{};
    std::array<double, 8> b1{};
    std::array<double, 8> w2{};
    double b2 = 0.0;

    static HdenParams zeros() { return {}; }
    static HdenParams seeded(std::uint64_t seed);

    static HdenParams load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    void validate() const;
};

HazeFeatures extract_features(const RgbImage& image);
double density_from_features(const HazeFeatures& features, const HdenParams& params);
/// d = squash(MLP(features(image))) in [0,1].
double estimate_density(const RgbImage& image, const HdenParams& params);

// ---- training --------------------------------------------------------

/// Regression target per stratum: the center of its routing band under the
/// default (1/3, 2/3) thresholds.
double regression_target(FogLevel level);

struct LabeledFeatures {
    HazeFeatures features;
    FogLevel level = FogLevel::Light;
};

/// Loads every hazy image of the manifest and extracts features in parallel.
std::vector<LabeledFeatures> collect_features(const DatasetManifest& manifest);

double hden_dataset_loss(const HdenParams& params, std::span<const LabeledFeatures> data);

struct HdenTrainReport {
    std::vector<double> train_loss;    // per epoch, after the epoch's update
    std::vector<double> val_accuracy;  // classify_level o estimate_density vs labels
    double final_lr = 0.0;
};

/// Full-batch gradient descent on the MSE to the band-center targets. The
/// step is rejected and the rate halved whenever it would increase the loss,
/// so the recorded loss sequence is non-increasing.
HdenParams train_hden(const DatasetManifest& train, const DatasetManifest& val, int epochs,
                      double lr, HdenTrainReport* report = nullptr,
                      const RoutingThresholds& thr = {});

/// One stochastic supervised step on already-extracted features; used by the
/// joint pipeline to keep refining the estimator. Returns the sample loss.
double hden_supervised_step(HdenParams& params, const HazeFeatures& features, double target,
                            double lr);

}  // namespace fog

#endif
