#ifndef FOG_UNFOLD_HPP
#define FOG_UNFOLD_HPP

#include <filesystem>
#include <vector>

#include "fog/fogsim.hpp"
#include "fog/hden.hpp"
#include "fog/image.hpp"
#include "fog/level.hpp"

namespace fog {

/// Learnable scalars of one unfolding stage. The guided-filter radius is
/// architectural (integer) and stays fixed during training; the three
/// continuous parameters are what gradient descent tunes.
struct StageParams {
    double fidelity_step = 0.8;          // step on the scattering-model data term
    int trans_smooth_radius = 8;         // guided-filter window for t
    double trans_smooth_eps = 1e-3;      // guided-filter regularizer
    double radiance_denoise_strength = 0.1;  // edge-preserving smoothing weight on J

    void validate(int width, int height) const;
};

/// One dehazing branch: 2 (Light), 4 (Medium) or 6 (Complex) stages, the
/// Complex branch followed by a non-local means refinement pass.
struct BranchParams {
    FogLevel kind = FogLevel::Light;
    std::vector<StageParams> stages;
    bool nonlocal_refine = false;
    int nonlocal_patch = 5;
    int nonlocal_search = 11;

    static BranchParams defaults(FogLevel kind);
    static BranchParams load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    void validate() const;

    std::size_t stage_count() const { return stages.size(); }
};

struct DehazeResult {
    RgbImage j_out;
    TransmissionMap t_out;
    std::vector<double> residual_trace;  // one entry per stage
    double initial_residual = 0.0;       // before the first stage
};

struct UnfoldOptions {
    bool proximal_smoothing = true;  // ablation hook: false skips both smoothing sub-steps
};

/// Mean color of the brightest 0.1% of pixels ranked by the per-pixel dark
/// channel (ties broken by color, so the estimate is a pure function of the
/// pixel multiset).
AtmosphericLight estimate_atmospheric_light(const RgbImage& hazy);

/// Dark-channel-prior initialization:
/// t0 = clamp(1 - 0.95 * min_c(P/A), floor, 1), then a 15x15 min filter.
TransmissionMap init_transmission(const RgbImage& hazy, const AtmosphericLight& airlight);

/// Working state threaded through the stages.
struct DehazeState {
    std::vector<double> j;  // RGB plane, kept raw between stages
    std::vector<double> t;
    int width = 0, height = 0;
    std::vector<double> residual_trace;
};

/// One half-quadratic-splitting-style stage: gradient step on the data term
/// plus edge-preserving smoothing for J, per-pixel least-squares transmission
/// plus guided filtering for t, then the coherence residual is appended.
void unfold_stage(DehazeState& state, const RgbImage& hazy, const AtmosphericLight& airlight,
                  const StageParams& stage, const UnfoldOptions& options = {});

DehazeResult dehaze(const RgbImage& hazy, const BranchParams& branch,
                    const UnfoldOptions& options = {});

struct RoutedResult {
    DehazeResult result;
    FogLevel level = FogLevel::Light;
    double density = 0.0;
};

RoutedResult route_and_dehaze(const RgbImage& hazy, const HdenParams& hden,
                              const RoutingThresholds& thr,
                              const std::array<BranchParams, 3>& branches,
                              const UnfoldOptions& options = {});

}  // namespace fog

#endif
