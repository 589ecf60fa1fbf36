#ifndef FOG_LOSSES_HPP
#define FOG_LOSSES_HPP

#include <span>
#include <vector>

#include "fog/hden.hpp"
#include "fog/image.hpp"

namespace fog {

/// Fog-level-dependent weight balancing physical coherence against the
/// perceptual term: 0.3 / 0.6 / 0.9 over the same bands as classify_level.
struct GammaSchedule {
    double light = 0.3;
    double medium = 0.6;
    double heavy = 0.9;
    RoutingThresholds thresholds;

    void validate() const;
};

/// Per-pyramid-level weights of the perceptual term.
struct PerceptualWeights {
    std::vector<double> tau{0.25, 0.25, 0.25, 0.25};

    void validate() const;
};

struct LossReport {
    double coh = 0.0;
    double contra_rec = 0.0;
    double dens = 0.0;
    double gamma = 0.0;
    double total = 0.0;  // gamma*coh + (1-gamma)*contra_rec + dens, exactly
};

double gamma_of(double d, const GammaSchedule& sched);

/// Mean absolute reconstruction error of the hazy observation with the
/// airlight normalized to 1: mean |J*t + (1-t) - P| over pixels and channels.
double coherence_loss(const RgbImage& j_out, const TransmissionMap& t_out,
                      const RgbImage& hazy);

/// Multi-scale feature distance: sum_i tau_i * mean_p |phi_i(gt) - phi_i(out)|
/// where phi_i stacks {luma, horizontal gradient, vertical gradient} of the
/// luma downsampled by 2^i. A fixed, training-free stand-in for a pretrained
/// feature network; per-level terms are means over pixels of the
/// channel-summed distance.
double perceptual_loss(const RgbImage& j_gt, const RgbImage& j_out,
                       const PerceptualWeights& weights);

/// Residual-haze penalty: the estimated density of the restored image.
double density_loss(const RgbImage& j_out, const HdenParams& hden);

/// Assembles the Eq.-style composite from already-computed components.
LossReport compose_loss_report(double coh, double contra_rec, double dens, double d,
                               const GammaSchedule& sched);

LossReport adaptive_loss(const RgbImage& j_out, const TransmissionMap& t_out,
                         const RgbImage& j_gt, const RgbImage& hazy, double d,
                         const GammaSchedule& sched, const PerceptualWeights& weights,
                         const HdenParams& hden);

// ---- smoothed objective for gradient checks ------------------------------

/// The differentiable part of the composite, with |x| ~ sqrt(x^2 + eps^2):
/// gamma*coh + (1-gamma)*perceptual. j_out travels as a raw plane so finite
/// difference probes may step outside [0,1] without tripping validation.
double smoothed_reconstruction_objective(std::span<const double> j_out, int width, int height,
                                         const TransmissionMap& t_out, const RgbImage& j_gt,
                                         const RgbImage& hazy, double d,
                                         const GammaSchedule& sched,
                                         const PerceptualWeights& weights);

/// Analytic gradient of smoothed_reconstruction_objective with respect to
/// every j_out sample (length width*height*3).
std::vector<double> smoothed_reconstruction_gradient(std::span<const double> j_out, int width,
                                                     int height, const TransmissionMap& t_out,
                                                     const RgbImage& j_gt, const RgbImage& hazy,
                                                     double d, const GammaSchedule& sched,
                                                     const PerceptualWeights& weights);

}  // namespace fog

#endif
