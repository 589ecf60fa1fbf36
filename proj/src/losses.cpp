#include "fog/losses.hpp"

#include <cmath>

#include "fog/filters.hpp"

namespace fog {

namespace {

constexpr double kAbsEps = 1e-8;  // |x| ~ sqrt(x^2 + eps^2) where gradients are needed

double smooth_abs(double x) { return std::sqrt(x * x + kAbsEps * kAbsEps); }
double smooth_abs_d(double x) { return x / std::sqrt(x * x + kAbsEps * kAbsEps); }

struct Plane {
    std::vector<double> v;
    int w = 0, h = 0;
};

std::vector<double> luma_plane(std::span<const double> rgb, std::size_t pixels) {
    std::vector<double> out(pixels);
    for (std::size_t p = 0; p < pixels; ++p)
        out[p] = 0.299 * rgb[p * 3] + 0.587 * rgb[p * 3 + 1] + 0.114 * rgb[p * 3 + 2];
    return out;
}

std::vector<Plane> gray_pyramid(std::span<const double> rgb, int width, int height,
                                std::size_t levels) {
    std::vector<Plane> pyr(levels);
    pyr[0].v = luma_plane(rgb, static_cast<std::size_t>(width) * height);
    pyr[0].w = width;
    pyr[0].h = height;
    for (std::size_t i = 1; i < levels; ++i) {
        pyr[i].v = downsample2(pyr[i - 1].v, pyr[i - 1].w, pyr[i - 1].h, pyr[i].w, pyr[i].h);
    }
    return pyr;
}

void require_pyramid_fits(int width, int height, std::size_t levels) {
    int need = 1 << (levels - 1);
    if (std::min(width, height) < need)
        throw ValidationError("perceptual pyramid with " + std::to_string(levels) +
                              " levels needs images at least " + std::to_string(need) +
                              "px on a side");
}

// Per-level term: mean over pixels of |dg| + |dgx| + |dgy| where dgx/dgy are
// forward differences of the luma difference (zero on the trailing edge).
template <typename Abs>
double level_term(const Plane& a, const Plane& b, Abs abs_fn) {
    int w = a.w, h = a.h;
    double sum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t p = static_cast<std::size_t>(y) * w + x;
            double dg = a.v[p] - b.v[p];
            sum += abs_fn(dg);
            if (x + 1 < w) sum += abs_fn((a.v[p + 1] - b.v[p + 1]) - dg);
            if (y + 1 < h) sum += abs_fn((a.v[p + w] - b.v[p + w]) - dg);
        }
    return sum / static_cast<double>(static_cast<std::size_t>(w) * h);
}

template <typename Abs>
double perceptual_value(std::span<const double> out_rgb, int width, int height,
                        const RgbImage& gt, const std::vector<double>& tau, Abs abs_fn) {
    require_pyramid_fits(width, height, tau.size());
    std::vector<Plane> pa = gray_pyramid(out_rgb, width, height, tau.size());
    std::vector<Plane> pb = gray_pyramid(gt.data(), width, height, tau.size());
    double total = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) total += tau[i] * level_term(pa[i], pb[i], abs_fn);
    return total;
}

template <typename Abs>
double coherence_value(std::span<const double> j, const TransmissionMap& t,
                       const RgbImage& hazy, Abs abs_fn) {
    auto tv = t.data();
    auto pv = hazy.data();
    double sum = 0.0;
    for (std::size_t p = 0; p < t.pixel_count(); ++p) {
        double tp = tv[p];
        for (int c = 0; c < 3; ++c)
            sum += abs_fn(j[p * 3 + c] * tp + (1.0 - tp) - pv[p * 3 + c]);
    }
    return sum / static_cast<double>(t.pixel_count() * 3);
}

double exact_abs(double x) { return std::abs(x); }

}  // namespace

void GammaSchedule::validate() const {
    thresholds.validate();
    for (double g : {light, medium, heavy})
        if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("gamma values must lie in [0,1]");
}

void PerceptualWeights::validate() const {
    if (tau.empty()) throw ValidationError("perceptual weights: need at least one level");
    bool any = false;
    for (double v : tau) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("perceptual weights must be non-negative");
        any = any || v > 0.0;
    }
    if (!any) throw ValidationError("perceptual weights: at least one must be positive");
}

double gamma_of(double d, const GammaSchedule& sched) {
    sched.validate();
    switch (classify_level(d, sched.thresholds)) {
        case FogLevel::Light: return sched.light;
        case FogLevel::Medium: return sched.medium;
        case FogLevel::Heavy: return sched.heavy;
    }
    return sched.medium;
}

double coherence_loss(const RgbImage& j_out, const TransmissionMap& t_out,
                      const RgbImage& hazy) {
    if (!t_out.same_shape(j_out) || !j_out.same_shape(hazy))
        throw ValidationError("coherence_loss: dimension mismatch");
    return coherence_value(j_out.data(), t_out, hazy, exact_abs);
}

double perceptual_loss(const RgbImage& j_gt, const RgbImage& j_out,
                       const PerceptualWeights& weights) {
    weights.validate();
    if (!j_gt.same_shape(j_out)) throw ValidationError("perceptual_loss: dimension mismatch");
    return perceptual_value(j_out.data(), j_out.width(), j_out.height(), j_gt, weights.tau,
                            exact_abs);
}

double density_loss(const RgbImage& j_out, const HdenParams& hden) {
    return estimate_density(j_out, hden);  // the score is already >= 0
}

LossReport compose_loss_report(double coh, double contra_rec, double dens, double d,
                               const GammaSchedule& sched) {
    LossReport r;
    r.coh = coh;
    r.contra_rec = contra_rec;
    r.dens = dens;
    r.gamma = gamma_of(d, sched);
    r.total = r.gamma * coh + (1.0 - r.gamma) * contra_rec + dens;
    return r;
}

LossReport adaptive_loss(const RgbImage& j_out, const TransmissionMap& t_out,
                         const RgbImage& j_gt, const RgbImage& hazy, double d,
                         const GammaSchedule& sched, const PerceptualWeights& weights,
                         const HdenParams& hden) {
    return compose_loss_report(coherence_loss(j_out, t_out, hazy),
                               perceptual_loss(j_gt, j_out, weights),
                               density_loss(j_out, hden), d, sched);
}

double smoothed_reconstruction_objective(std::span<const double> j_out, int width, int height,
                                         const TransmissionMap& t_out, const RgbImage& j_gt,
                                         const RgbImage& hazy, double d,
                                         const GammaSchedule& sched,
                                         const PerceptualWeights& weights) {
    weights.validate();
    if (j_out.size() != static_cast<std::size_t>(width) * height * 3)
        throw ValidationError("smoothed objective: plane size mismatch");
    double gamma = gamma_of(d, sched);
    double coh = coherence_value(j_out, t_out, hazy, smooth_abs);
    double perc = perceptual_value(j_out, width, height, j_gt, weights.tau, smooth_abs);
    return gamma * coh + (1.0 - gamma) * perc;
}

std::vector<double> smoothed_reconstruction_gradient(std::span<const double> j_out, int width,
                                                     int height, const TransmissionMap& t_out,
                                                     const RgbImage& j_gt, const RgbImage& hazy,
                                                     double d, const GammaSchedule& sched,
                                                     const PerceptualWeights& weights) {
    weights.validate();
    require_pyramid_fits(width, height, weights.tau.size());
    std::size_t pixels = static_cast<std::size_t>(width) * height;
    if (j_out.size() != pixels * 3)
        throw ValidationError("smoothed gradient: plane size mismatch");
    double gamma = gamma_of(d, sched);

    std::vector<double> grad(pixels * 3, 0.0);

    // coherence part: d/dj of mean s(j*t + (1-t) - p) is t * s'(r) / (3N)
    auto tv = t_out.data();
    auto pv = hazy.data();
    double coh_scale = gamma / static_cast<double>(pixels * 3);
    for (std::size_t p = 0; p < pixels; ++p) {
        double tp = tv[p];
        for (int c = 0; c < 3; ++c) {
            double r = j_out[p * 3 + c] * tp + (1.0 - tp) - pv[p * 3 + c];
            grad[p * 3 + c] += coh_scale * tp * smooth_abs_d(r);
        }
    }

    // perceptual part: back-propagate through the gray pyramid
    std::size_t levels = weights.tau.size();
    std::vector<Plane> pa = gray_pyramid(j_out, width, height, levels);
    std::vector<Plane> pb = gray_pyramid(j_gt.data(), width, height, levels);

    // gradient wrt each level's gray plane, finest last after upsampling
    std::vector<double> acc;  // gradient wrt pa[i] accumulated down to level 0
    for (std::size_t i = levels; i-- > 0;) {
        const Plane& a = pa[i];
        const Plane& b = pb[i];
        int w = a.w, h = a.h;
        double scale =
            (1.0 - gamma) * weights.tau[i] / static_cast<double>(static_cast<std::size_t>(w) * h);
        std::vector<double> dg(a.v.size(), 0.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                std::size_t p = static_cast<std::size_t>(y) * w + x;
                double delta = a.v[p] - b.v[p];
                dg[p] += scale * smooth_abs_d(delta);
                if (x + 1 < w) {
                    double c = scale * smooth_abs_d((a.v[p + 1] - b.v[p + 1]) - delta);
                    dg[p + 1] += c;
                    dg[p] -= c;
                }
                if (y + 1 < h) {
                    double c = scale * smooth_abs_d((a.v[p + w] - b.v[p + w]) - delta);
                    dg[p + w] += c;
                    dg[p] -= c;
                }
            }
        if (i + 1 == levels) {
            acc = std::move(dg);
        } else {
            for (std::size_t k = 0; k < dg.size(); ++k) dg[k] += acc[k];
            acc = std::move(dg);
        }
        if (i > 0) {
            // adjoint of 2x2 average pooling: spread a quarter to each source
            const Plane& src = pa[i - 1];
            std::vector<double> up(src.v.size(), 0.0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double q = 0.25 * acc[static_cast<std::size_t>(y) * w + x];
                    std::size_t base = static_cast<std::size_t>(2 * y) * src.w + 2 * x;
                    up[base] += q;
                    up[base + 1] += q;
                    up[base + src.w] += q;
                    up[base + src.w + 1] += q;
                }
            acc = std::move(up);
        }
    }

    // luma adjoint back to RGB
    for (std::size_t p = 0; p < pixels; ++p) {
        grad[p * 3] += acc[p] * 0.299;
        grad[p * 3 + 1] += acc[p] * 0.587;
        grad[p * 3 + 2] += acc[p] * 0.114;
    }
    return grad;
}

}  // namespace fog
