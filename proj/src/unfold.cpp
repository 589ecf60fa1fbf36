#include "fog/unfold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fog/filters.hpp"

namespace fog {

using nlohmann::json;

namespace {

constexpr int kDarkRadius = 7;        // 15x15 windows, matching the feature extractor
constexpr double kDcpOmega = 0.95;    // haze retention factor of the DCP initializer
constexpr int kRadianceRadius = 2;    // small window for the radiance proximal step
constexpr double kRadianceEps = 1e-3;

double mean_residual(const std::vector<double>& j, const std::vector<double>& t,
                     const RgbImage& hazy, const AtmosphericLight& airlight) {
    auto pv = hazy.data();
    double sum = 0.0;
    for (std::size_t p = 0; p < t.size(); ++p) {
        double tp = t[p];
        for (int c = 0; c < 3; ++c)
            sum += std::abs(j[p * 3 + c] * tp + airlight.channel(c) * (1.0 - tp) -
                            pv[p * 3 + c]);
    }
    return sum / static_cast<double>(t.size() * 3);
}

}  // namespace

void StageParams::validate(int width, int height) const {
    if (!(fidelity_step > 0.0) || !std::isfinite(fidelity_step))
        throw ValidationError("stage: fidelity_step must be positive");
    if (trans_smooth_radius < 1) throw ValidationError("stage: radius must be >= 1");
    if (trans_smooth_radius > std::min(width, height) / 4)
        throw ValidationError("stage: radius exceeds min(image dims)/4");
    if (!(trans_smooth_eps > 0.0) || !std::isfinite(trans_smooth_eps))
        throw ValidationError("stage: trans_smooth_eps must be positive");
    if (!(radiance_denoise_strength >= 0.0) || !std::isfinite(radiance_denoise_strength))
        throw ValidationError("stage: radiance_denoise_strength must be >= 0");
}

BranchParams BranchParams::defaults(FogLevel kind) {
    BranchParams b;
    b.kind = kind;
    std::size_t stages = kind == FogLevel::Light ? 2 : kind == FogLevel::Medium ? 4 : 6;
    b.stages.assign(stages, StageParams{});
    b.nonlocal_refine = kind == FogLevel::Heavy;
    return b;
}

void BranchParams::validate() const {
    std::size_t expected = kind == FogLevel::Light ? 2 : kind == FogLevel::Medium ? 4 : 6;
    if (stages.size() != expected)
        throw ValidationError(std::string("branch ") + to_string(kind) + " must have " +
                              std::to_string(expected) + " stages, has " +
                              std::to_string(stages.size()));
    if (nonlocal_refine && stages.size() != 6)
        throw ValidationError("nonlocal refinement is reserved for the 6-stage branch");
    if (nonlocal_patch < 1 || nonlocal_patch % 2 == 0 || nonlocal_search < 1 ||
        nonlocal_search % 2 == 0)
        throw ValidationError("nonlocal patch/search sizes must be odd and positive");
}

BranchParams BranchParams::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open branch params '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("branch '" + path.string() + "' is not valid JSON: " + e.what());
    }
    BranchParams b;
    try {
        b.kind = level_from_string(doc.at("kind").get<std::string>());
        for (const json& js : doc.at("stages")) {
            StageParams s;
            s.fidelity_step = js.at("fidelity_step").get<double>();
            s.trans_smooth_radius = js.at("trans_smooth_radius").get<int>();
            s.trans_smooth_eps = js.at("trans_smooth_eps").get<double>();
            s.radiance_denoise_strength = js.at("radiance_denoise_strength").get<double>();
            b.stages.push_back(s);
        }
        b.nonlocal_refine = doc.at("nonlocal_refine").get<bool>();
        b.nonlocal_patch = doc.at("nonlocal_patch").get<int>();
        b.nonlocal_search = doc.at("nonlocal_search").get<int>();
    } catch (const json::exception& e) {
        throw ValidationError("branch '" + path.string() + "' has bad schema: " + e.what());
    }
    b.validate();
    return b;
}

void BranchParams::save(const std::filesystem::path& path) const {
    json stages_j = json::array();
    for (const StageParams& s : stages) {
        stages_j.push_back({{"fidelity_step", s.fidelity_step},
                            {"trans_smooth_radius", s.trans_smooth_radius},
                            {"trans_smooth_eps", s.trans_smooth_eps},
                            {"radiance_denoise_strength", s.radiance_denoise_strength}});
    }
    json doc;
    doc["kind"] = to_string(kind);
    doc["stages"] = std::move(stages_j);
    doc["nonlocal_refine"] = nonlocal_refine;
    doc["nonlocal_patch"] = nonlocal_patch;
    doc["nonlocal_search"] = nonlocal_search;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write branch params '" + path.string() + "'");
    out << doc.dump(2) << "\n";
}

AtmosphericLight estimate_atmospheric_light(const RgbImage& hazy) {
    if (std::min(hazy.width(), hazy.height()) < 16)
        throw ValidationError("estimate_atmospheric_light: image must be at least 16px");
    std::size_t n = hazy.pixel_count();
    auto px = hazy.data();

    struct Ranked {
        double dark, luma, r, g, b;
        bool operator<(const Ranked& o) const {
            return std::tie(dark, luma, r, g, b) < std::tie(o.dark, o.luma, o.r, o.g, o.b);
        }
    };
    std::vector<Ranked> ranked(n);
    for (std::size_t p = 0; p < n; ++p) {
        double r = px[p * 3], g = px[p * 3 + 1], b = px[p * 3 + 2];
        ranked[p] = {std::min({r, g, b}), 0.299 * r + 0.587 * g + 0.114 * b, r, g, b};
    }
    std::size_t k = std::max<std::size_t>(1, n / 1000);
    std::nth_element(ranked.begin(), ranked.begin() + (n - k), ranked.end());
    // fully order the selected tail so ties at the cut resolve identically
    std::sort(ranked.begin() + (n - k), ranked.end());
    double r = 0.0, g = 0.0, b = 0.0;
    for (std::size_t i = n - k; i < n; ++i) {
        r += ranked[i].r;
        g += ranked[i].g;
        b += ranked[i].b;
    }
    return AtmosphericLight(r / k, g / k, b / k);
}

TransmissionMap init_transmission(const RgbImage& hazy, const AtmosphericLight& airlight) {
    for (int c = 0; c < 3; ++c)
        if (airlight.channel(c) <= 0.0)
            throw ValidationError("init_transmission: airlight channel must be positive");
    std::size_t n = hazy.pixel_count();
    auto px = hazy.data();
    // standard prior: the 15x15 min window applies to the normalized dark
    // channel, t = 1 - omega * min_window(min_c(P/A))
    std::vector<double> dark(n);
    for (std::size_t p = 0; p < n; ++p) {
        double ratio = px[p * 3] / airlight.channel(0);
        ratio = std::min(ratio, px[p * 3 + 1] / airlight.channel(1));
        ratio = std::min(ratio, px[p * 3 + 2] / airlight.channel(2));
        dark[p] = ratio;
    }
    dark = min_filter(dark, hazy.width(), hazy.height(), kDarkRadius);
    std::vector<double> t(n);
    for (std::size_t p = 0; p < n; ++p)
        t[p] = clamp(1.0 - kDcpOmega * dark[p], kTransmissionFloor, 1.0);
    return TransmissionMap(hazy.width(), hazy.height(), std::move(t));
}

void unfold_stage(DehazeState& state, const RgbImage& hazy, const AtmosphericLight& airlight,
                  const StageParams& stage, const UnfoldOptions& options) {
    int w = state.width, h = state.height;
    if (w != hazy.width() || h != hazy.height() ||
        state.j.size() != hazy.sample_count() || state.t.size() != hazy.pixel_count())
        throw ValidationError("unfold_stage: inconsistent state dimensions");
    stage.validate(w, h);

    std::size_t n = hazy.pixel_count();
    auto pv = hazy.data();
    const std::array<double, 3> a{airlight.channel(0), airlight.channel(1), airlight.channel(2)};

    // (a) radiance: gradient step on the data term, then proximal smoothing
    for (std::size_t p = 0; p < n; ++p) {
        double tp = state.t[p];
        for (int c = 0; c < 3; ++c) {
            double synth = state.j[p * 3 + c] * tp + a[c] * (1.0 - tp);
            state.j[p * 3 + c] += stage.fidelity_step * tp * (pv[p * 3 + c] - synth);
        }
    }
    if (options.proximal_smoothing && stage.radiance_denoise_strength > 0.0) {
        std::vector<double> guide(n);
        for (std::size_t p = 0; p < n; ++p)
            guide[p] = 0.299 * state.j[p * 3] + 0.587 * state.j[p * 3 + 1] +
                       0.114 * state.j[p * 3 + 2];
        double lam = stage.radiance_denoise_strength;
        for (int c = 0; c < 3; ++c) {
            std::vector<double> chan(n);
            for (std::size_t p = 0; p < n; ++p) chan[p] = state.j[p * 3 + c];
            std::vector<double> smooth = guided_filter(chan, guide, w, h, kRadianceRadius,
                                                       kRadianceEps);
            for (std::size_t p = 0; p < n; ++p)
                state.j[p * 3 + c] = (chan[p] + lam * smooth[p]) / (1.0 + lam);
        }
    }
    for (double& v : state.j) v = clamp01(v);

    // (b) transmission: per-pixel least squares given (P, J, A), guided filter
    std::vector<double> t_data(n);
    for (std::size_t p = 0; p < n; ++p) {
        double num = 0.0, den = 0.0;
        for (int c = 0; c < 3; ++c) {
            double ja = state.j[p * 3 + c] - a[c];
            num += ja * (pv[p * 3 + c] - a[c]);
            den += ja * ja;
        }
        // J ~ A leaves t unconstrained; keep the previous estimate there
        t_data[p] = den > 1e-9 ? num / den : state.t[p];
    }
    if (options.proximal_smoothing) {
        std::vector<double> guide(n);
        for (std::size_t p = 0; p < n; ++p)
            guide[p] = 0.299 * state.j[p * 3] + 0.587 * state.j[p * 3 + 1] +
                       0.114 * state.j[p * 3 + 2];
        t_data = guided_filter(t_data, guide, w, h, stage.trans_smooth_radius,
                               stage.trans_smooth_eps);
    }
    for (std::size_t p = 0; p < n; ++p)
        state.t[p] = clamp(t_data[p], kTransmissionFloor, 1.0);

    // (c) coherence residual for the trace
    state.residual_trace.push_back(mean_residual(state.j, state.t, hazy, airlight));
}

DehazeResult dehaze(const RgbImage& hazy, const BranchParams& branch,
                    const UnfoldOptions& options) {
    branch.validate();
    AtmosphericLight airlight = estimate_atmospheric_light(hazy);
    TransmissionMap t0 = init_transmission(hazy, airlight);
    RgbImage j0 = invert_haze(hazy, t0, airlight);

    DehazeState state;
    state.width = hazy.width();
    state.height = hazy.height();
    state.j.assign(j0.data().begin(), j0.data().end());
    state.t.assign(t0.data().begin(), t0.data().end());

    double initial = mean_residual(state.j, state.t, hazy, airlight);
    for (const StageParams& stage : branch.stages)
        unfold_stage(state, hazy, airlight, stage, options);

    RgbImage j_out(state.width, state.height, std::move(state.j));
    if (branch.nonlocal_refine)
        j_out = nlm_denoise(j_out, branch.nonlocal_patch, branch.nonlocal_search, 0.08);

    DehazeResult result{std::move(j_out),
                        TransmissionMap(state.width, state.height, std::move(state.t)),
                        std::move(state.residual_trace), initial};
    if (result.residual_trace.size() != branch.stage_count())
        throw InvariantError("dehaze: residual trace length diverged from stage count");
    return result;
}

RoutedResult route_and_dehaze(const RgbImage& hazy, const HdenParams& hden,
                              const RoutingThresholds& thr,
                              const std::array<BranchParams, 3>& branches,
                              const UnfoldOptions& options) {
    RoutedResult routed;
    routed.density = estimate_density(hazy, hden);
    routed.level = classify_level(routed.density, thr);
    routed.result = dehaze(hazy, branches[static_cast<int>(routed.level)], options);
    return routed;
}

}  // namespace fog
