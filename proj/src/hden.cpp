#include "fog/hden.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fog/codec.hpp"
#include "fog/filters.hpp"

namespace fog {

using nlohmann::json;

void RoutingThresholds::validate() const {
    if (!(alpha > 0.0 && alpha < beta_thr && beta_thr < 1.0))
        throw ValidationError("routing thresholds must satisfy 0 < alpha < beta_thr < 1");
}

FogLevel classify_level(double d, const RoutingThresholds& thr) {
    thr.validate();
    if (d < thr.alpha) return FogLevel::Light;
    if (d <= thr.beta_thr) return FogLevel::Medium;  // boundaries fall into Medium
    return FogLevel::Heavy;
}

// ---- features --------------------------------------------------------

namespace {

constexpr int kDarkChannelRadius = 7;  // 15x15 window

double percentile90(std::vector<double> values) {
    // nearest-rank
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.9 * values.size()));
    if (rank == 0) rank = 1;
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

}  // namespace

HazeFeatures extract_features(const RgbImage& image) {
    if (std::min(image.width(), image.height()) < 16)
        throw ValidationError("extract_features: image must be at least 16px on a side");

    int w = image.width(), h = image.height();
    std::size_t n = image.pixel_count();
    auto px = image.data();

    std::vector<double> channel_min(n), gray = luma(image);
    double sat_sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        double r = px[p * 3], g = px[p * 3 + 1], b = px[p * 3 + 2];
        double lo = std::min({r, g, b}), hi = std::max({r, g, b});
        channel_min[p] = lo;
        sat_sum += hi > 0.0 ? (hi - lo) / hi : 0.0;
    }
    std::vector<double> dark = min_filter(channel_min, w, h, kDarkChannelRadius);

    double dark_sum = 0.0;
    for (double v : dark) dark_sum += v;

    double mean_l = 0.0;
    for (double v : gray) mean_l += v;
    mean_l /= static_cast<double>(n);
    double var_l = 0.0;
    for (double v : gray) var_l += (v - mean_l) * (v - mean_l);
    var_l /= static_cast<double>(n);

    // mean forward-difference magnitude of the luma; each diff is <= 1
    double grad_sum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t p = static_cast<std::size_t>(y) * w + x;
            double gx = x + 1 < w ? std::abs(gray[p + 1] - gray[p]) : 0.0;
            double gy = y + 1 < h ? std::abs(gray[p + w] - gray[p]) : 0.0;
            grad_sum += 0.5 * (gx + gy);
        }

    // brightest pixel by (luma, r, g, b); the lexicographic tie-break keeps
    // the choice a pure function of the pixel multiset
    std::array<double, 4> best{-1.0, 0.0, 0.0, 0.0};
    for (std::size_t p = 0; p < n; ++p) {
        std::array<double, 4> cand{gray[p], px[p * 3], px[p * 3 + 1], px[p * 3 + 2]};
        if (cand > best) best = cand;
    }
    double dist_sum = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        dist_sum += (std::abs(px[p * 3] - best[1]) + std::abs(px[p * 3 + 1] - best[2]) +
                     std::abs(px[p * 3 + 2] - best[3])) /
                    3.0;

    HazeFeatures f;
    f.dark_channel_mean = dark_sum / static_cast<double>(n);
    f.dark_channel_p90 = percentile90(dark);
    f.rms_contrast = std::min(1.0, 2.0 * std::sqrt(var_l));
    f.mean_saturation = sat_sum / static_cast<double>(n);
    f.gradient_energy = std::min(1.0, grad_sum / static_cast<double>(n));
    f.airlight_proximity = 1.0 - dist_sum / static_cast<double>(n);
    return f;
}

// ---- params / forward --------------------------------------------------

HdenParams HdenParams::seeded(std::uint64_t seed) {
    SplitMix64 rng(seed);
    HdenParams p;
    for (auto& row : p.w1)
        for (double& v : row) v = rng.uniform(-0.5, 0.5);
    for (double& v : p.b1) v = 0.0;
    for (double& v : p.w2) v = rng.uniform(-0.5, 0.5);
    p.b2 = 0.0;
    return p;
}

void HdenParams::validate() const {
    auto ok = [](double v) { return std::isfinite(v); };
    for (const auto& row : w1)
        for (double v : row)
            if (!ok(v)) throw ValidationError("HdenParams: non-finite weight");
    for (double v : b1)
        if (!ok(v)) throw ValidationError("HdenParams: non-finite bias");
    for (double v : w2)
        if (!ok(v)) throw ValidationError("HdenParams: non-finite weight");
    if (!ok(b2)) throw ValidationError("HdenParams: non-finite bias");
}

HdenParams HdenParams::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open params '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("params '" + path.string() + "' is not valid JSON: " + e.what());
    }
    HdenParams p;
    try {
        const json& l1 = doc.at("layer1");
        const json& l2 = doc.at("layer2");
        for (int j = 0; j < 8; ++j) {
            for (int k = 0; k < 6; ++k) p.w1[j][k] = l1.at("w").at(j).at(k).get<double>();
            p.b1[j] = l1.at("b").at(j).get<double>();
        }
        for (int j = 0; j < 8; ++j) p.w2[j] = l2.at("w").at(0).at(j).get<double>();
        p.b2 = l2.at("b").at(0).get<double>();
    } catch (const json::exception& e) {
        throw ValidationError("params '" + path.string() + "' has bad schema: " + e.what());
    }
    p.validate();
    return p;
}

void HdenParams::save(const std::filesystem::path& path) const {
    json l1w = json::array(), l1b = json::array();
    for (int j = 0; j < 8; ++j) {
        json row = json::array();
        for (int k = 0; k < 6; ++k) row.push_back(w1[j][k]);
        l1w.push_back(std::move(row));
        l1b.push_back(b1[j]);
    }
    json l2w = json::array();
    json l2row = json::array();
    for (int j = 0; j < 8; ++j) l2row.push_back(w2[j]);
    l2w.push_back(std::move(l2row));
    json doc;
    doc["layer1"] = {{"w", std::move(l1w)}, {"b", std::move(l1b)}};
    doc["layer2"] = {{"w", std::move(l2w)}, {"b", json::array({b2})}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write params '" + path.string() + "'");
    out << doc.dump(2) << "\n";
}

namespace {

struct Forward {
    std::array<double, 8> hidden;
    double d;
};

Forward forward(const HazeFeatures& features, const HdenParams& p) {
    auto f = features.as_array();
    Forward fw;
    double z2 = p.b2;
    for (int j = 0; j < 8; ++j) {
        double a = p.b1[j];
        for (int k = 0; k < 6; ++k) a += p.w1[j][k] * f[k];
        fw.hidden[j] = std::tanh(a);
        z2 += p.w2[j] * fw.hidden[j];
    }
    fw.d = 1.0 / (1.0 + std::exp(-z2));
    return fw;
}

struct Gradient {
    std::array<std::array<double, 6>, 8> w1{};
    std::array<double, 8> b1{};
    std::array<double, 8> w2{};
    double b2 = 0.0;

    void add_sample(const HazeFeatures& features, const Forward& fw, double target,
                    const HdenParams& p, double scale) {
        auto f = features.as_array();
        double dz = scale * 2.0 * (fw.d - target) * fw.d * (1.0 - fw.d);
        b2 += dz;
        for (int j = 0; j < 8; ++j) {
            w2[j] += dz * fw.hidden[j];
            double da = dz * p.w2[j] * (1.0 - fw.hidden[j] * fw.hidden[j]);
            b1[j] += da;
            for (int k = 0; k < 6; ++k) w1[j][k] += da * f[k];
        }
    }
};

void apply_step(HdenParams& p, const Gradient& g, double lr) {
    for (int j = 0; j < 8; ++j) {
        for (int k = 0; k < 6; ++k) p.w1[j][k] -= lr * g.w1[j][k];
        p.b1[j] -= lr * g.b1[j];
        p.w2[j] -= lr * g.w2[j];
    }
    p.b2 -= lr * g.b2;
}

void require_all_levels(const DatasetManifest& m, const char* what) {
    if (m.entries.empty()) throw ValidationError(std::string(what) + ": manifest is empty");
    auto counts = m.level_counts();
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
        throw ValidationError(std::string(what) + ": manifest must contain all three fog levels");
}

}  // namespace

double density_from_features(const HazeFeatures& features, const HdenParams& params) {
    return forward(features, params).d;
}

double estimate_density(const RgbImage& image, const HdenParams& params) {
    return density_from_features(extract_features(image), params);
}

double regression_target(FogLevel level) {
    switch (level) {
        case FogLevel::Light: return 1.0 / 6.0;
        case FogLevel::Medium: return 0.5;
        case FogLevel::Heavy: return 5.0 / 6.0;
    }
    return 0.5;
}

std::vector<LabeledFeatures> collect_features(const DatasetManifest& manifest) {
    std::vector<LabeledFeatures> out(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        out[i].features = extract_features(load_image(manifest.hazy_path(i)));
        out[i].level = manifest.entries[i].level;
    });
    return out;
}

double hden_dataset_loss(const HdenParams& params, std::span<const LabeledFeatures> data) {
    if (data.empty()) throw ValidationError("hden_dataset_loss: no samples");
    double sum = 0.0;
    for (const LabeledFeatures& s : data) {
        double e = density_from_features(s.features, params) - regression_target(s.level);
        sum += e * e;
    }
    return sum / static_cast<double>(data.size());
}

HdenParams train_hden(const DatasetManifest& train, const DatasetManifest& val, int epochs,
                      double lr, HdenTrainReport* report, const RoutingThresholds& thr) {
    if (epochs < 1) throw ValidationError("train_hden: epochs must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("train_hden: learning rate must be positive");
    thr.validate();
    require_all_levels(train, "train_hden(train)");
    require_all_levels(val, "train_hden(val)");

    std::vector<LabeledFeatures> train_data = collect_features(train);
    std::vector<LabeledFeatures> val_data = collect_features(val);

    HdenParams params = HdenParams::seeded(0x5eedf00dull);

    auto val_accuracy = [&](const HdenParams& p) {
        std::size_t hits = 0;
        for (const LabeledFeatures& s : val_data)
            if (classify_level(density_from_features(s.features, p), thr) == s.level) ++hits;
        return static_cast<double>(hits) / static_cast<double>(val_data.size());
    };

    double step = lr;
    double loss = hden_dataset_loss(params, train_data);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Gradient grad;
        double scale = 1.0 / static_cast<double>(train_data.size());
        for (const LabeledFeatures& s : train_data)
            grad.add_sample(s.features, forward(s.features, params), regression_target(s.level),
                            params, scale);

        HdenParams candidate = params;
        apply_step(candidate, grad, step);
        double new_loss = hden_dataset_loss(candidate, train_data);
        if (new_loss > loss) {
            step *= 0.5;  // reject the step; loss stays where it was
        } else {
            params = candidate;
            loss = new_loss;
            step *= 1.2;  // cautious growth; the next increase halves it again
        }
        if (report) {
            report->train_loss.push_back(loss);
            report->val_accuracy.push_back(val_accuracy(params));
        }
    }
    if (report) report->final_lr = step;
    return params;
}

double hden_supervised_step(HdenParams& params, const HazeFeatures& features, double target,
                            double lr) {
    Forward fw = forward(features, params);
    Gradient grad;
    grad.add_sample(features, fw, target, params, 1.0);
    apply_step(params, grad, lr);
    double e = fw.d - target;
    return e * e;
}

}  // namespace fog
