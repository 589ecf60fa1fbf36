#include "fog/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fog/codec.hpp"

namespace fog {

using nlohmann::json;

const char* to_string(AblationFlag flag) {
    switch (flag) {
        case AblationFlag::DropCoherence: return "drop-coh";
        case AblationFlag::DropContra: return "drop-contra";
        case AblationFlag::DropDensity: return "drop-dens";
        case AblationFlag::DropProximal: return "drop-proximal";
    }
    return "?";
}

AblationFlag ablation_from_string(const std::string& name) {
    if (name == "drop-coh") return AblationFlag::DropCoherence;
    if (name == "drop-contra") return AblationFlag::DropContra;
    if (name == "drop-dens") return AblationFlag::DropDensity;
    if (name == "drop-proximal") return AblationFlag::DropProximal;
    throw ValidationError("unknown ablation flag '" + name + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("train config: lr must be positive");
    thresholds.validate();
    gamma.validate();
    perceptual.validate();
    if (hden_epochs < 1 || !(hden_lr > 0.0))
        throw ValidationError("train config: hden pretraining settings invalid");
    if (ablation.size() > 3)
        throw ValidationError("train config: at most 3 ablation flags may be set");
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open train config '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    TrainConfig c;
    try {
        c.epochs = doc.value("epochs", c.epochs);
        c.lr = doc.value("lr", c.lr);
        c.seed = doc.value("seed", c.seed);
        c.thresholds.alpha = doc.value("alpha", c.thresholds.alpha);
        c.thresholds.beta_thr = doc.value("beta_thr", c.thresholds.beta_thr);
        if (doc.contains("gamma")) {
            c.gamma.light = doc["gamma"].value("light", c.gamma.light);
            c.gamma.medium = doc["gamma"].value("medium", c.gamma.medium);
            c.gamma.heavy = doc["gamma"].value("heavy", c.gamma.heavy);
        }
        if (doc.contains("tau")) c.perceptual.tau = doc["tau"].get<std::vector<double>>();
        if (doc.contains("ablation"))
            for (const json& flag : doc["ablation"])
                c.ablation.insert(ablation_from_string(flag.get<std::string>()));
        c.hden_epochs = doc.value("hden_epochs", c.hden_epochs);
        c.hden_lr = doc.value("hden_lr", c.hden_lr);
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path.string() + "' has bad schema: " + e.what());
    }
    c.gamma.thresholds = c.thresholds;
    c.validate();
    return c;
}

void TrainConfig::save(const std::filesystem::path& path) const {
    json doc;
    doc["epochs"] = epochs;
    doc["lr"] = lr;
    doc["seed"] = seed;
    doc["alpha"] = thresholds.alpha;
    doc["beta_thr"] = thresholds.beta_thr;
    doc["gamma"] = {{"light", gamma.light}, {"medium", gamma.medium}, {"heavy", gamma.heavy}};
    doc["tau"] = perceptual.tau;
    json flags = json::array();
    for (AblationFlag f : ablation) flags.push_back(to_string(f));
    doc["ablation"] = std::move(flags);
    doc["hden_epochs"] = hden_epochs;
    doc["hden_lr"] = hden_lr;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write config '" + path.string() + "'");
    out << doc.dump(2) << "\n";
}

void TrainState::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    hden.save(dir / "hden.json");
    branches[0].save(dir / "light.json");
    branches[1].save(dir / "medium.json");
    branches[2].save(dir / "complex.json");
    std::ofstream out(dir / "history.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write history.csv under '" + dir.string() + "'");
    out << "epoch,coh,contra_rec,dens,gamma,total\n";
    for (std::size_t e = 0; e < loss_history.size(); ++e) {
        const LossReport& r = loss_history[e];
        out << (e + 1) << "," << format_double(r.coh) << "," << format_double(r.contra_rec)
            << "," << format_double(r.dens) << "," << format_double(r.gamma) << ","
            << format_double(r.total) << "\n";
    }
}

TrainState TrainState::load(const std::filesystem::path& dir) {
    TrainState s;
    s.hden = HdenParams::load(dir / "hden.json");
    s.branches[0] = BranchParams::load(dir / "light.json");
    s.branches[1] = BranchParams::load(dir / "medium.json");
    s.branches[2] = BranchParams::load(dir / "complex.json");
    std::ifstream in(dir / "history.csv");
    if (in) {
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            LossReport r;
            int epoch = 0;
            if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &epoch, &r.coh,
                            &r.contra_rec, &r.dens, &r.gamma, &r.total) == 6)
                s.loss_history.push_back(r);
        }
        s.epoch = static_cast<int>(s.loss_history.size());
    }
    return s;
}

// ---- trainable packing --------------------------------------------------

namespace {

struct Domain {
    double lo, hi;
};
constexpr Domain kStepDomain{0.05, 1.9};
constexpr Domain kEpsDomain{1e-6, 0.1};
constexpr Domain kStrengthDomain{0.0, 2.0};
constexpr double kFdStep = 1e-3;

Domain domain_for(std::size_t flat_index) {
    switch (flat_index % 3) {
        case 0: return kStepDomain;
        case 1: return kEpsDomain;
        default: return kStrengthDomain;
    }
}

}  // namespace

std::vector<double> branch_trainable(const BranchParams& branch) {
    std::vector<double> v;
    v.reserve(branch.stages.size() * 3);
    for (const StageParams& s : branch.stages) {
        v.push_back(s.fidelity_step);
        v.push_back(s.trans_smooth_eps);
        v.push_back(s.radiance_denoise_strength);
    }
    return v;
}

void set_branch_trainable(BranchParams& branch, std::span<const double> values) {
    if (values.size() != branch.stages.size() * 3)
        throw ValidationError("set_branch_trainable: parameter count mismatch");
    for (std::size_t i = 0; i < branch.stages.size(); ++i) {
        StageParams& s = branch.stages[i];
        s.fidelity_step = clamp(values[i * 3], kStepDomain.lo, kStepDomain.hi);
        s.trans_smooth_eps = clamp(values[i * 3 + 1], kEpsDomain.lo, kEpsDomain.hi);
        s.radiance_denoise_strength =
            clamp(values[i * 3 + 2], kStrengthDomain.lo, kStrengthDomain.hi);
    }
}

// ---- training --------------------------------------------------------

namespace {

struct Sample {
    RgbImage hazy;
    RgbImage clear;
    HazeFeatures features;
    FogLevel label = FogLevel::Light;
};

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
    std::vector<Sample> samples(manifest.entries.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        samples[i].hazy = load_image(manifest.hazy_path(i));
        samples[i].clear = load_image(manifest.clear_path(i));
        if (!samples[i].hazy.same_shape(samples[i].clear))
            throw ValidationError("manifest entry " + std::to_string(i) +
                                  ": hazy and clear dimensions differ");
        samples[i].features = extract_features(samples[i].hazy);
        samples[i].label = manifest.entries[i].level;
    });
    return samples;
}

void require_level_complete(const DatasetManifest& m, const char* what) {
    if (m.entries.empty()) throw ValidationError(std::string(what) + ": manifest is empty");
    auto counts = m.level_counts();
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
        throw ValidationError(std::string(what) + ": manifest must contain all three levels");
}

LossReport ablated_components(const DehazeResult& res, const RgbImage& gt, const RgbImage& hazy,
                              double d, const TrainConfig& cfg, const HdenParams& hden) {
    bool drop_coh = cfg.ablation.count(AblationFlag::DropCoherence) > 0;
    bool drop_contra = cfg.ablation.count(AblationFlag::DropContra) > 0;
    bool drop_dens = cfg.ablation.count(AblationFlag::DropDensity) > 0;
    double coh = drop_coh ? 0.0 : coherence_loss(res.j_out, res.t_out, hazy);
    double contra = drop_contra ? 0.0 : perceptual_loss(gt, res.j_out, cfg.perceptual);
    double dens = drop_dens ? 0.0 : density_loss(res.j_out, hden);
    return compose_loss_report(coh, contra, dens, d, cfg.gamma);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, SplitMix64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);
    return idx;
}

}  // namespace

TrainState train(const TrainConfig& config, const DatasetManifest& train_manifest,
                 const DatasetManifest& val_manifest) {
    config.validate();
    require_level_complete(train_manifest, "train");
    require_level_complete(val_manifest, "train(val)");

    TrainState state;
    state.hden = train_hden(train_manifest, val_manifest, config.hden_epochs, config.hden_lr,
                            nullptr, config.thresholds);

    std::vector<Sample> samples = load_samples(train_manifest);
    UnfoldOptions options{.proximal_smoothing =
                              config.ablation.count(AblationFlag::DropProximal) == 0};

    SplitMix64 shuffle_rng(mix_seed(config.seed, 0x7261696e));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order = shuffled_indices(samples.size(), shuffle_rng);
        LossReport epoch_mean{};
        for (std::size_t idx : order) {
            Sample& s = samples[idx];
            double d = density_from_features(s.features, state.hden);
            FogLevel level = classify_level(d, config.thresholds);
            BranchParams& branch = state.branches[static_cast<int>(level)];

            DehazeResult center = dehaze(s.hazy, branch, options);
            LossReport report = ablated_components(center, s.clear, s.hazy, d, config, state.hden);
            epoch_mean.coh += report.coh;
            epoch_mean.contra_rec += report.contra_rec;
            epoch_mean.dens += report.dens;
            epoch_mean.gamma += report.gamma;
            epoch_mean.total += report.total;

            // central finite differences over the routed branch's scalars;
            // probes are pure evaluations and may run in parallel
            std::vector<double> theta = branch_trainable(branch);
            std::vector<double> grad(theta.size(), 0.0);
            const HdenParams& hden_now = state.hden;
            parallel_for(theta.size(), [&](std::size_t k) {
                Domain dom = domain_for(k);
                double plus = clamp(theta[k] + kFdStep, dom.lo, dom.hi);
                double minus = clamp(theta[k] - kFdStep, dom.lo, dom.hi);
                if (plus == minus) return;
                BranchParams probe = branch;
                std::vector<double> tweaked = theta;
                tweaked[k] = plus;
                set_branch_trainable(probe, tweaked);
                double up = ablated_components(dehaze(s.hazy, probe, options), s.clear, s.hazy,
                                               d, config, hden_now)
                                .total;
                tweaked[k] = minus;
                set_branch_trainable(probe, tweaked);
                double down = ablated_components(dehaze(s.hazy, probe, options), s.clear, s.hazy,
                                                 d, config, hden_now)
                                  .total;
                grad[k] = (up - down) / (plus - minus);
            });
            for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= config.lr * grad[k];
            set_branch_trainable(branch, theta);

            // co-refine the estimator head on the manifest label
            hden_supervised_step(state.hden, s.features, regression_target(s.label), config.lr);
        }
        double n = static_cast<double>(samples.size());
        epoch_mean.coh /= n;
        epoch_mean.contra_rec /= n;
        epoch_mean.dens /= n;
        epoch_mean.gamma /= n;
        epoch_mean.total /= n;
        state.loss_history.push_back(epoch_mean);
        state.epoch = epoch + 1;
    }
    return state;
}

LossReport mean_validation_loss(const TrainState& state, const DatasetManifest& manifest,
                                const TrainConfig& config) {
    config.validate();
    UnfoldOptions options{.proximal_smoothing =
                              config.ablation.count(AblationFlag::DropProximal) == 0};
    std::vector<LossReport> reports(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        RgbImage hazy = load_image(manifest.hazy_path(i));
        RgbImage clear = load_image(manifest.clear_path(i));
        RoutedResult routed =
            route_and_dehaze(hazy, state.hden, config.thresholds, state.branches, options);
        reports[i] = ablated_components(routed.result, clear, hazy, routed.density, config,
                                        state.hden);
    });
    LossReport mean{};
    for (const LossReport& r : reports) {
        mean.coh += r.coh;
        mean.contra_rec += r.contra_rec;
        mean.dens += r.dens;
        mean.gamma += r.gamma;
        mean.total += r.total;
    }
    double n = static_cast<double>(reports.size());
    mean.coh /= n;
    mean.contra_rec /= n;
    mean.dens /= n;
    mean.gamma /= n;
    mean.total /= n;
    return mean;
}

RunSummary summarize_run(const TrainState& state, const DatasetManifest& manifest,
                         const TrainConfig& config) {
    UnfoldOptions options{.proximal_smoothing =
                              config.ablation.count(AblationFlag::DropProximal) == 0};
    struct Row {
        double psnr, ssim, density, resid;
    };
    std::vector<Row> rows(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        RgbImage hazy = load_image(manifest.hazy_path(i));
        RgbImage clear = load_image(manifest.clear_path(i));
        RoutedResult routed =
            route_and_dehaze(hazy, state.hden, config.thresholds, state.branches, options);
        rows[i] = {psnr(routed.result.j_out, clear), ssim(routed.result.j_out, clear),
                   estimate_density(routed.result.j_out, state.hden),
                   routed.result.residual_trace.back()};
    });
    RunSummary s;
    for (const Row& r : rows) {
        s.mean_psnr += r.psnr;
        s.mean_ssim += r.ssim;
        s.mean_density += r.density;
        s.residual_final_mean += r.resid;
    }
    double n = static_cast<double>(rows.size());
    s.mean_psnr /= n;
    s.mean_ssim /= n;
    s.mean_density /= n;
    s.residual_final_mean /= n;
    for (const Row& r : rows) {
        double d = r.resid - s.residual_final_mean;
        s.residual_final_var += d * d;
    }
    s.residual_final_var /= n;
    return s;
}

AblationReport ablate(const TrainConfig& config, const DatasetManifest& train_manifest,
                      const DatasetManifest& val_manifest) {
    if (config.ablation.size() != 1)
        throw ValidationError("ablate: exactly one ablation flag must be set");
    AblationReport report;
    report.flag = *config.ablation.begin();

    TrainConfig full_cfg = config;
    full_cfg.ablation.clear();
    TrainState full_state = train(full_cfg, train_manifest, val_manifest);
    report.full = summarize_run(full_state, val_manifest, full_cfg);

    TrainState ablated_state = train(config, train_manifest, val_manifest);
    report.ablated = summarize_run(ablated_state, val_manifest, config);
    return report;
}

InferSummary infer_batch(const DatasetManifest& manifest, const TrainState& state,
                         const std::filesystem::path& out_dir,
                         std::optional<FogLevel> force_level, const RoutingThresholds& thr,
                         const UnfoldOptions& options) {
    thr.validate();
    if (manifest.entries.empty()) throw ValidationError("infer_batch: manifest is empty");
    std::filesystem::create_directories(out_dir);

    InferSummary summary;
    std::array<std::size_t, 3> counts{0, 0, 0};
    std::vector<int> routed_level(manifest.entries.size(), 0);
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        RgbImage hazy = load_image(manifest.hazy_path(i));
        FogLevel level = force_level
                             ? *force_level
                             : classify_level(estimate_density(hazy, state.hden), thr);
        DehazeResult res = dehaze(hazy, state.branches[static_cast<int>(level)], options);
        routed_level[i] = static_cast<int>(level);
        std::filesystem::path hazy_path = manifest.hazy_path(i);
        save_image(res.j_out, out_dir / (hazy_path.stem().string() + ".png"));
    });
    for (int lv : routed_level) counts[lv]++;
    summary.routed_counts = counts;
    summary.metrics = evaluate_manifest(manifest, out_dir, state.hden);
    write_metrics_csv(summary.metrics, out_dir / "metrics.csv");
    return summary;
}

}  // namespace fog
