// Command-line front end: synth / estimate / train-hden / train / dehaze /
// infer / eval / eval-loss / ablate / bench. Results go to stdout as JSON
// lines, progress and diagnostics to stderr. Exit codes: 0 ok, 1 validation
// failure, 2 I/O failure, 3 invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fog/bench.hpp"
#include "fog/codec.hpp"
#include "fog/fogsim.hpp"
#include "fog/hden.hpp"
#include "fog/losses.hpp"
#include "fog/metrics.hpp"
#include "fog/pipeline.hpp"
#include "fog/unfold.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "fogtool 0.1.0";

json json_num(double v) {
    if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
    return json(v);
}

void emit(const json& line) { std::cout << line.dump() << "\n"; }

fog::FogLevel parse_level(const std::string& s) {
    if (s == "L" || s == "Light") return fog::FogLevel::Light;
    if (s == "M" || s == "Medium") return fog::FogLevel::Medium;
    if (s == "H" || s == "Heavy") return fog::FogLevel::Heavy;
    throw fog::ValidationError("unknown level '" + s + "' (expected L|M|H)");
}

std::vector<std::pair<std::filesystem::path, std::filesystem::path>> read_pairs_file(
    const std::filesystem::path& list_path) {
    std::ifstream in(list_path);
    if (!in) throw fog::IoError("cannot open pairs list '" + list_path.string() + "'");
    std::filesystem::path base = list_path.parent_path();
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string trimmed = line.substr(0, line.find('#'));
        std::istringstream ss(trimmed);
        std::string clear, depth, extra;
        if (!(ss >> clear)) continue;  // blank or comment line
        if (!(ss >> depth) || (ss >> extra))
            throw fog::ValidationError("pairs list line " + std::to_string(lineno) +
                                       ": expected '<clear> <depth>'");
        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : (base / fp).lexically_normal();
        };
        pairs.emplace_back(resolve(clear), resolve(depth));
    }
    return pairs;
}

struct ThresholdFlags {
    double alpha = 1.0 / 3.0;
    double beta_thr = 2.0 / 3.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "Light/Medium routing threshold");
        cmd->add_option("--beta-thr", beta_thr, "Medium/Heavy routing threshold");
    }
    fog::RoutingThresholds get() const {
        fog::RoutingThresholds t{alpha, beta_thr};
        t.validate();
        return t;
    }
};

std::array<fog::BranchParams, 3> load_branches(const std::filesystem::path& dir) {
    return {fog::BranchParams::load(dir / "light.json"),
            fog::BranchParams::load(dir / "medium.json"),
            fog::BranchParams::load(dir / "complex.json")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"density-aware fog synthesis, estimation and dehazing toolkit"};
    app.require_subcommand(0, 1);
    app.set_version_flag("--version", kVersion);
    int threads = 0;
    app.add_option("--threads", threads, "cap the worker pool (default: hardware)");

    // ---- synth
    auto* synth = app.add_subcommand("synth", "synthesize a stratified hazy dataset");
    std::string synth_pairs, synth_out;
    std::uint64_t synth_seed = 0;
    fog::SynthesisOptions synth_opts;
    synth->add_option("--pairs", synth_pairs, "text file with '<clear> <depth>' lines")
        ->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "random seed")->required();
    synth->add_option("--betas", synth_opts.betas, "three scattering coefficients")
        ->delimiter(',');
    synth->add_option("--meters-per-unit", synth_opts.meters_per_unit,
                      "16-bit depth scale (m/unit)");
    synth->add_option("--airlight-lo", synth_opts.airlight_lo, "airlight sampling lower bound");
    synth->add_option("--airlight-hi", synth_opts.airlight_hi, "airlight sampling upper bound");
    synth->add_option("--total", synth_opts.total,
                      "total slot count (default: 3 x pairs, split 1:1:1)");

    // ---- estimate
    auto* estimate = app.add_subcommand("estimate", "estimate haze density of one image");
    std::string est_image, est_params;
    ThresholdFlags est_thr;
    estimate->add_option("--image", est_image, "input image")->required();
    estimate->add_option("--hden,--params", est_params, "density estimator params JSON")
        ->required();
    est_thr.attach(estimate);

    // ---- train-hden
    auto* thden = app.add_subcommand("train-hden", "train the density estimator");
    std::string th_train, th_val, th_out;
    int th_epochs = 200;
    double th_lr = 0.5;
    ThresholdFlags th_thr;
    thden->add_option("--train", th_train, "training manifest")->required();
    thden->add_option("--val", th_val, "validation manifest")->required();
    thden->add_option("--epochs", th_epochs, "epoch count")->required();
    thden->add_option("--lr", th_lr, "initial learning rate")->required();
    thden->add_option("--out", th_out, "output params JSON")->required();
    th_thr.attach(thden);

    // ---- train
    auto* train_cmd = app.add_subcommand("train", "joint training per the adaptive loop");
    std::string tr_config, tr_train, tr_val, tr_out;
    train_cmd->add_option("--config", tr_config, "train config JSON")->required();
    train_cmd->add_option("--train", tr_train, "training manifest")->required();
    train_cmd->add_option("--val", tr_val, "validation manifest")->required();
    train_cmd->add_option("--out", tr_out, "output state directory")->required();

    // ---- dehaze
    auto* dehaze_cmd = app.add_subcommand("dehaze", "restore one image");
    std::string dh_image, dh_params_dir, dh_hden, dh_out, dh_force, dh_dump_trans, dh_trace;
    ThresholdFlags dh_thr;
    dehaze_cmd->add_option("--image", dh_image, "hazy input image")->required();
    dehaze_cmd->add_option("--params-dir", dh_params_dir, "branch params directory")->required();
    dehaze_cmd->add_option("--hden", dh_hden, "density estimator params")->required();
    dehaze_cmd->add_option("--force-level", dh_force, "bypass routing: L|M|H");
    dehaze_cmd->add_option("--out", dh_out, "restored image path")->required();
    dehaze_cmd->add_option("--dump-trans", dh_dump_trans, "write final transmission (PFM)");
    dehaze_cmd->add_option("--trace", dh_trace, "write per-stage residual CSV");
    dh_thr.attach(dehaze_cmd);

    // ---- infer
    auto* infer_cmd = app.add_subcommand("infer", "restore every manifest entry");
    std::string in_manifest, in_state, in_out, in_force;
    ThresholdFlags in_thr;
    infer_cmd->add_option("--manifest", in_manifest, "dataset manifest")->required();
    infer_cmd->add_option("--state", in_state, "trained state directory")->required();
    infer_cmd->add_option("--out", in_out, "output directory")->required();
    infer_cmd->add_option("--force-level", in_force, "bypass routing: L|M|H");
    in_thr.attach(infer_cmd);

    // ---- eval
    auto* eval_cmd = app.add_subcommand("eval", "score restored images against ground truth");
    std::string ev_manifest, ev_results, ev_hden, ev_out;
    eval_cmd->add_option("--manifest", ev_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--results", ev_results, "directory of restored images")->required();
    eval_cmd->add_option("--hden", ev_hden, "density estimator params")->required();
    eval_cmd->add_option("--out", ev_out, "output CSV")->required();

    // ---- eval-loss
    auto* evloss = app.add_subcommand("eval-loss", "evaluate the composite loss once");
    std::string el_hazy, el_jout, el_tout, el_gt, el_hden;
    double el_d = -1.0;
    ThresholdFlags el_thr;
    evloss->add_option("--hazy", el_hazy, "observed hazy image")->required();
    evloss->add_option("--jout", el_jout, "restored image")->required();
    evloss->add_option("--tout", el_tout, "transmission map (PFM)")->required();
    evloss->add_option("--gt", el_gt, "ground-truth clear image")->required();
    evloss->add_option("--hden", el_hden, "density estimator params")->required();
    evloss->add_option("--d", el_d, "density override (default: estimate from hazy)");
    el_thr.attach(evloss);

    // ---- ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "full-vs-ablated comparison run");
    std::string ab_flag, ab_config, ab_train, ab_val, ab_out;
    ablate_cmd->add_option("--flag", ab_flag, "drop-coh|drop-contra|drop-dens|drop-proximal")
        ->required();
    ablate_cmd->add_option("--config", ab_config, "train config JSON")->required();
    ablate_cmd->add_option("--train", ab_train, "training manifest")->required();
    ablate_cmd->add_option("--val", ab_val, "validation manifest")->required();
    ablate_cmd->add_option("--out", ab_out, "comparison report JSON");

    // ---- bench
    auto* bench_cmd = app.add_subcommand("bench", "profile per-branch inference cost");
    std::string bn_manifest, bn_state, bn_out;
    int bn_repeats = 10;
    ThresholdFlags bn_thr;
    bench_cmd->add_option("--manifest", bn_manifest, "balanced dataset manifest")->required();
    bench_cmd->add_option("--state", bn_state, "trained state directory")->required();
    bench_cmd->add_option("--repeats", bn_repeats, "timed repetitions per image (>= 5)")
        ->required();
    bench_cmd->add_option("--out", bn_out, "report JSON (CSV written alongside)")->required();
    bn_thr.attach(bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cerr << app.help() << std::flush;
        return 0;
    } catch (const CLI::CallForVersion&) {
        emit(json{{"version", kVersion}});
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 1;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help() << std::flush;
        return 1;
    }
    if (threads > 0) fog::set_max_threads(threads);

    try {
        if (*synth) {
            auto pairs = read_pairs_file(synth_pairs);
            fog::DatasetManifest manifest =
                fog::generate_dataset(pairs, synth_out, synth_seed, synth_opts);
            std::cerr << "synthesized " << manifest.entries.size() << " hazy images\n";
            emit(json{{"entries", manifest.entries.size()},
                      {"manifest", (std::filesystem::path(synth_out) / "manifest.json").string()}});
        } else if (*estimate) {
            fog::HdenParams params = fog::HdenParams::load(est_params);
            double d = fog::estimate_density(fog::load_image(est_image), params);
            emit(json{{"d", d}, {"level", fog::to_string(fog::classify_level(d, est_thr.get()))}});
        } else if (*thden) {
            fog::DatasetManifest train_m = fog::DatasetManifest::load(th_train);
            fog::DatasetManifest val_m = fog::DatasetManifest::load(th_val);
            fog::HdenTrainReport report;
            fog::HdenParams params =
                fog::train_hden(train_m, val_m, th_epochs, th_lr, &report, th_thr.get());
            params.save(th_out);
            emit(json{{"epochs", th_epochs},
                      {"final_train_loss", report.train_loss.back()},
                      {"final_val_accuracy", report.val_accuracy.back()},
                      {"out", th_out}});
        } else if (*train_cmd) {
            fog::TrainConfig config = fog::TrainConfig::load(tr_config);
            fog::DatasetManifest train_m = fog::DatasetManifest::load(tr_train);
            fog::DatasetManifest val_m = fog::DatasetManifest::load(tr_val);
            fog::TrainState state = fog::train(config, train_m, val_m);
            state.save(tr_out);
            emit(json{{"epochs", state.epoch},
                      {"final_total", state.loss_history.back().total},
                      {"state_dir", tr_out}});
        } else if (*dehaze_cmd) {
            fog::RgbImage hazy = fog::load_image(dh_image);
            auto branches = load_branches(dh_params_dir);
            fog::HdenParams hden = fog::HdenParams::load(dh_hden);
            double d = fog::estimate_density(hazy, hden);
            fog::FogLevel level =
                dh_force.empty() ? fog::classify_level(d, dh_thr.get()) : parse_level(dh_force);
            fog::DehazeResult res = fog::dehaze(hazy, branches[static_cast<int>(level)]);
            fog::save_image(res.j_out, dh_out);
            if (!dh_dump_trans.empty()) fog::save_transmission(res.t_out, dh_dump_trans);
            if (!dh_trace.empty()) {
                std::ofstream trace(dh_trace, std::ios::binary | std::ios::trunc);
                if (!trace) throw fog::IoError("cannot write trace '" + dh_trace + "'");
                trace << "stage,residual\n";
                trace << "0," << fog::format_double(res.initial_residual) << "\n";
                for (std::size_t i = 0; i < res.residual_trace.size(); ++i)
                    trace << (i + 1) << "," << fog::format_double(res.residual_trace[i]) << "\n";
            }
            emit(json{{"d", d},
                      {"level", fog::to_string(level)},
                      {"out", dh_out},
                      {"residual_initial", res.initial_residual},
                      {"residual_final", res.residual_trace.back()}});
        } else if (*infer_cmd) {
            fog::DatasetManifest manifest = fog::DatasetManifest::load(in_manifest);
            fog::TrainState state = fog::TrainState::load(in_state);
            std::optional<fog::FogLevel> force;
            if (!in_force.empty()) force = parse_level(in_force);
            fog::InferSummary summary =
                fog::infer_batch(manifest, state, in_out, force, in_thr.get());
            emit(json{{"images", manifest.entries.size()},
                      {"csv", (std::filesystem::path(in_out) / "metrics.csv").string()},
                      {"routed",
                       {{"Light", summary.routed_counts[0]},
                        {"Medium", summary.routed_counts[1]},
                        {"Heavy", summary.routed_counts[2]}}}});
        } else if (*eval_cmd) {
            fog::DatasetManifest manifest = fog::DatasetManifest::load(ev_manifest);
            fog::HdenParams hden = fog::HdenParams::load(ev_hden);
            fog::EvalReport report = fog::evaluate_manifest(manifest, ev_results, hden);
            json means;
            for (int level = 0; level < 3; ++level) {
                if (!report.level_means[level]) continue;
                const fog::LevelMean& m = *report.level_means[level];
                means[fog::to_string(static_cast<fog::FogLevel>(level))] = {
                    {"psnr_db", json_num(m.psnr_db)},
                    {"ssim", m.ssim},
                    {"density", m.density},
                    {"count", m.count}};
            }
            if (!report.missing.empty()) {
                // flagged rows are excluded from means and no CSV is written
                emit(json{{"rows", report.rows.size()},
                          {"missing", report.missing},
                          {"level_means", means}});
                std::cerr << report.missing.size() << " restored image(s) missing\n";
                return 2;
            }
            fog::write_metrics_csv(report, ev_out);
            emit(json{{"rows", report.rows.size()}, {"csv", ev_out}, {"level_means", means}});
        } else if (*evloss) {
            fog::RgbImage hazy = fog::load_image(el_hazy);
            fog::RgbImage jout = fog::load_image(el_jout);
            fog::TransmissionMap tout = fog::load_transmission(el_tout);
            fog::RgbImage gt = fog::load_image(el_gt);
            fog::HdenParams hden = fog::HdenParams::load(el_hden);
            double d = el_d >= 0.0 ? el_d : fog::estimate_density(hazy, hden);
            fog::GammaSchedule sched;
            sched.thresholds = el_thr.get();
            fog::LossReport report =
                fog::adaptive_loss(jout, tout, gt, hazy, d, sched, fog::PerceptualWeights{}, hden);
            emit(json{{"coh", report.coh},
                      {"contra_rec", report.contra_rec},
                      {"dens", report.dens},
                      {"gamma", report.gamma},
                      {"total", report.total}});
        } else if (*ablate_cmd) {
            fog::TrainConfig config = fog::TrainConfig::load(ab_config);
            config.ablation = {fog::ablation_from_string(ab_flag)};
            fog::DatasetManifest train_m = fog::DatasetManifest::load(ab_train);
            fog::DatasetManifest val_m = fog::DatasetManifest::load(ab_val);
            fog::AblationReport report = fog::ablate(config, train_m, val_m);
            auto run_json = [](const fog::RunSummary& r) {
                return json{{"mean_psnr", json_num(r.mean_psnr)},
                            {"mean_ssim", r.mean_ssim},
                            {"mean_density", r.mean_density},
                            {"residual_final_mean", r.residual_final_mean},
                            {"residual_final_var", r.residual_final_var}};
            };
            json doc{{"flag", fog::to_string(report.flag)},
                     {"full", run_json(report.full)},
                     {"ablated", run_json(report.ablated)}};
            if (!ab_out.empty()) {
                std::ofstream out(ab_out, std::ios::binary | std::ios::trunc);
                if (!out) throw fog::IoError("cannot write ablation report '" + ab_out + "'");
                out << doc.dump(2) << "\n";
            }
            emit(doc);
        } else if (*bench_cmd) {
            fog::DatasetManifest manifest = fog::DatasetManifest::load(bn_manifest);
            fog::TrainState state = fog::TrainState::load(bn_state);
            fog::BenchReport report = fog::run_bench(manifest, state, bn_repeats, bn_thr.get());
            report.save_json(bn_out);
            std::filesystem::path csv = bn_out;
            csv.replace_extension(".csv");
            report.save_csv(csv);
            json branches = json::array();
            for (const fog::BranchBench& b : report.per_branch)
                branches.push_back({{"branch", fog::to_string(b.branch)},
                                    {"mean_ms", b.mean_ms},
                                    {"std_ms", b.std_ms},
                                    {"est_ops", b.est_ops}});
            emit(json{{"per_branch", branches},
                      {"fixed_baseline_ms", report.fixed_baseline_ms},
                      {"adaptive_mean_ms", report.adaptive_mean_ms},
                      {"savings_fraction", report.savings_fraction},
                      {"warnings", report.warnings}});
        }
    } catch (const fog::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const fog::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const fog::InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
