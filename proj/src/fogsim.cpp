#include "fog/fogsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fog/codec.hpp"

namespace fog {

using nlohmann::json;

ScatterCoefficient::ScatterCoefficient(double beta) : beta_(beta) {
    if (!std::isfinite(beta) || beta <= 0.0)
        throw ValidationError("scattering coefficient must be positive, got " +
                              std::to_string(beta));
}

AtmosphericLight::AtmosphericLight(double r, double g, double b) : rgb_{r, g, b} {
    for (double v : rgb_)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw ValidationError("atmospheric light channels must lie in [0,1]");
}

TransmissionMap compute_transmission(const DepthMap& depth, const ScatterCoefficient& beta) {
    std::vector<double> t(depth.pixel_count());
    auto d = depth.data();
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = std::max(std::exp(-beta.beta() * d[i]), kTransmissionFloor);
    return TransmissionMap(depth.width(), depth.height(), std::move(t));
}

RgbImage synthesize_haze(const RgbImage& clear, const TransmissionMap& trans,
                         const AtmosphericLight& airlight) {
    if (!trans.same_shape(clear))
        throw ValidationError("synthesize_haze: image and transmission dimensions differ");
    std::vector<double> out(clear.sample_count());
    auto j = clear.data();
    auto t = trans.data();
    for (std::size_t p = 0; p < trans.pixel_count(); ++p) {
        double tp = t[p];
        for (int c = 0; c < 3; ++c)
            out[p * 3 + c] = clamp01(j[p * 3 + c] * tp + airlight.channel(c) * (1.0 - tp));
    }
    return RgbImage(clear.width(), clear.height(), std::move(out));
}

RgbImage invert_haze(const RgbImage& hazy, const TransmissionMap& trans,
                     const AtmosphericLight& airlight) {
    if (!trans.same_shape(hazy))
        throw ValidationError("invert_haze: image and transmission dimensions differ");
    std::vector<double> out(hazy.sample_count());
    auto p = hazy.data();
    auto t = trans.data();
    for (std::size_t i = 0; i < trans.pixel_count(); ++i) {
        double tp = t[i];
        for (int c = 0; c < 3; ++c)
            out[i * 3 + c] = clamp01((p[i * 3 + c] - airlight.channel(c) * (1.0 - tp)) / tp);
    }
    return RgbImage(hazy.width(), hazy.height(), std::move(out));
}

// ---- manifest --------------------------------------------------------

void DatasetManifest::validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const ManifestEntry& e = entries[i];
        if (!(e.beta > 0.0) || !std::isfinite(e.beta))
            throw ValidationError("manifest entry " + std::to_string(i) + ": bad beta");
        for (double v : e.airlight)
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw ValidationError("manifest entry " + std::to_string(i) + ": bad airlight");
        // label <-> beta consistency for the canonical coefficients
        FogLevel expected;
        if (e.beta == kCanonicalBetas[0]) expected = FogLevel::Light;
        else if (e.beta == kCanonicalBetas[1]) expected = FogLevel::Medium;
        else if (e.beta == kCanonicalBetas[2]) expected = FogLevel::Heavy;
        else continue;
        if (e.level != expected)
            throw InvariantError("manifest entry " + std::to_string(i) + ": level '" +
                                 to_string(e.level) + "' inconsistent with beta " +
                                 std::to_string(e.beta));
    }
    if (!(meters_per_unit > 0.0) || !std::isfinite(meters_per_unit))
        throw ValidationError("manifest: meters_per_unit must be positive");
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
    DatasetManifest m;
    try {
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.meters_per_unit = doc.at("meters_per_unit").get<double>();
        for (const json& je : doc.at("entries")) {
            ManifestEntry e;
            e.clear = je.at("clear").get<std::string>();
            e.depth = je.at("depth").get<std::string>();
            e.hazy = je.at("hazy").get<std::string>();
            e.beta = je.at("beta").get<double>();
            auto a = je.at("airlight");
            e.airlight = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
            e.level = level_from_string(je.at("level").get<std::string>());
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "' has bad schema: " + e.what());
    }
    m.base_dir = path.parent_path();
    m.validate();
    return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
    json doc;
    doc["seed"] = seed;
    doc["meters_per_unit"] = meters_per_unit;
    json list = json::array();
    for (const ManifestEntry& e : entries) {
        json je;
        je["clear"] = e.clear;
        je["depth"] = e.depth;
        je["hazy"] = e.hazy;
        je["beta"] = e.beta;
        je["airlight"] = {e.airlight[0], e.airlight[1], e.airlight[2]};
        je["level"] = to_string(e.level);
        list.push_back(std::move(je));
    }
    doc["entries"] = std::move(list);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << doc.dump(2) << "\n";
}

namespace {

std::filesystem::path resolve_against(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
}

}  // namespace

std::filesystem::path DatasetManifest::clear_path(std::size_t i) const {
    return resolve_against(base_dir, entries[i].clear);
}
std::filesystem::path DatasetManifest::depth_path(std::size_t i) const {
    return resolve_against(base_dir, entries[i].depth);
}
std::filesystem::path DatasetManifest::hazy_path(std::size_t i) const {
    return resolve_against(base_dir, entries[i].hazy);
}

std::array<std::size_t, 3> DatasetManifest::level_counts() const {
    std::array<std::size_t, 3> counts{0, 0, 0};
    for (const ManifestEntry& e : entries) counts[static_cast<int>(e.level)]++;
    return counts;
}

// ---- generation --------------------------------------------------------

std::array<std::size_t, 3> level_allocation(std::size_t total) {
    std::size_t n = total / 3;
    return {n, n, n + total % 3};
}

DatasetManifest generate_dataset(
    const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& pairs,
    const std::filesystem::path& out_dir, std::uint64_t seed, const SynthesisOptions& options) {
    if (pairs.size() < 3) throw ValidationError("generate_dataset: need at least 3 input pairs");
    if (options.betas.size() != 3 || !std::is_sorted(options.betas.begin(), options.betas.end()) ||
        options.betas[0] <= 0.0 ||
        std::adjacent_find(options.betas.begin(), options.betas.end()) != options.betas.end())
        throw ValidationError("generate_dataset: betas must be 3 strictly increasing positives");
    if (!(options.airlight_lo >= 0.0 && options.airlight_hi <= 1.0 &&
          options.airlight_lo <= options.airlight_hi))
        throw ValidationError("generate_dataset: airlight range must satisfy 0 <= lo <= hi <= 1");

    // sorted input order is the manifest order contract
    auto sorted = pairs;
    std::sort(sorted.begin(), sorted.end());

    std::array<std::size_t, 3> counts =
        options.total == 0 ? std::array<std::size_t, 3>{sorted.size(), sorted.size(), sorted.size()}
                           : level_allocation(options.total);

    struct Slot {
        std::size_t index;
        int level;
        std::size_t pair;
    };
    std::vector<Slot> slots;
    std::size_t index = 0;
    for (int level = 0; level < 3; ++level)
        for (std::size_t k = 0; k < counts[level]; ++k)
            slots.push_back({index++, level, k % sorted.size()});

    // validation pass before anything is written
    for (const auto& [clear, depth] : sorted) {
        RgbImage img = load_image(clear);
        DepthMap d = load_depth(depth, options.meters_per_unit);
        if (d.width() != img.width() || d.height() != img.height())
            throw ValidationError("generate_dataset: dimension mismatch between '" +
                                  clear.string() + "' and '" + depth.string() + "'");
    }

    std::filesystem::create_directories(out_dir / "hazy");

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.meters_per_unit = options.meters_per_unit;
    manifest.base_dir = out_dir;
    manifest.entries.resize(slots.size());

    parallel_for(slots.size(), [&](std::size_t s) {
        const Slot& slot = slots[s];
        const auto& [clear_path, depth_path] = sorted[slot.pair];
        RgbImage clear = load_image(clear_path);
        DepthMap depth = load_depth(depth_path, options.meters_per_unit);

        // per-slot stream keeps airlight independent of worker scheduling
        SplitMix64 rng(mix_seed(seed, slot.index));
        double r = rng.uniform(options.airlight_lo, options.airlight_hi);
        double g = rng.uniform(options.airlight_lo, options.airlight_hi);
        double b = rng.uniform(options.airlight_lo, options.airlight_hi);
        AtmosphericLight airlight(r, g, b);

        ScatterCoefficient beta(options.betas[slot.level]);
        RgbImage hazy = synthesize_haze(clear, compute_transmission(depth, beta), airlight);

        char name[64];
        std::snprintf(name, sizeof(name), "hazy/%06zu_%c.png", slot.index,
                      "LMH"[slot.level]);
        save_image(hazy, out_dir / name);

        ManifestEntry& e = manifest.entries[slot.index];
        e.clear = std::filesystem::absolute(clear_path).lexically_normal().string();
        e.depth = std::filesystem::absolute(depth_path).lexically_normal().string();
        e.hazy = name;
        e.beta = options.betas[slot.level];
        e.airlight = airlight.rgb();
        e.level = static_cast<FogLevel>(slot.level);
    });

    manifest.validate();
    manifest.save(out_dir / "manifest.json");
    return manifest;
}

}  // namespace fog
