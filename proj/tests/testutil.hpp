#ifndef FOG_TESTUTIL_HPP
#define FOG_TESTUTIL_HPP

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fog/codec.hpp"
#include "fog/fogsim.hpp"
#include "fog/image.hpp"

namespace fogtest {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fogtest-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Coupled procedural fixture: a clear scene and its depth map sharing one
/// "sky" mask. Ground content is a tilted depth ramp in [near, far]; the sky
/// region sits at `sky` meters and is painted bright and near-uniform, the
/// way a clear-weather sky photographs.
struct ScenePair {
    fog::RgbImage scene;
    fog::DepthMap depth;
};

inline ScenePair make_scene_pair(std::uint64_t seed, int w, int h, double near = 2.0,
                                 double far = 30.0, double sky = 120.0) {
    fog::SplitMix64 rng(seed);
    std::size_t n = static_cast<std::size_t>(w) * h;

    // depth: ramp + bumps rescaled to [near, far], sky = deepest 18% of a
    // secondary smooth field
    double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
    double sx = rng.uniform(-1.0, 1.0), sy = rng.uniform(-1.0, 1.0);
    double bump_fx = rng.uniform(1.0, 2.5) * 2.0 * M_PI / w;
    double bump_fy = rng.uniform(1.0, 2.5) * 2.0 * M_PI / h;
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    std::vector<double> raw(n), sky_field(n);
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t p = static_cast<std::size_t>(y) * w + x;
            raw[p] = gx * x / w + gy * y / h +
                     0.25 * std::sin(bump_fx * x + bump_fy * y + phase);
            lo = std::min(lo, raw[p]);
            hi = std::max(hi, raw[p]);
            sky_field[p] = sx * x / w + sy * y / h +
                           0.3 * std::sin(bump_fy * x + bump_fx * y + phase);
        }
    std::vector<double> cut(sky_field);
    std::size_t q = static_cast<std::size_t>(0.82 * n);
    std::nth_element(cut.begin(), cut.begin() + q, cut.end());
    double threshold = cut[q];
    std::vector<double> depth(n);
    std::vector<bool> is_sky(n);
    for (std::size_t i = 0; i < n; ++i) {
        is_sky[i] = sky_field[i] > threshold;
        depth[i] = is_sky[i] ? sky : near + (far - near) * (raw[i] - lo) / (hi - lo);
    }

    // scene: per-channel cosine mixture, solid rectangles, bright uniform sky
    struct Wave {
        double fx, fy, phase, amp;
    };
    Wave waves[3][2];
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 2; ++k)
            waves[c][k] = {rng.uniform(0.5, 3.0) * 2.0 * M_PI / w,
                           rng.uniform(0.5, 3.0) * 2.0 * M_PI / h,
                           rng.uniform(0.0, 2.0 * M_PI), rng.uniform(0.08, 0.22)};
    double base[3] = {rng.uniform(0.3, 0.6), rng.uniform(0.3, 0.6), rng.uniform(0.3, 0.6)};
    // one channel swings low across the ground, giving the dark-channel prior
    // support at every depth
    int low_channel = static_cast<int>(rng.next_below(3));
    base[low_channel] = rng.uniform(0.12, 0.2);
    struct Rect {
        int x0, y0, x1, y1;
        double rgb[3];
    };
    std::vector<Rect> rects;
    for (int i = 0; i < 6; ++i) {
        int x0 = static_cast<int>(rng.next_below(w * 3 / 4));
        int y0 = static_cast<int>(rng.next_below(h * 3 / 4));
        int x1 = x0 + 2 + static_cast<int>(rng.next_below(w / 4));
        int y1 = y0 + 2 + static_cast<int>(rng.next_below(h / 4));
        Rect r{x0, y0, std::min(x1, w - 1), std::min(y1, h - 1), {}};
        // three colored bright rectangles, then three dark ones on top: dark
        // content stays visible, and nothing in the clear scene is so white
        // that it outranks dense haze in the dark channel
        double rlo = (i < 3) ? 0.3 : 0.02;
        double rhi = (i < 3) ? 0.9 : 0.18;
        for (double& v : r.rgb) v = rng.uniform(rlo, rhi);
        if (i < 3) r.rgb[rng.next_below(3)] = rng.uniform(0.1, 0.35);
        rects.push_back(r);
    }
    double sky_tint[3] = {rng.uniform(0.82, 0.9), rng.uniform(0.82, 0.9),
                          rng.uniform(0.82, 0.9)};

    std::vector<double> data(n * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t p = static_cast<std::size_t>(y) * w + x;
            if (is_sky[p]) {
                for (int c = 0; c < 3; ++c)
                    data[p * 3 + c] =
                        fog::clamp(sky_tint[c] + 0.05 * std::sin(bump_fx * x + phase), 0.02, 0.98);
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                double v = base[c];
                for (const Wave& wv : waves[c])
                    v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
                data[p * 3 + c] = v;
            }
            for (const Rect& r : rects)
                if (x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1)
                    for (int c = 0; c < 3; ++c) data[p * 3 + c] = r.rgb[c];
            for (int c = 0; c < 3; ++c)
                data[p * 3 + c] = fog::clamp(data[p * 3 + c], 0.02, 0.98);
        }
    return {fog::RgbImage(w, h, std::move(data)), fog::DepthMap(w, h, std::move(depth))};
}

/// Scene-only and depth-only conveniences for tests that need just one half.
inline fog::RgbImage make_scene(std::uint64_t seed, int w, int h) {
    return make_scene_pair(seed, w, h).scene;
}

inline fog::DepthMap make_depth(std::uint64_t seed, int w, int h, double near = 2.0,
                                double far = 30.0) {
    return make_scene_pair(seed, w, h, near, far).depth;
}

struct FixtureDataset {
    TempDir dir;
    fog::DatasetManifest manifest;
};

/// Writes n_scenes procedural clear+depth pairs and synthesizes the three
/// canonical fog levels over them.
inline fog::DatasetManifest make_dataset(const std::filesystem::path& dir, std::uint64_t seed,
                                         int n_scenes, int w, int h,
                                         double airlight_lo = 0.7, double airlight_hi = 1.0) {
    std::filesystem::create_directories(dir / "src");
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pairs;
    for (int i = 0; i < n_scenes; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "scene%03d", i);
        auto clear_path = dir / "src" / (std::string(name) + ".png");
        auto depth_path = dir / "src" / (std::string(name) + ".pfm");
        ScenePair pair = make_scene_pair(fog::mix_seed(seed, i + 1), w, h);
        fog::save_image(pair.scene, clear_path);
        fog::save_depth(pair.depth, depth_path, 1.0);
        pairs.emplace_back(clear_path, depth_path);
    }
    fog::SynthesisOptions opts;
    opts.airlight_lo = airlight_lo;
    opts.airlight_hi = airlight_hi;
    return fog::generate_dataset(pairs, dir / "out", seed, opts);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fogtest

#endif
