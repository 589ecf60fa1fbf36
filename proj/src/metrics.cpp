#include "fog/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fog/codec.hpp"
#include "fog/filters.hpp"

namespace fog {

double psnr(const RgbImage& a, const RgbImage& b) {
    if (!a.same_shape(b)) throw ValidationError("psnr: dimension mismatch");
    auto av = a.data();
    auto bv = b.data();
    double mse = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        double d = av[i] - bv[i];
        mse += d * d;
    }
    mse /= static_cast<double>(av.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> gaussian_kernel() {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        double x = i - kSsimWindow / 2;
        k[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// separable Gaussian, valid region only: output is (w-10) x (h-10)
std::vector<double> gauss_valid(const std::vector<double>& src, int w, int h, int& ow, int& oh) {
    static const std::array<double, kSsimWindow> kernel = gaussian_kernel();
    ow = w - kSsimWindow + 1;
    oh = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                s += kernel[i] * src[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                s += kernel[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const RgbImage& a, const RgbImage& b) {
    if (!a.same_shape(b)) throw ValidationError("ssim: dimension mismatch");
    if (std::min(a.width(), a.height()) < kSsimWindow)
        throw ValidationError("ssim: image must be at least 11px on a side");
    int w = a.width(), h = a.height();
    std::vector<double> la = luma(a), lb = luma(b);
    std::vector<double> laa(la.size()), lbb(la.size()), lab(la.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
        laa[i] = la[i] * la[i];
        lbb[i] = lb[i] * lb[i];
        lab[i] = la[i] * lb[i];
    }
    int ow = 0, oh = 0;
    std::vector<double> mu_a = gauss_valid(la, w, h, ow, oh);
    std::vector<double> mu_b = gauss_valid(lb, w, h, ow, oh);
    std::vector<double> m_aa = gauss_valid(laa, w, h, ow, oh);
    std::vector<double> m_bb = gauss_valid(lbb, w, h, ow, oh);
    std::vector<double> m_ab = gauss_valid(lab, w, h, ow, oh);

    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        double va = m_aa[i] - mu_a[i] * mu_a[i];
        double vb = m_bb[i] - mu_b[i] * mu_b[i];
        double cab = m_ab[i] - mu_a[i] * mu_b[i];
        double num = (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cab + kC2);
        double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2);
        sum += num / den;
    }
    return sum / static_cast<double>(mu_a.size());
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

EvalReport evaluate_manifest(const DatasetManifest& manifest,
                             const std::filesystem::path& results_dir, const HdenParams& hden) {
    EvalReport report;
    report.rows.resize(manifest.entries.size());

    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        MetricRow& row = report.rows[i];
        std::filesystem::path hazy = manifest.hazy_path(i);
        row.image_id = hazy.stem().string();
        row.level = manifest.entries[i].level;
        std::filesystem::path restored = results_dir / (hazy.stem().string() + ".png");
        if (!std::filesystem::exists(restored)) {
            row.missing = true;
            return;
        }
        RgbImage out = load_image(restored);
        RgbImage gt = load_image(manifest.clear_path(i));
        row.psnr_db = psnr(out, gt);
        row.ssim = ssim(out, gt);
        row.density = estimate_density(out, hden);
    });

    std::array<LevelMean, 3> acc{};
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const MetricRow& row = report.rows[i];
        if (row.missing) {
            report.missing.push_back(
                (results_dir / (row.image_id + ".png")).string());
            continue;
        }
        LevelMean& m = acc[static_cast<int>(row.level)];
        m.psnr_db += row.psnr_db;
        m.ssim += row.ssim;
        m.density += row.density;
        m.count += 1;
    }
    for (int level = 0; level < 3; ++level) {
        if (acc[level].count == 0) continue;
        LevelMean m = acc[level];
        double n = static_cast<double>(m.count);
        m.psnr_db /= n;
        m.ssim /= n;
        m.density /= n;
        report.level_means[level] = m;
    }
    return report;
}

void write_metrics_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write metrics CSV '" + path.string() + "'");
    out << "image_id,psnr_db,ssim,density,level\n";
    for (const MetricRow& row : report.rows) {
        if (row.missing) continue;
        out << row.image_id << "," << format_double(row.psnr_db) << ","
            << format_double(row.ssim) << "," << format_double(row.density) << ","
            << to_string(row.level) << "\n";
    }
}

}  // namespace fog
