#include "fog/filters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fog {

namespace {

void check_plane(std::size_t size, int width, int height, int radius) {
    if (width <= 0 || height <= 0 || size != static_cast<std::size_t>(width) * height)
        throw ValidationError("filter: plane size does not match dimensions");
    if (radius < 0) throw ValidationError("filter: radius must be >= 0");
}

// integral image with one extra row/column of zeros
void integral(const std::vector<double>& src, int width, int height, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(width + 1) * (height + 1), 0.0);
    for (int y = 0; y < height; ++y) {
        double rowsum = 0.0;
        const double* s = src.data() + static_cast<std::size_t>(y) * width;
        double* cur = out.data() + static_cast<std::size_t>(y + 1) * (width + 1);
        const double* prev = out.data() + static_cast<std::size_t>(y) * (width + 1);
        for (int x = 0; x < width; ++x) {
            rowsum += s[x];
            cur[x + 1] = prev[x + 1] + rowsum;
        }
    }
}

}  // namespace

std::vector<double> box_mean(const std::vector<double>& src, int width, int height, int radius) {
    check_plane(src.size(), width, height, radius);
    std::vector<double> sum;
    integral(src, width, height, sum);
    std::vector<double> out(src.size());
    auto at = [&](int x, int y) { return sum[static_cast<std::size_t>(y) * (width + 1) + x]; };
    for (int y = 0; y < height; ++y) {
        int y0 = std::max(0, y - radius), y1 = std::min(height - 1, y + radius);
        for (int x = 0; x < width; ++x) {
            int x0 = std::max(0, x - radius), x1 = std::min(width - 1, x + radius);
            double s = at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
            out[static_cast<std::size_t>(y) * width + x] =
                s / (static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1));
        }
    }
    return out;
}

std::vector<double> min_filter(const std::vector<double>& src, int width, int height, int radius) {
    check_plane(src.size(), width, height, radius);
    if (radius == 0) return src;
    std::vector<double> rows(src.size()), out(src.size());
    for (int y = 0; y < height; ++y) {
        const double* s = src.data() + static_cast<std::size_t>(y) * width;
        double* d = rows.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            int x0 = std::max(0, x - radius), x1 = std::min(width - 1, x + radius);
            double m = s[x0];
            for (int i = x0 + 1; i <= x1; ++i) m = std::min(m, s[i]);
            d[x] = m;
        }
    }
    for (int y = 0; y < height; ++y) {
        int y0 = std::max(0, y - radius), y1 = std::min(height - 1, y + radius);
        for (int x = 0; x < width; ++x) {
            double m = rows[static_cast<std::size_t>(y0) * width + x];
            for (int i = y0 + 1; i <= y1; ++i)
                m = std::min(m, rows[static_cast<std::size_t>(i) * width + x]);
            out[static_cast<std::size_t>(y) * width + x] = m;
        }
    }
    return out;
}

std::vector<double> guided_filter(const std::vector<double>& input,
                                  const std::vector<double>& guide, int width, int height,
                                  int radius, double eps) {
    check_plane(input.size(), width, height, radius);
    if (guide.size() != input.size()) throw ValidationError("guided_filter: guide size mismatch");
    if (!(eps > 0.0)) throw ValidationError("guided_filter: eps must be positive");

    std::size_t n = input.size();
    std::vector<double> gp(n), gg(n);
    for (std::size_t i = 0; i < n; ++i) {
        gp[i] = guide[i] * input[i];
        gg[i] = guide[i] * guide[i];
    }
    std::vector<double> mean_g = box_mean(guide, width, height, radius);
    std::vector<double> mean_p = box_mean(input, width, height, radius);
    std::vector<double> mean_gp = box_mean(gp, width, height, radius);
    std::vector<double> mean_gg = box_mean(gg, width, height, radius);

    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        double var = mean_gg[i] - mean_g[i] * mean_g[i];
        double cov = mean_gp[i] - mean_g[i] * mean_p[i];
        a[i] = cov / (var + eps);
        b[i] = mean_p[i] - a[i] * mean_g[i];
    }
    std::vector<double> mean_a = box_mean(a, width, height, radius);
    std::vector<double> mean_b = box_mean(b, width, height, radius);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = mean_a[i] * guide[i] + mean_b[i];
    return out;
}

std::vector<double> luma(const RgbImage& image) {
    std::vector<double> out(image.pixel_count());
    auto src = image.data();
    for (std::size_t p = 0; p < out.size(); ++p)
        out[p] = 0.299 * src[p * 3] + 0.587 * src[p * 3 + 1] + 0.114 * src[p * 3 + 2];
    return out;
}

std::vector<double> downsample2(const std::vector<double>& src, int width, int height,
                                int& out_width, int& out_height) {
    check_plane(src.size(), width, height, 0);
    out_width = width / 2;
    out_height = height / 2;
    if (out_width < 1 || out_height < 1)
        throw ValidationError("downsample2: image too small to pool");
    std::vector<double> out(static_cast<std::size_t>(out_width) * out_height);
    for (int y = 0; y < out_height; ++y) {
        const double* r0 = src.data() + static_cast<std::size_t>(2 * y) * width;
        const double* r1 = r0 + width;
        double* d = out.data() + static_cast<std::size_t>(y) * out_width;
        for (int x = 0; x < out_width; ++x)
            d[x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
    return out;
}

RgbImage nlm_denoise(const RgbImage& image, int patch, int search, double strength) {
    if (patch < 1 || patch % 2 == 0 || search < 1 || search % 2 == 0)
        throw ValidationError("nlm_denoise: patch and search must be odd and positive");
    if (!(strength > 0.0)) throw ValidationError("nlm_denoise: strength must be positive");

    int w = image.width(), h = image.height();
    int pr = patch / 2, sr = search / 2;
    std::vector<double> gray = luma(image);
    auto src = image.data();
    std::vector<double> out(image.sample_count());

    const double inv_h2 = 1.0 / (strength * strength * patch * patch);
    auto gat = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return gray[static_cast<std::size_t>(y) * w + x];
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double wsum = 0.0;
            double acc[3] = {0.0, 0.0, 0.0};
            for (int dy = -sr; dy <= sr; ++dy) {
                int ny = y + dy;
                if (ny < 0 || ny >= h) continue;
                for (int dx = -sr; dx <= sr; ++dx) {
                    int nx = x + dx;
                    if (nx < 0 || nx >= w) continue;
                    double ssd = 0.0;
                    for (int py = -pr; py <= pr; ++py)
                        for (int px = -pr; px <= pr; ++px) {
                            double diff = gat(x + px, y + py) - gat(nx + px, ny + py);
                            ssd += diff * diff;
                        }
                    double wgt = std::exp(-ssd * inv_h2);
                    std::size_t q = (static_cast<std::size_t>(ny) * w + nx) * 3;
                    wsum += wgt;
                    acc[0] += wgt * src[q];
                    acc[1] += wgt * src[q + 1];
                    acc[2] += wgt * src[q + 2];
                }
            }
            std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
            for (int c = 0; c < 3; ++c) out[p + c] = clamp01(acc[c] / wsum);
        }
    }
    return RgbImage(w, h, std::move(out));
}

}  // namespace fog
