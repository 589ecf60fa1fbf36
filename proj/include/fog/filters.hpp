#ifndef FOG_FILTERS_HPP
#define FOG_FILTERS_HPP

#include <vector>

#include "fog/image.hpp"

namespace fog {

// Single-channel kernels on row-major planes. Windows are truncated at the
// image border (no padding), so constant inputs stay constant.

/// Mean over a (2r+1)^2 window, O(N) via integral image.
std::vector<double> box_mean(const std::vector<double>& src, int width, int height, int radius);

/// Min over a (2r+1)^2 window, separable (rows then columns).
std::vector<double> min_filter(const std::vector<double>& src, int width, int height, int radius);

/// He et al. guided filter with a grayscale guide: q = mean(a)*I + mean(b),
/// a = cov(I,p)/(var(I)+eps). Edge-preserving where the guide has structure.
std::vector<double> guided_filter(const std::vector<double>& input,
                                  const std::vector<double>& guide, int width, int height,
                                  int radius, double eps);

/// Rec.601 luma of an RGB image (0.299 R + 0.587 G + 0.114 B).
std::vector<double> luma(const RgbImage& image);

/// 2x2 average pooling; odd trailing rows/columns are dropped.
std::vector<double> downsample2(const std::vector<double>& src, int width, int height,
                                int& out_width, int& out_height);

/// Classic non-local means on the luma patch distance, applied per channel.
/// patch and search are full window sizes (odd); strength is the usual h.
RgbImage nlm_denoise(const RgbImage& image, int patch, int search, double strength);

}  // namespace fog

#endif
