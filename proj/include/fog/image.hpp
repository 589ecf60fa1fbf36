#ifndef FOG_IMAGE_HPP
#define FOG_IMAGE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "fog/common.hpp"

namespace fog {

/// Lower clamp applied to every transmission value. Keeps the scattering
/// model inversion J = (P - A(1-t))/t well conditioned; shared by synthesis,
/// unfolding and the loss terms.
inline constexpr double kTransmissionFloor = 0.05;

/// Row-major RGB image with linear intensities in [0,1]. Immutable after
/// construction; every constructor validates the range invariant, so no
/// downstream operation can observe an out-of-range channel.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, std::vector<double> data);

    static RgbImage filled(int width, int height, double r, double g, double b);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t sample_count() const { return pixel_count() * 3; }

    double at(int x, int y, int c) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }

    std::span<const double> data() const { return data_; }

    bool same_shape(const RgbImage& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Per-pixel scene depth in meters (>= 0, finite). Depth 0 marks a hole in
/// the source data and synthesizes to t = 1 (no fog) via exp(0).
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const double> data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Per-pixel medium transmission, clamped to [kTransmissionFloor, 1].
class TransmissionMap {
public:
    TransmissionMap() = default;
    TransmissionMap(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const RgbImage& img) const {
        return width_ == img.width() && height_ == img.height();
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

}  // namespace fog

#endif
