#include "fog/image.hpp"

#include <cmath>
#include <string>

namespace fog {

namespace {

void check_dims(int width, int height, std::size_t channels, std::size_t actual,
                const char* what) {
    if (width <= 0 || height <= 0)
        throw ValidationError(std::string(what) + ": dimensions must be positive, got " +
                              std::to_string(width) + "x" + std::to_string(height));
    std::size_t expected = static_cast<std::size_t>(width) * height * channels;
    if (actual != expected)
        throw ValidationError(std::string(what) + ": data length " + std::to_string(actual) +
                              " does not match " + std::to_string(width) + "x" +
                              std::to_string(height) + "x" + std::to_string(channels));
}

[[noreturn]] void reject(const char* what, std::size_t flat, std::size_t channels, int width,
                         double v) {
    std::size_t pixel = flat / channels;
    int x = static_cast<int>(pixel % width);
    int y = static_cast<int>(pixel / width);
    throw ValidationError(std::string(what) + ": value " + std::to_string(v) + " at pixel (" +
                          std::to_string(x) + "," + std::to_string(y) + ") out of range");
}

}  // namespace

RgbImage::RgbImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height, 3, data_.size(), "RgbImage");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        double v = data_[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) reject("RgbImage", i, 3, width_, v);
    }
}

RgbImage RgbImage::filled(int width, int height, double r, double g, double b) {
    std::vector<double> data(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t p = 0; p < data.size(); p += 3) {
        data[p] = r;
        data[p + 1] = g;
        data[p + 2] = b;
    }
    return RgbImage(width, height, std::move(data));
}

DepthMap::DepthMap(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height, 1, data_.size(), "DepthMap");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        double v = data_[i];
        if (!std::isfinite(v) || v < 0.0) reject("DepthMap", i, 1, width_, v);
    }
}

TransmissionMap::TransmissionMap(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height, 1, data_.size(), "TransmissionMap");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        double v = data_[i];
        if (!std::isfinite(v) || v < kTransmissionFloor || v > 1.0)
            reject("TransmissionMap", i, 1, width_, v);
    }
}

}  // namespace fog
