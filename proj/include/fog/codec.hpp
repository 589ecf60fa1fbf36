#ifndef FOG_CODEC_HPP
#define FOG_CODEC_HPP

#include <filesystem>

#include "fog/image.hpp"

namespace fog {

// Image codecs: 8-bit PNG and binary PPM (P6), selected by file extension.
// 8-bit samples map to [0,1] by v/255 on load; saving quantizes with
// round-half-up so identical pixel data always produces identical bytes.
RgbImage load_image(const std::filesystem::path& path);
void save_image(const RgbImage& image, const std::filesystem::path& path);

// Depth codecs: 16-bit grayscale PNG (values scaled by meters_per_unit) and
// little-endian grayscale PFM (values are meters as stored).
DepthMap load_depth(const std::filesystem::path& path, double meters_per_unit);
void save_depth(const DepthMap& depth, const std::filesystem::path& path,
                double meters_per_unit);

// Transmission maps travel as grayscale PFM so the (0,1] values survive
// round trips losslessly at float precision.
TransmissionMap load_transmission(const std::filesystem::path& path);
void save_transmission(const TransmissionMap& trans, const std::filesystem::path& path);

}  // namespace fog

#endif
