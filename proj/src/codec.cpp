#include "fog/codec.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace fog {

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) {
        const char* verb = (mode[0] == 'r') ? "cannot open" : "cannot write";
        throw IoError(std::string(verb) + " '" + path.string() + "': " + std::strerror(errno));
    }
    return f;
}

std::uint8_t quantize8(double v) {
    // round half up, per the file-format contract
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

// ---------------------------------------------------------------- PNG

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

void png_error_to_exception(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg ? msg : "libpng error";
    png_longjmp(png, 1);
}

void png_warning_silent(png_structp, png_const_charp) {}

// Reads a PNG into interleaved rows. rgb=true decodes to RGB8, otherwise to
// 16-bit grayscale (8-bit gray inputs are widened to 16 by libpng).
void read_png(const std::filesystem::path& path, bool rgb, int& width, int& height,
              std::vector<std::uint8_t>& bytes) {
    FilePtr f = open_file(path, "rb");

    std::uint8_t sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw ValidationError("'" + path.string() + "' is not a PNG file");

    std::string errmsg;
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_to_exception,
                                   png_warning_silent);
    if (!r.png) throw IoError("libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw IoError("libpng init failed");

    if (setjmp(png_jmpbuf(r.png)))
        throw ValidationError("corrupt PNG '" + path.string() + "': " + errmsg);

    png_init_io(r.png, f.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    width = static_cast<int>(png_get_image_width(r.png, r.info));
    height = static_cast<int>(png_get_image_height(r.png, r.info));
    int color = png_get_color_type(r.png, r.info);
    int depth = png_get_bit_depth(r.png, r.info);

    if (rgb) {
        if (depth == 16) png_set_strip_16(r.png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
        if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(r.png);
        png_set_strip_alpha(r.png);
    } else {
        if (color != PNG_COLOR_TYPE_GRAY)
            throw ValidationError("depth PNG '" + path.string() + "' must be grayscale");
        if (depth < 16) png_set_expand_16(r.png);
        png_set_swap(r.png);  // stored big-endian; we want host little-endian
    }
    png_read_update_info(r.png, r.info);

    std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    bytes.assign(rowbytes * height, 0);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = bytes.data() + rowbytes * y;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
}

void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               int bit_depth, const std::vector<std::uint8_t>& bytes, std::size_t rowbytes) {
    FilePtr f = open_file(path, "wb");

    std::string errmsg;
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_to_exception,
                                    png_warning_silent);
    if (!w.png) throw IoError("libpng init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("libpng init failed");

    if (setjmp(png_jmpbuf(w.png)))
        throw IoError("cannot write PNG '" + path.string() + "': " + errmsg);

    png_init_io(w.png, f.get());
    // fixed encoder settings so identical pixels yield identical bytes
    png_set_compression_level(w.png, 6);
    png_set_filter(w.png, 0, PNG_FILTER_NONE);
    png_set_IHDR(w.png, w.info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    if (bit_depth == 16) png_set_swap(w.png);

    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data() + rowbytes * y);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

// ---------------------------------------------------------------- PPM (P6)

int ppm_next_int(std::FILE* f, const std::filesystem::path& path) {
    // skips whitespace and '#' comments
    int c;
    for (;;) {
        c = std::fgetc(f);
        if (c == '#') {
            while (c != EOF && c != '\n') c = std::fgetc(f);
        } else if (c == EOF || !std::isspace(c)) {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c))
        throw ValidationError("corrupt PPM header in '" + path.string() + "'");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 30) throw ValidationError("PPM header value overflow in '" + path.string() + "'");
        c = std::fgetc(f);
    }
    return value;
}

RgbImage load_ppm(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    char magic[2];
    if (std::fread(magic, 1, 2, f.get()) != 2 || magic[0] != 'P' || magic[1] != '6')
        throw ValidationError("'" + path.string() + "' is not a binary PPM (P6)");
    int width = ppm_next_int(f.get(), path);
    int height = ppm_next_int(f.get(), path);
    int maxval = ppm_next_int(f.get(), path);
    if (maxval != 255)
        throw ValidationError("PPM '" + path.string() + "' has unsupported maxval " +
                              std::to_string(maxval));
    // single whitespace byte separates header from raster
    std::size_t n = static_cast<std::size_t>(width) * height * 3;
    std::vector<std::uint8_t> bytes(n);
    if (std::fread(bytes.data(), 1, n, f.get()) != n)
        throw ValidationError("truncated PPM raster in '" + path.string() + "'");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = bytes[i] / 255.0;
    return RgbImage(width, height, std::move(data));
}

void save_ppm(const RgbImage& image, const std::filesystem::path& path) {
    FilePtr f = open_file(path, "wb");
    std::string header = "P6\n" + std::to_string(image.width()) + " " +
                         std::to_string(image.height()) + "\n255\n";
    if (std::fwrite(header.data(), 1, header.size(), f.get()) != header.size())
        throw IoError("short write to '" + path.string() + "'");
    std::vector<std::uint8_t> bytes(image.sample_count());
    auto src = image.data();
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(src[i]);
    if (std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
        throw IoError("short write to '" + path.string() + "'");
}

// ---------------------------------------------------------------- PFM

// Grayscale PFM ("Pf"), rows stored bottom-to-top, negative scale marks
// little-endian floats. Only little-endian files are produced or consumed.
std::vector<float> load_pfm(const std::filesystem::path& path, int& width, int& height) {
    FilePtr f = open_file(path, "rb");
    char magic[3] = {0, 0, 0};
    if (std::fscanf(f.get(), "%2s", magic) != 1 || std::strcmp(magic, "Pf") != 0)
        throw ValidationError("'" + path.string() + "' is not a grayscale PFM");
    double scale = 0.0;
    if (std::fscanf(f.get(), "%d %d %lf", &width, &height, &scale) != 3 || width <= 0 ||
        height <= 0)
        throw ValidationError("corrupt PFM header in '" + path.string() + "'");
    if (scale >= 0.0)
        throw ValidationError("big-endian PFM '" + path.string() + "' is not supported");
    std::fgetc(f.get());  // the single whitespace after the header
    std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<float> raster(n);
    if (std::fread(raster.data(), sizeof(float), n, f.get()) != n)
        throw ValidationError("truncated PFM raster in '" + path.string() + "'");
    // flip to top-down row order
    std::vector<float> data(n);
    for (int y = 0; y < height; ++y)
        std::memcpy(data.data() + static_cast<std::size_t>(y) * width,
                    raster.data() + static_cast<std::size_t>(height - 1 - y) * width,
                    sizeof(float) * width);
    return data;
}

void save_pfm(const std::filesystem::path& path, int width, int height,
              std::span<const double> values) {
    FilePtr f = open_file(path, "wb");
    std::string header =
        "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
    if (std::fwrite(header.data(), 1, header.size(), f.get()) != header.size())
        throw IoError("short write to '" + path.string() + "'");
    std::vector<float> row(width);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x)
            row[x] = static_cast<float>(values[static_cast<std::size_t>(y) * width + x]);
        if (std::fwrite(row.data(), sizeof(float), row.size(), f.get()) != row.size())
            throw IoError("short write to '" + path.string() + "'");
    }
}

void require_exists(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
        throw IoError("no such file: '" + path.string() + "'");
}

}  // namespace

RgbImage load_image(const std::filesystem::path& path) {
    require_exists(path);
    std::string ext = lower_ext(path);
    if (ext == ".png") {
        int width = 0, height = 0;
        std::vector<std::uint8_t> bytes;
        read_png(path, /*rgb=*/true, width, height, bytes);
        std::size_t n = static_cast<std::size_t>(width) * height * 3;
        if (bytes.size() < n) throw ValidationError("short PNG raster in '" + path.string() + "'");
        std::vector<double> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = bytes[i] / 255.0;
        return RgbImage(width, height, std::move(data));
    }
    if (ext == ".ppm") return load_ppm(path);
    throw ValidationError("unsupported image codec for '" + path.string() +
                          "' (expected .png or .ppm)");
}

void save_image(const RgbImage& image, const std::filesystem::path& path) {
    std::string ext = lower_ext(path);
    if (ext == ".png") {
        std::vector<std::uint8_t> bytes(image.sample_count());
        auto src = image.data();
        for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(src[i]);
        write_png(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, bytes,
                  static_cast<std::size_t>(image.width()) * 3);
        return;
    }
    if (ext == ".ppm") {
        save_ppm(image, path);
        return;
    }
    throw ValidationError("unsupported image codec for '" + path.string() +
                          "' (expected .png or .ppm)");
}

DepthMap load_depth(const std::filesystem::path& path, double meters_per_unit) {
    require_exists(path);
    if (!(meters_per_unit > 0.0) || !std::isfinite(meters_per_unit))
        throw ValidationError("meters_per_unit must be positive and finite");
    std::string ext = lower_ext(path);
    if (ext == ".png") {
        int width = 0, height = 0;
        std::vector<std::uint8_t> bytes;
        read_png(path, /*rgb=*/false, width, height, bytes);
        std::size_t n = static_cast<std::size_t>(width) * height;
        std::vector<double> data(n);
        const std::uint16_t* raw = reinterpret_cast<const std::uint16_t*>(bytes.data());
        for (std::size_t i = 0; i < n; ++i) data[i] = raw[i] * meters_per_unit;
        return DepthMap(width, height, std::move(data));
    }
    if (ext == ".pfm") {
        int width = 0, height = 0;
        std::vector<float> raw = load_pfm(path, width, height);
        std::vector<double> data(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (!std::isfinite(raw[i]) || raw[i] < 0.0f) {
                int x = static_cast<int>(i % width);
                int y = static_cast<int>(i / width);
                throw ValidationError("depth '" + path.string() + "' has invalid value at (" +
                                      std::to_string(x) + "," + std::to_string(y) + ")");
            }
            data[i] = raw[i];
        }
        return DepthMap(width, height, std::move(data));
    }
    throw ValidationError("unsupported depth codec for '" + path.string() +
                          "' (expected .png or .pfm)");
}

void save_depth(const DepthMap& depth, const std::filesystem::path& path,
                double meters_per_unit) {
    std::string ext = lower_ext(path);
    if (ext == ".png") {
        if (!(meters_per_unit > 0.0) || !std::isfinite(meters_per_unit))
            throw ValidationError("meters_per_unit must be positive and finite");
        std::size_t n = depth.pixel_count();
        std::vector<std::uint8_t> bytes(n * 2);
        std::uint16_t* raw = reinterpret_cast<std::uint16_t*>(bytes.data());
        auto src = depth.data();
        for (std::size_t i = 0; i < n; ++i) {
            double units = std::floor(src[i] / meters_per_unit + 0.5);
            raw[i] = static_cast<std::uint16_t>(clamp(units, 0.0, 65535.0));
        }
        write_png(path, depth.width(), depth.height(), PNG_COLOR_TYPE_GRAY, 16, bytes,
                  static_cast<std::size_t>(depth.width()) * 2);
        return;
    }
    if (ext == ".pfm") {
        save_pfm(path, depth.width(), depth.height(), depth.data());
        return;
    }
    throw ValidationError("unsupported depth codec for '" + path.string() +
                          "' (expected .png or .pfm)");
}

TransmissionMap load_transmission(const std::filesystem::path& path) {
    require_exists(path);
    int width = 0, height = 0;
    std::vector<float> raw = load_pfm(path, width, height);
    std::vector<double> data(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = raw[i];
        // snap float32 rounding back onto the closed range
        if (v < kTransmissionFloor && v > kTransmissionFloor - 1e-6) v = kTransmissionFloor;
        if (v > 1.0 && v < 1.0 + 1e-6) v = 1.0;
        data[i] = v;
    }
    return TransmissionMap(width, height, std::move(data));
}

void save_transmission(const TransmissionMap& trans, const std::filesystem::path& path) {
    save_pfm(path, trans.width(), trans.height(), trans.data());
}

}  // namespace fog
