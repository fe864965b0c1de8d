#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace promptseg {

/// 3-channel image, row-major interleaved RGB, values in [0,1].
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // width * height * 3

    double& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    static RasterImage filled(int w, int h, double value);
    bool same_shape(const RasterImage& o) const { return width == o.width && height == o.height; }
    bool operator==(const RasterImage&) const = default;
};

/// Single-channel image, row-major, values in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // width * height

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    static GrayImage filled(int w, int h, double value);
    bool same_shape(const GrayImage& o) const { return width == o.width && height == o.height; }
    bool operator==(const GrayImage&) const = default;
};

/// z-scored 3-channel image; values are unbounded reals.
struct NormalizedImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // width * height * 3
    bool operator==(const NormalizedImage&) const = default;
};

/// Per-pixel foreground labeling; entries are strictly 0 or 1.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> fg; // width * height

    bool is_fg(int x, int y) const { return fg[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { fg[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    static BinaryMask filled(int w, int h, bool v);
    bool same_shape(const BinaryMask& o) const { return width == o.width && height == o.height; }
    bool operator==(const BinaryMask&) const = default;
};

struct PreprocessConfig {
    int target_side = 448;
    std::array<double, 3> channel_means{0.485, 0.456, 0.406};
    std::array<double, 3> channel_stds{0.229, 0.224, 0.225};
    bool operator==(const PreprocessConfig&) const = default;
};

/// Container facts recorded while decoding, before any channel expansion.
struct DecodeInfo {
    std::string container;   // "png" or "jpeg"
    int source_channels = 0; // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
    int bit_depth = 0;
};

/// Decode a PNG or JPEG stream into a 3-channel image; 8-bit value v maps to v/255.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage decode_image(std::span<const std::uint8_t> bytes, DecodeInfo& info);

/// 8-bit RGB PNG, no interlacing, fixed filter/compression so output bytes are stable.
std::vector<std::uint8_t> encode_png(const RasterImage& img);
/// 8-bit grayscale PNG with the same determinism guarantees.
std::vector<std::uint8_t> encode_png_gray(const GrayImage& img);

/// Bilinear resize to side x side with half-pixel-centered sampling and edge clamp.
/// Anisotropic when the input is not square. Identity when already at the target side.
RasterImage resize_bilinear(const RasterImage& img, int side);

/// Nearest-neighbor resize for masks (labels stay binary).
BinaryMask resize_nearest(const BinaryMask& mask, int side);

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const RasterImage& img);

NormalizedImage normalize_zscore(const RasterImage& img, const PreprocessConfig& cfg);
RasterImage denormalize_zscore(const NormalizedImage& img, const PreprocessConfig& cfg);

/// Foreground where any channel is >= 0.5 (i.e. byte >= 128 for 8-bit sources).
BinaryMask mask_from_image(const RasterImage& img);
GrayImage mask_to_gray(const BinaryMask& mask);

} // namespace promptseg
