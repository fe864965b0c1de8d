#include "promptseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "promptseg/errors.hpp"

namespace promptseg {

RasterImage RasterImage::filled(int w, int h, double value) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h * 3, value);
    return img;
}

GrayImage GrayImage::filled(int w, int h, double value) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, value);
    return img;
}

BinaryMask BinaryMask::filled(int w, int h, bool v) {
    BinaryMask m;
    m.width = w;
    m.height = h;
    m.fg.assign(static_cast<std::size_t>(w) * h, v ? 1 : 0);
    return m;
}

namespace {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// lerp form keeps constants and grid-aligned samples exact
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

} // namespace

RasterImage resize_bilinear(const RasterImage& img, int side) {
    if (side <= 0) throw std::invalid_argument("resize_bilinear: side must be positive");
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("resize_bilinear: empty input");
    if (img.width == side && img.height == side) return img;

    RasterImage out;
    out.width = side;
    out.height = side;
    out.pixels.resize(static_cast<std::size_t>(side) * side * 3);

    const double sx_scale = static_cast<double>(img.width) / side;
    const double sy_scale = static_cast<double>(img.height) / side;

#pragma omp parallel for schedule(static)
    for (int y = 0; y < side; ++y) {
        double sy = (y + 0.5) * sy_scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < side; ++x) {
            double sx = (x + 0.5) * sx_scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = lerp(img.at(x0, y0, c), img.at(x1, y0, c), fx);
                const double bot = lerp(img.at(x0, y1, c), img.at(x1, y1, c), fx);
                out.at(x, y, c) = clamp01(lerp(top, bot, fy));
            }
        }
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int side) {
    if (side <= 0) throw std::invalid_argument("resize_nearest: side must be positive");
    if (mask.width == side && mask.height == side) return mask;

    BinaryMask out;
    out.width = side;
    out.height = side;
    out.fg.resize(static_cast<std::size_t>(side) * side);

    const double sx_scale = static_cast<double>(mask.width) / side;
    const double sy_scale = static_cast<double>(mask.height) / side;
    for (int y = 0; y < side; ++y) {
        int sy = static_cast<int>((y + 0.5) * sy_scale);
        sy = std::clamp(sy, 0, mask.height - 1);
        for (int x = 0; x < side; ++x) {
            int sx = static_cast<int>((x + 0.5) * sx_scale);
            sx = std::clamp(sx, 0, mask.width - 1);
            out.fg[static_cast<std::size_t>(y) * side + x] = mask.fg[static_cast<std::size_t>(sy) * mask.width + sx];
        }
    }
    return out;
}

GrayImage to_grayscale(const RasterImage& img) {
    GrayImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    const std::size_t n = out.pixels.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = &img.pixels[i * 3];
        out.pixels[i] = clamp01(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
    return out;
}

NormalizedImage normalize_zscore(const RasterImage& img, const PreprocessConfig& cfg) {
    for (double s : cfg.channel_stds) {
        if (!(s > 0.0)) throw std::invalid_argument("normalize_zscore: stds must be positive");
    }
    NormalizedImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            out.pixels[i * 3 + c] = (img.pixels[i * 3 + c] - cfg.channel_means[c]) / cfg.channel_stds[c];
        }
    }
    return out;
}

RasterImage denormalize_zscore(const NormalizedImage& img, const PreprocessConfig& cfg) {
    RasterImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            out.pixels[i * 3 + c] = img.pixels[i * 3 + c] * cfg.channel_stds[c] + cfg.channel_means[c];
        }
    }
    return out;
}

BinaryMask mask_from_image(const RasterImage& img) {
    BinaryMask out;
    out.width = img.width;
    out.height = img.height;
    out.fg.resize(static_cast<std::size_t>(img.width) * img.height);
    const std::size_t n = out.fg.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = &img.pixels[i * 3];
        out.fg[i] = (p[0] >= 0.5 || p[1] >= 0.5 || p[2] >= 0.5) ? 1 : 0;
    }
    return out;
}

GrayImage mask_to_gray(const BinaryMask& mask) {
    GrayImage out;
    out.width = mask.width;
    out.height = mask.height;
    out.pixels.resize(mask.fg.size());
    for (std::size_t i = 0; i < mask.fg.size(); ++i) out.pixels[i] = mask.fg[i] ? 1.0 : 0.0;
    return out;
}

} // namespace promptseg
