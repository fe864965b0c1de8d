#include "promptseg/serial/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "promptseg/errors.hpp"

namespace promptseg::serial {

double frobenius_ref(const GrayImage& a, const GrayImage& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("frobenius_ref: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double ssim_ref(const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    if (!a.same_shape(b)) throw DimensionMismatch("ssim_ref: shape mismatch");
    const int win = p.window_side;
    if (a.width < win || a.height < win) throw ImageTooSmall("ssim_ref: image smaller than window");

    // explicit 2D kernel, normalized over the full window
    std::vector<double> kernel(static_cast<std::size_t>(win) * win);
    const int half = win / 2;
    double ksum = 0.0;
    for (int dy = 0; dy < win; ++dy) {
        for (int dx = 0; dx < win; ++dx) {
            const double ry = dy - half;
            const double rx = dx - half;
            const double w = std::exp(-(rx * rx + ry * ry) / (2.0 * p.gaussian_sigma * p.gaussian_sigma));
            kernel[static_cast<std::size_t>(dy) * win + dx] = w;
            ksum += w;
        }
    }
    for (double& w : kernel) w /= ksum;

    const int out_w = a.width - win + 1;
    const int out_h = a.height - win + 1;
    double total = 0.0;
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double mu_a = 0.0, mu_b = 0.0;
            for (int dy = 0; dy < win; ++dy) {
                for (int dx = 0; dx < win; ++dx) {
                    const double w = kernel[static_cast<std::size_t>(dy) * win + dx];
                    mu_a += w * a.at(x + dx, y + dy);
                    mu_b += w * b.at(x + dx, y + dy);
                }
            }
            // definition-form second moments: weighted sums of deviations
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (int dy = 0; dy < win; ++dy) {
                for (int dx = 0; dx < win; ++dx) {
                    const double w = kernel[static_cast<std::size_t>(dy) * win + dx];
                    const double da = a.at(x + dx, y + dy) - mu_a;
                    const double db = b.at(x + dx, y + dy) - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            }
            const double num = (2.0 * mu_a * mu_b + p.c1) * (2.0 * cov + p.c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + p.c1) * (var_a + var_b + p.c2);
            total += num / den;
        }
    }
    return total / (static_cast<double>(out_w) * out_h);
}

double iou_ref(const BinaryMask& pred, const BinaryMask& gt) {
    if (!pred.same_shape(gt)) throw DimensionMismatch("iou_ref: shape mismatch");
    long long np = 0, ng = 0, ni = 0;
    for (std::size_t i = 0; i < pred.fg.size(); ++i) {
        if (pred.fg[i]) ++np;
        if (gt.fg[i]) ++ng;
        if (pred.fg[i] && gt.fg[i]) ++ni;
    }
    const long long nu = np + ng - ni;
    if (nu == 0) return 1.0;
    return static_cast<double>(ni) / static_cast<double>(nu);
}

SoftMask patchmatch_bruteforce_ref(const std::vector<LabeledExample>& exemplars,
                                   const RasterImage& test, const PatchMatchParams& params) {
    if (exemplars.empty()) throw EmptyExemplarList("patchmatch_bruteforce_ref: no exemplars");
    const int w = test.width;
    const int h = test.height;
    const int patch = params.patch_side;
    const int half = patch / 2;
    if (patch > w || patch > h) {
        throw PatchLargerThanImage("patchmatch_bruteforce_ref: patch exceeds image");
    }
    for (const auto& e : exemplars) {
        if (e.image.width != w || e.image.height != h) {
            throw DimensionMismatch("patchmatch_bruteforce_ref: exemplar shape differs from test");
        }
    }

    const GrayImage test_gray = to_grayscale(test);
    std::vector<GrayImage> ex_gray;
    ex_gray.reserve(exemplars.size());
    for (const auto& e : exemplars) ex_gray.push_back(to_grayscale(e.image));

    std::vector<int> cxs, cys;
    for (int c = half; c <= w - 1 - half; c += params.stride) cxs.push_back(c);
    for (int c = half; c <= h - 1 - half; c += params.stride) cys.push_back(c);
    const int nx = static_cast<int>(cxs.size());
    const int ny = static_cast<int>(cys.size());

    std::vector<std::uint8_t> votes(static_cast<std::size_t>(ny) * nx);
    for (int gy = 0; gy < ny; ++gy) {
        for (int gx = 0; gx < nx; ++gx) {
            const int cx = cxs[gx];
            const int cy = cys[gy];
            double best = std::numeric_limits<double>::infinity();
            std::uint8_t best_vote = 0;
            for (std::size_t e = 0; e < ex_gray.size(); ++e) {
                const GrayImage& ex = ex_gray[e];
                for (int by = half; by <= h - 1 - half; ++by) {
                    for (int bx = half; bx <= w - 1 - half; ++bx) {
                        double ssd = 0.0;
                        for (int dy = -half; dy <= half; ++dy) {
                            for (int dx = -half; dx <= half; ++dx) {
                                const double d = test_gray.at(cx + dx, cy + dy) - ex.at(bx + dx, by + dy);
                                ssd += d * d;
                            }
                        }
                        if (ssd < best) {
                            best = ssd;
                            best_vote = exemplars[e].mask.is_fg(bx, by) ? 1 : 0;
                        }
                    }
                }
            }
            votes[static_cast<std::size_t>(gy) * nx + gx] = best_vote;
        }
    }

    SoftMask out;
    out.width = w;
    out.height = h;
    out.values.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // nearest grid center by exhaustive scan; first win keeps the
            // smaller index on ties
            int best_gx = 0, best_gy = 0;
            int best_dx = std::numeric_limits<int>::max();
            int best_dy = std::numeric_limits<int>::max();
            for (int g = 0; g < nx; ++g) {
                const int d = std::abs(x - cxs[g]);
                if (d < best_dx) {
                    best_dx = d;
                    best_gx = g;
                }
            }
            for (int g = 0; g < ny; ++g) {
                const int d = std::abs(y - cys[g]);
                if (d < best_dy) {
                    best_dy = d;
                    best_gy = g;
                }
            }
            out.values[static_cast<std::size_t>(y) * w + x] =
                votes[static_cast<std::size_t>(best_gy) * nx + best_gx] ? 1.0 : 0.0;
        }
    }
    return out;
}

RasterImage resize_bilinear_ref(const RasterImage& img, int side) {
    if (img.width == side && img.height == side) return img;
    RasterImage out;
    out.width = side;
    out.height = side;
    out.pixels.resize(static_cast<std::size_t>(side) * side * 3);
    const double sx_scale = static_cast<double>(img.width) / side;
    const double sy_scale = static_cast<double>(img.height) / side;
    for (int y = 0; y < side; ++y) {
        double sy = (y + 0.5) * sy_scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double ty = sy - y0;
        for (int x = 0; x < side; ++x) {
            double sx = (x + 0.5) * sx_scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double tx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double v = (1.0 - ty) * ((1.0 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c)) +
                                 ty * ((1.0 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c));
                out.pixels[(static_cast<std::size_t>(y) * side + x) * 3 + c] = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return out;
}

} // namespace promptseg::serial
