#include "promptseg/backend.hpp"

#include <algorithm>
#include <limits>

#include "promptseg/errors.hpp"

namespace promptseg {

std::string backend_tag(const BackendSpec& spec) {
    return spec.kind == BackendKind::reference ? "reference" : "remote";
}

SoftMask segment(const std::vector<LabeledExample>& exemplars, const RasterImage& test,
                 const BackendSpec& spec) {
    if (exemplars.empty()) throw EmptyExemplarList("segment: no exemplars");
    if (spec.kind == BackendKind::reference) {
        return reference_patchmatch(exemplars, test, spec.patch);
    }
    return remote_segment(build_prompt(exemplars, test), spec);
}

namespace {

// index of the stride-grid center nearest to coordinate v; exact ties go to
// the smaller index, matching an ascending scan with strict improvement
inline int nearest_center(int v, int half, int stride, int count) {
    const int j = (v - half + (stride - 1) / 2) / stride; // v < half handled by clamp
    return std::clamp(j, 0, count - 1);
}

} // namespace

SoftMask reference_patchmatch(const std::vector<LabeledExample>& exemplars, const RasterImage& test,
                              const PatchMatchParams& params) {
    if (exemplars.empty()) throw EmptyExemplarList("reference_patchmatch: no exemplars");
    if (params.patch_side < 3 || params.patch_side % 2 == 0) {
        throw std::invalid_argument("reference_patchmatch: patch_side must be odd and >= 3");
    }
    if (params.stride < 1) throw std::invalid_argument("reference_patchmatch: stride must be >= 1");
    const int w = test.width;
    const int h = test.height;
    const int patch = params.patch_side;
    const int half = patch / 2;
    if (patch > w || patch > h) {
        throw PatchLargerThanImage("reference_patchmatch: patch side " + std::to_string(patch) +
                                   " exceeds image " + std::to_string(w) + "x" + std::to_string(h));
    }
    for (const auto& e : exemplars) {
        if (e.image.width != w || e.image.height != h) {
            throw DimensionMismatch("reference_patchmatch: exemplar '" + e.id + "' shape differs from test");
        }
        if (e.mask.width != w || e.mask.height != h) {
            throw DimensionMismatch("reference_patchmatch: mask of '" + e.id + "' shape differs from test");
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
    const long long cells = static_cast<long long>(nx) * ny;

    std::vector<std::uint8_t> votes(static_cast<std::size_t>(cells));
    // grid cells are independent, so this loop parallelizes without
    // affecting the result
#pragma omp parallel for schedule(static)
    for (long long cell = 0; cell < cells; ++cell) {
        const int gx = static_cast<int>(cell % nx);
        const int gy = static_cast<int>(cell / nx);
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
                        const double* trow = test_gray.pixels.data() +
                                             static_cast<std::size_t>(cy + dy) * w + (cx - half);
                        const double* erow = ex.pixels.data() +
                                             static_cast<std::size_t>(by + dy) * w + (bx - half);
                        for (int dx = 0; dx < patch; ++dx) {
                            const double d = trow[dx] - erow[dx];
                            ssd += d * d;
                        }
                        // partial sums only grow, so once we are at or past
                        // the incumbent the candidate can no longer win
                        if (ssd >= best) break;
                    }
                    if (ssd < best) {
                        best = ssd;
                        best_vote = exemplars[e].mask.is_fg(bx, by) ? 1 : 0;
                    }
                }
            }
        }
        votes[static_cast<std::size_t>(cell)] = best_vote;
    }

    SoftMask out;
    out.width = w;
    out.height = h;
    out.values.resize(static_cast<std::size_t>(w) * h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const int gy = nearest_center(y, half, params.stride, ny);
        for (int x = 0; x < w; ++x) {
            const int gx = nearest_center(x, half, params.stride, nx);
            out.values[static_cast<std::size_t>(y) * w + x] =
                votes[static_cast<std::size_t>(gy) * nx + gx] ? 1.0 : 0.0;
        }
    }
    return out;
}

BinaryMask binarize(const SoftMask& soft, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw std::invalid_argument("binarize: threshold must be in [0,1]");
    }
    BinaryMask m = BinaryMask::filled(soft.width, soft.height, false);
    for (std::size_t i = 0; i < soft.values.size(); ++i) {
        m.fg[i] = soft.values[i] >= threshold ? 1 : 0;
    }
    return m;
}

SoftMask to_soft(const BinaryMask& mask) {
    SoftMask s;
    s.width = mask.width;
    s.height = mask.height;
    s.values.resize(mask.fg.size());
    for (std::size_t i = 0; i < mask.fg.size(); ++i) s.values[i] = mask.fg[i] ? 1.0 : 0.0;
    return s;
}

} // namespace promptseg
