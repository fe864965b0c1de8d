#pragma once

#include <vector>

#include "promptseg/backend.hpp"
#include "promptseg/example.hpp"
#include "promptseg/image.hpp"
#include "promptseg/similarity.hpp"

// Independently coded single-threaded implementations of the numeric kernels.
// These exist so tests and benchmarks can cross-check the production code
// against a second derivation of each formula; nothing in src/ links them.
namespace promptseg::serial {

/// Plain row-major sum of squared differences, then sqrt.
double frobenius_ref(const GrayImage& a, const GrayImage& b);

/// Direct per-window SSIM: an explicit 2D Gaussian kernel and
/// definition-form moments (variance as weighted sum of squared deviations).
double ssim_ref(const GrayImage& a, const GrayImage& b, const SsimParams& p = {});

/// Integer pixel counting; both-empty pairs score 1.
double iou_ref(const BinaryMask& pred, const BinaryMask& gt);

/// Exhaustive nearest-patch search with no pruning, serial, including a
/// brute-force nearest-grid-center scan for the upsampling step.
SoftMask patchmatch_bruteforce_ref(const std::vector<LabeledExample>& exemplars,
                                   const RasterImage& test, const PatchMatchParams& params);

/// Corner-weight form of bilinear interpolation (half-pixel centers, edge clamp).
RasterImage resize_bilinear_ref(const RasterImage& img, int side);

} // namespace promptseg::serial
