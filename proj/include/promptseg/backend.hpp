#pragma once

#include <string>
#include <vector>

#include "promptseg/example.hpp"
#include "promptseg/image.hpp"
#include "promptseg/prompt.hpp"

namespace promptseg {

/// Per-pixel foreground confidence in [0,1].
struct SoftMask {
    int width = 0;
    int height = 0;
    std::vector<double> values; // width * height

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const SoftMask&) const = default;
};

enum class PatchAggregation { center_vote };

struct PatchMatchParams {
    int patch_side = 7; // odd, >= 3
    int stride = 2;     // >= 1
    PatchAggregation aggregation = PatchAggregation::center_vote;
    bool operator==(const PatchMatchParams&) const = default;
};

enum class BackendKind { reference, remote };

struct BackendSpec {
    BackendKind kind = BackendKind::reference;
    std::string endpoint;     // required iff kind == remote
    double timeout_secs = 60; // remote request budget
    PatchMatchParams patch;   // used iff kind == reference
    bool operator==(const BackendSpec&) const = default;
};

std::string backend_tag(const BackendSpec& spec); // "reference" or "remote"

/// Dispatch facade over the two backends.
SoftMask segment(const std::vector<LabeledExample>& exemplars, const RasterImage& test,
                 const BackendSpec& spec);

/// Nonparametric mask transfer: every test patch (centers on the stride grid)
/// votes with the mask value at the center of its closest exemplar patch
/// (grayscale SSD; ties broken by exemplar rank, then row-major position);
/// votes spread to pixels by nearest-grid-center assignment.
SoftMask reference_patchmatch(const std::vector<LabeledExample>& exemplars, const RasterImage& test,
                              const PatchMatchParams& params);

/// POSTs the canvas to <endpoint>/segment and decodes the returned grayscale
/// PNG into confidences (byte/255).
SoftMask remote_segment(const PromptCanvas& canvas, const BackendSpec& spec);

/// Foreground iff value >= threshold.
BinaryMask binarize(const SoftMask& soft, double threshold = 0.5);

/// Embeds a binary mask as a 0/1-valued soft mask.
SoftMask to_soft(const BinaryMask& mask);

} // namespace promptseg
