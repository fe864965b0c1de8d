#pragma once

#include <string>
#include <vector>

#include "promptseg/example.hpp"
#include "promptseg/image.hpp"

namespace promptseg {

/// Canvas geometry tag; bump when the stitch layout changes so stored goldens
/// and remote servers can tell layouts apart.
inline constexpr const char* kLayoutVersion = "v1";

/// Stitched prompt: two columns (input | mask), one row per exemplar plus a
/// final row holding the test input and a blank (all-zero) output panel.
struct PromptCanvas {
    int panel_side = 0;
    int k = 0;
    RasterImage image; // 2*panel_side wide, (k+1)*panel_side tall
    std::string layout_version = kLayoutVersion;
    bool operator==(const PromptCanvas&) const = default;
};

/// Foreground -> white (1,1,1), background -> black (0,0,0).
RasterImage mask_to_panel(const BinaryMask& mask);

/// Exemplars must be ordered by retrieval rank, nearest first, all at panel_side.
PromptCanvas build_prompt(const std::vector<LabeledExample>& exemplars, const RasterImage& test);

/// Cuts the bottom-right (formerly blank) panel out of a canvas-shaped
/// prediction image. k is inferred from the dimensions.
RasterImage extract_prediction_region(const RasterImage& prediction);

} // namespace promptseg
