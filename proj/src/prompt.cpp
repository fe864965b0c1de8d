#include "promptseg/prompt.hpp"

#include <string>

#include "promptseg/errors.hpp"

namespace promptseg {

namespace {

void blit(RasterImage& dst, const RasterImage& src, int x0, int y0) {
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                dst.at(x0 + x, y0 + y, c) = src.at(x, y, c);
            }
        }
    }
}

} // namespace

RasterImage mask_to_panel(const BinaryMask& mask) {
    RasterImage panel = RasterImage::filled(mask.width, mask.height, 0.0);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.is_fg(x, y)) {
                panel.at(x, y, 0) = 1.0;
                panel.at(x, y, 1) = 1.0;
                panel.at(x, y, 2) = 1.0;
            }
        }
    }
    return panel;
}

PromptCanvas build_prompt(const std::vector<LabeledExample>& exemplars, const RasterImage& test) {
    if (exemplars.empty()) throw EmptyExemplarList("build_prompt: no exemplars");
    const int side = test.width;
    if (test.height != side) throw DimensionMismatch("build_prompt: test panel not square");
    for (const auto& e : exemplars) {
        if (e.image.width != side || e.image.height != side) {
            throw DimensionMismatch("build_prompt: exemplar image '" + e.id + "' not at panel side");
        }
        if (e.mask.width != side || e.mask.height != side) {
            throw DimensionMismatch("build_prompt: exemplar mask '" + e.id + "' not at panel side");
        }
    }

    const int k = static_cast<int>(exemplars.size());
    PromptCanvas canvas;
    canvas.panel_side = side;
    canvas.k = k;
    canvas.layout_version = kLayoutVersion;
    canvas.image = RasterImage::filled(2 * side, (k + 1) * side, 0.0);
    for (int i = 0; i < k; ++i) {
        blit(canvas.image, exemplars[i].image, 0, i * side);
        blit(canvas.image, mask_to_panel(exemplars[i].mask), side, i * side);
    }
    blit(canvas.image, test, 0, k * side);
    // bottom-right panel stays all-zero: the blank the backend must fill in
    return canvas;
}

RasterImage extract_prediction_region(const RasterImage& prediction) {
    const int side = prediction.width / 2;
    if (side == 0 || prediction.width != 2 * side) {
        throw DimensionMismatch("extract_prediction_region: width " + std::to_string(prediction.width) +
                                " is not twice a panel side");
    }
    if (prediction.height % side != 0) {
        throw DimensionMismatch("extract_prediction_region: height " + std::to_string(prediction.height) +
                                " is not a multiple of panel side " + std::to_string(side));
    }
    const int rows = prediction.height / side;
    if (rows < 2) {
        throw DimensionMismatch("extract_prediction_region: canvas needs at least 2 rows");
    }
    const int k = rows - 1;
    RasterImage out = RasterImage::filled(side, side, 0.0);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = prediction.at(side + x, k * side + y, c);
            }
        }
    }
    return out;
}

} // namespace promptseg
