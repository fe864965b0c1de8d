#pragma once

#include <string>

#include "promptseg/image.hpp"

namespace promptseg {

/// An (image, mask) pair at panel resolution, ready to serve as a prompt exemplar.
struct LabeledExample {
    std::string id;
    RasterImage image;
    BinaryMask mask;
    bool operator==(const LabeledExample&) const = default;
};

} // namespace promptseg
