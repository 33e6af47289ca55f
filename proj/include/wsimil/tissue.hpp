#pragma once

#include <cstdint>
#include <vector>

#include "wsimil/image.hpp"
#include "wsimil/kernels.hpp"
#include "wsimil/slide.hpp"

namespace wsimil {

using kernels::Histogram256;

// Counts of round(0.299R + 0.587G + 0.114B) over all pixels.
Histogram256 luminance_histogram(const ImageRGB& img);

// Otsu threshold over the split [0..t] vs [t+1..255]: the t that maximizes
// between-class variance, smallest t on ties. Throws on histograms with
// fewer than two occupied bins.
int otsu_threshold(const Histogram256& hist);

// Bitmask at one pyramid level: tissue iff luminance < the level's Otsu
// threshold. Carries a summed-area table so tile-footprint queries are O(1).
struct TissueMask {
    int width = 0;
    int height = 0;
    int level = 0;
    double magnification = 0.0;
    int threshold = 0;
    std::vector<std::uint8_t> mask;
    std::vector<std::uint32_t> integral; // (width+1) x (height+1)

    bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
    std::uint64_t tissue_count() const;

    // Number of tissue pixels in [x0,x1) x [y0,y1), clamped to bounds.
    std::uint32_t count_in_rect(int x0, int y0, int x1, int y1) const;
};

TissueMask tissue_mask(const Slide& slide, int work_level);

} // namespace wsimil
