#pragma once

#include <string>
#include <vector>

#include "wsimil/annotations.hpp"
#include "wsimil/rng.hpp"
#include "wsimil/slide.hpp"
#include "wsimil/tensor.hpp"
#include "wsimil/tissue.hpp"

namespace wsimil {

struct GridConfig {
    int tile_size = 224;
    int stride = 112;
    double magnification = 10.0;

    void validate() const;
};

// One addressable tile instance: (x, y) is the top-left corner in pixels at
// the given magnification.
struct TileRef {
    std::string slide_id;
    double magnification = 0.0;
    int x = 0;
    int y = 0;
    int size = 0;
};

// Every stride-aligned tile whose footprint overlaps at least one tissue
// pixel, in row-major order. When `restrict_to` is given, only tiles whose
// center falls inside one of its polygons (level-0 coordinates) survive.
std::vector<TileRef> grid_locations(const Slide& slide, const GridConfig& cfg,
                                    const TissueMask& mask,
                                    const AnnotationSet* restrict_to = nullptr);

// Tile pixels as a (1, 3, size, size) tensor scaled to [0,1]. Reads the
// exact pyramid level when one matches ref.magnification, otherwise
// resamples from the nearest higher-magnification level bilinearly.
Tensor extract_tile(const Slide& slide, const TileRef& ref);

// On-the-fly augmentation. Each op is applied with independent probability
// 1/2, drawn in a fixed order: hflip, vflip, rotate (k*90 ccw, k uniform in
// 0..3), additive per-channel colour shift uniform in +-0.05 (clamped).
struct AugmentPlan {
    bool hflip = false;
    bool vflip = false;
    int rot90 = 0;
    bool colour_shift = false;
    double shift[3] = {0, 0, 0};
};

AugmentPlan draw_augment_plan(Rng& rng);
Tensor apply_augment(const Tensor& tile, const AugmentPlan& plan);
Tensor augment(const Tensor& tile, Rng& rng);

// Translation augmentation: jitters the origin uniformly in [-stride/2,
// +stride/2] per axis, clamped so the tile stays in bounds.
TileRef jitter_tile_ref(const TileRef& ref, int stride, const Slide& slide, Rng& rng);

} // namespace wsimil
