#include "wsimil/grid.hpp"

#include <algorithm>
#include <cmath>

#include "wsimil/errors.hpp"

namespace wsimil {

void GridConfig::validate() const {
    if (tile_size <= 0) throw config_error("tile_size must be positive");
    if (stride <= 0 || stride > tile_size) throw config_error("stride must be in (0, tile_size]");
    if (magnification <= 0) throw config_error("magnification must be positive");
}

std::vector<TileRef> grid_locations(const Slide& slide, const GridConfig& cfg,
                                    const TissueMask& mask, const AnnotationSet* restrict_to) {
    cfg.validate();
    auto [w, h] = slide.dims_at(cfg.magnification);
    std::vector<TileRef> out;
    if (w < cfg.tile_size || h < cfg.tile_size) return out;

    // footprint scale from tile coordinates to mask coordinates
    const double f = mask.magnification / cfg.magnification;
    // polygon scale from level-0 coordinates to tile coordinates
    const double poly_scale = cfg.magnification / slide.base_magnification();

    const int cols = (w - cfg.tile_size) / cfg.stride + 1;
    const int rows = (h - cfg.tile_size) / cfg.stride + 1;
    for (int r = 0; r < rows; ++r) {
        const int y = r * cfg.stride;
        const int my0 = static_cast<int>(std::floor(y * f));
        const int my1 = static_cast<int>(std::ceil((y + cfg.tile_size) * f));
        for (int c = 0; c < cols; ++c) {
            const int x = c * cfg.stride;
            const int mx0 = static_cast<int>(std::floor(x * f));
            const int mx1 = static_cast<int>(std::ceil((x + cfg.tile_size) * f));
            if (mask.count_in_rect(mx0, my0, mx1, my1) == 0) continue;
            if (restrict_to) {
                const double cx = (x + cfg.tile_size / 2.0) / poly_scale;
                const double cy = (y + cfg.tile_size / 2.0) / poly_scale;
                if (!point_in_any(*restrict_to, cx, cy)) continue;
            }
            out.push_back(TileRef{slide.id, cfg.magnification, x, y, cfg.tile_size});
        }
    }
    return out;
}

Tensor extract_tile(const Slide& slide, const TileRef& ref) {
    if (ref.size <= 0) throw data_error("extract_tile: empty tile");
    auto [w, h] = slide.dims_at(ref.magnification);
    if (ref.x < 0 || ref.y < 0 || ref.x + ref.size > w || ref.y + ref.size > h)
        throw data_error("extract_tile: tile out of bounds for slide " + slide.id);

    Tensor t(1, 3, ref.size, ref.size);
    const int exact = slide.find_level(ref.magnification);
    if (exact >= 0) {
        ImageRGB img = read_region(slide, exact, ref.x, ref.y, ref.size, ref.size);
        for (int y = 0; y < ref.size; ++y)
            for (int x = 0; x < ref.size; ++x) {
                const std::uint8_t* p = img.px(x, y);
                for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = p[c] / 255.0;
            }
        return t;
    }

    const int src = slide.nearest_source_level(ref.magnification);
    if (src < 0) throw data_error("extract_tile: magnification above base for slide " + slide.id);
    const LevelMeta& lm = slide.levels[src];
    const double s = lm.magnification / ref.magnification; // >= 1
    // source window covering the tile, clamped to the level
    int sx0 = std::clamp(static_cast<int>(std::floor(ref.x * s)) - 1, 0, lm.width - 1);
    int sy0 = std::clamp(static_cast<int>(std::floor(ref.y * s)) - 1, 0, lm.height - 1);
    int sx1 = std::clamp(static_cast<int>(std::ceil((ref.x + ref.size) * s)) + 1, sx0 + 1, lm.width);
    int sy1 = std::clamp(static_cast<int>(std::ceil((ref.y + ref.size) * s)) + 1, sy0 + 1, lm.height);
    ImageRGB win = read_region(slide, src, sx0, sy0, sx1 - sx0, sy1 - sy0);

    for (int y = 0; y < ref.size; ++y) {
        double fy = (ref.y + y + 0.5) * s - 0.5 - sy0;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y1 = std::min(y0 + 1, win.height - 1);
        y0 = std::clamp(y0, 0, win.height - 1);
        for (int x = 0; x < ref.size; ++x) {
            double fx = (ref.x + x + 0.5) * s - 0.5 - sx0;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x1 = std::min(x0 + 1, win.width - 1);
            x0 = std::clamp(x0, 0, win.width - 1);
            const std::uint8_t* p00 = win.px(x0, y0);
            const std::uint8_t* p10 = win.px(x1, y0);
            const std::uint8_t* p01 = win.px(x0, y1);
            const std::uint8_t* p11 = win.px(x1, y1);
            for (int c = 0; c < 3; ++c) {
                double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                           wy * ((1 - wx) * p01[c] + wx * p11[c]);
                t.at(0, c, y, x) = v / 255.0;
            }
        }
    }
    return t;
}

AugmentPlan draw_augment_plan(Rng& rng) {
    AugmentPlan plan;
    plan.hflip = rng.coin();
    plan.vflip = rng.coin();
    if (rng.coin()) plan.rot90 = static_cast<int>(rng.uniform_int(4));
    plan.colour_shift = rng.coin();
    if (plan.colour_shift)
        for (double& s : plan.shift) s = rng.uniform(-0.05, 0.05);
    return plan;
}

Tensor apply_augment(const Tensor& tile, const AugmentPlan& plan) {
    const int n = tile.h; // square
    Tensor out = tile;
    auto src_of = [&](int y, int x) {
        // invert the op chain hflip -> vflip -> rot90 ccw
        int sy = y, sx = x;
        for (int r = 0; r < plan.rot90 % 4; ++r) {
            // inverse of one ccw rotation: (y, x) came from (x, n-1-y)
            int ty = sx;
            int tx = n - 1 - sy;
            sy = ty;
            sx = tx;
        }
        if (plan.vflip) sy = n - 1 - sy;
        if (plan.hflip) sx = n - 1 - sx;
        return std::pair<int, int>{sy, sx};
    };
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                auto [sy, sx] = src_of(y, x);
                double v = tile.at(0, c, sy, sx);
                if (plan.colour_shift) v = std::clamp(v + plan.shift[c], 0.0, 1.0);
                out.at(0, c, y, x) = v;
            }
    return out;
}

Tensor augment(const Tensor& tile, Rng& rng) { return apply_augment(tile, draw_augment_plan(rng)); }

TileRef jitter_tile_ref(const TileRef& ref, int stride, const Slide& slide, Rng& rng) {
    auto [w, h] = slide.dims_at(ref.magnification);
    const int half = stride / 2;
    TileRef out = ref;
    int dx = static_cast<int>(rng.uniform_int(2 * half + 1)) - half;
    int dy = static_cast<int>(rng.uniform_int(2 * half + 1)) - half;
    out.x = std::clamp(ref.x + dx, 0, w - ref.size);
    out.y = std::clamp(ref.y + dy, 0, h - ref.size);
    return out;
}

} // namespace wsimil
