#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsimil/image.hpp"

namespace wsimil {

struct LevelMeta {
    int width = 0;
    int height = 0;
    double magnification = 0.0;
    std::string file;
};

// A slide container is a directory with slide.json plus one binary P6 PPM
// per pyramid level. Levels run from the highest magnification (level 0)
// down, each ceil-halving the previous one. Immutable after open; region
// reads are pure and thread-safe.
struct Slide {
    std::string id;
    std::optional<int> label; // 0 or 1 when present
    std::vector<LevelMeta> levels;
    std::filesystem::path dir;
    std::vector<PnmHeader> headers; // resolved at open, one per level

    int level_count() const { return static_cast<int>(levels.size()); }
    double base_magnification() const { return levels.front().magnification; }

    // Index of the level with exactly this magnification, or -1.
    int find_level(double magnification) const;

    // Level with the smallest magnification >= the requested one (the best
    // source for downscaling); -1 if the request exceeds the base.
    int nearest_source_level(double magnification) const;

    // Width/height of the raster at a magnification: exact level dims when
    // one exists, otherwise scaled from the nearest source level.
    std::pair<int, int> dims_at(double magnification) const;
};

Slide open_slide(const std::filesystem::path& dir);

// Exactly w x h pixels of the given level; out-of-bounds requests throw
// (no clamping). Memory O(w*h).
ImageRGB read_region(const Slide& slide, int level, int x, int y, int w, int h);

// Writes slide.json for a set of levels already on disk.
void write_slide_meta(const std::filesystem::path& dir, const std::string& id,
                      std::optional<int> label, const std::vector<LevelMeta>& levels);

} // namespace wsimil
