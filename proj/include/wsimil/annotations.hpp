#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace wsimil {

// Closed polygon in level-0 pixel coordinates. The closing edge from the
// last vertex back to the first is implicit.
struct Polygon {
    std::vector<std::array<double, 2>> vertices;
};

struct AnnotationSet {
    std::string slide_id;
    std::vector<Polygon> polygons;
};

// Winding-number containment (nonzero rule). An independent even-odd
// ray-casting check lives in the test suite.
bool point_in_polygon(const Polygon& poly, double x, double y);
bool point_in_any(const AnnotationSet& set, double x, double y);

// Parses annotations.json. A duplicated closing vertex is dropped; polygons
// with fewer than 3 distinct vertices are format errors. When level-0 dims
// are given (>0), out-of-bounds vertices are bounds errors.
AnnotationSet load_annotations(const std::filesystem::path& file, int level0_width = 0,
                               int level0_height = 0);

void save_annotations(const std::filesystem::path& file, const AnnotationSet& set);

} // namespace wsimil
