#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "wsimil/annotations.hpp"
#include "wsimil/image.hpp"
#include "wsimil/slide.hpp"

namespace wsimil {

// Desk-scale ground-truth slide: near-white background, textured tissue
// blobs, and (for positive labels) clusters of a ring motif that appears in
// no negative slide. All palette and geometry constants are fixed in
// synth.cpp; only the spec varies.
struct SynthSpec {
    std::uint64_t seed = 0;
    int width = 1024;
    int height = 1024;
    int label = 0;
    int n_tissue_blobs = 3;
    int n_positive_clusters = 0; // must be >= 1 iff label == 1
    int motif_density = 12;      // ring cells per cluster
    int levels = 3;
    double base_magnification = 20.0;
    std::string id = "synthetic";

    void validate() const;
};

// Ground-truth rasters the generator painted, for tests that measure the
// output against what was actually drawn.
struct SynthDebug {
    ImageGray tissue; // 1 where tissue texture was painted (level 0)
    ImageGray motif;  // 1 where ring-motif ink was painted (level 0)
};

struct SynthResult {
    Slide slide;
    AnnotationSet annotations;
};

// Renders level 0, builds the ceil-halving pyramid by 2x box downsampling,
// and writes slide.json, level_*.ppm and annotations.json into out_dir.
// Deterministic: a fixed spec reproduces the container byte for byte.
SynthResult generate_synthetic_slide(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                     SynthDebug* debug = nullptr);

} // namespace wsimil
