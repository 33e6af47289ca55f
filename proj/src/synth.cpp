#include "wsimil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wsimil/errors.hpp"
#include "wsimil/kernels.hpp"
#include "wsimil/rng.hpp"

namespace wsimil {

namespace {

// Palette (H&E-ish). Background stays above luminance 239 by construction.
constexpr int kBgBase[3] = {247, 245, 248};
constexpr int kTissueA[3] = {214, 154, 186};
constexpr int kTissueB[3] = {178, 118, 164};
constexpr int kNucleus[3] = {120, 85, 150};
constexpr int kRingBand[3] = {82, 54, 120};
constexpr int kRingCore[3] = {230, 222, 238};
constexpr int kRingNucleus[3] = {58, 40, 100};

constexpr double kRingOuterMin = 7.0;
constexpr double kRingOuterMax = 10.0;
constexpr double kRingInnerFrac = 0.62;

double hash_unit(std::uint64_t seed, std::int64_t x, std::int64_t y) {
    std::uint64_t k = mix64(seed, (static_cast<std::uint64_t>(x) << 32) ^
                                      (static_cast<std::uint64_t>(y) & 0xffffffffULL));
    return static_cast<double>(k >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear lattice value noise in [0,1], cell size in pixels.
double value_noise(std::uint64_t seed, int x, int y, int cell) {
    int cx = x / cell, cy = y / cell;
    double tx = smoothstep(static_cast<double>(x % cell) / cell);
    double ty = smoothstep(static_cast<double>(y % cell) / cell);
    double v00 = hash_unit(seed, cx, cy);
    double v10 = hash_unit(seed, cx + 1, cy);
    double v01 = hash_unit(seed, cx, cy + 1);
    double v11 = hash_unit(seed, cx + 1, cy + 1);
    return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

struct Blob {
    double cx, cy, rx, ry, rot, wob1, wob2;

    bool contains(double x, double y) const {
        double dx = x - cx, dy = y - cy;
        double ux = std::cos(-rot) * dx - std::sin(-rot) * dy;
        double uy = std::sin(-rot) * dx + std::cos(-rot) * dy;
        double nx = ux / rx, ny = uy / ry;
        double rho = std::sqrt(nx * nx + ny * ny);
        double theta = std::atan2(ny, nx);
        double edge = 1.0 + 0.22 * std::sin(3 * theta + wob1) + 0.13 * std::sin(5 * theta + wob2);
        return rho <= edge;
    }
};

struct Painter {
    ImageRGB& img;
    std::uint64_t tex_seed;
    ImageGray* tissue_mask;
    ImageGray* motif_mask;

    void put(int x, int y, const int rgb[3], int jitter, std::uint64_t jseed) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
        std::uint8_t* p = img.px(x, y);
        for (int ch = 0; ch < 3; ++ch) {
            double j = jitter > 0 ? (hash_unit(jseed + ch, x, y) * 2.0 - 1.0) * jitter : 0.0;
            p[ch] = static_cast<std::uint8_t>(std::clamp(rgb[ch] + static_cast<int>(std::lround(j)), 0, 255));
        }
    }

    void put_tissue(int x, int y) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
        double coarse = value_noise(tex_seed, x, y, 24);
        double fine = value_noise(tex_seed ^ 0x51ed2701ULL, x, y, 6);
        double t = 0.65 * coarse + 0.35 * fine;
        std::uint8_t* p = img.px(x, y);
        for (int ch = 0; ch < 3; ++ch) {
            double base = kTissueA[ch] * t + kTissueB[ch] * (1.0 - t);
            double j = (hash_unit(tex_seed ^ (0xabc1ULL + ch), x, y) * 2.0 - 1.0) * 7.0;
            p[ch] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(base + j)), 0, 255));
        }
        if (tissue_mask) tissue_mask->at(x, y) = 1;
    }

    void mark_motif(int x, int y) {
        if (motif_mask && x >= 0 && y >= 0 && x < img.width && y < img.height)
            motif_mask->at(x, y) = 1;
    }
};

void paint_background(Painter& pt) {
    for (int y = 0; y < pt.img.height; ++y)
        for (int x = 0; x < pt.img.width; ++x) pt.put(x, y, kBgBase, 4, pt.tex_seed ^ 0xb6ULL);
}

void paint_blob(Painter& pt, const Blob& b) {
    double rmax = std::max(b.rx, b.ry) * 1.4;
    int x0 = std::max(0, static_cast<int>(b.cx - rmax)), x1 = std::min(pt.img.width - 1, static_cast<int>(b.cx + rmax));
    int y0 = std::max(0, static_cast<int>(b.cy - rmax)), y1 = std::min(pt.img.height - 1, static_cast<int>(b.cy + rmax));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (b.contains(x + 0.5, y + 0.5)) pt.put_tissue(x, y);
}

void paint_tissue_disc(Painter& pt, double cx, double cy, double r) {
    int x0 = std::max(0, static_cast<int>(cx - r - 1)), x1 = std::min(pt.img.width - 1, static_cast<int>(cx + r + 1));
    int y0 = std::max(0, static_cast<int>(cy - r - 1)), y1 = std::min(pt.img.height - 1, static_cast<int>(cy + r + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r * r) pt.put_tissue(x, y);
        }
}

// Solid dark ellipse; the negative-class distractor. Shares the motif's ink
// darkness but not its ring shape.
void paint_nucleus_dot(Painter& pt, double cx, double cy, double rx, double ry, double rot,
                       std::uint64_t jseed) {
    double rmax = std::max(rx, ry) + 1;
    int x0 = static_cast<int>(cx - rmax), x1 = static_cast<int>(cx + rmax);
    int y0 = static_cast<int>(cy - rmax), y1 = static_cast<int>(cy + rmax);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            double ux = std::cos(-rot) * dx - std::sin(-rot) * dy;
            double uy = std::sin(-rot) * dx + std::cos(-rot) * dy;
            double nx = ux / rx, ny = uy / ry;
            if (nx * nx + ny * ny <= 1.0) pt.put(x, y, kNucleus, 6, jseed);
        }
}

// The positive motif: dark annulus, pale mucin core, eccentric dark nucleus.
void paint_ring_cell(Painter& pt, double cx, double cy, double r_outer, double nucleus_angle,
                     std::uint64_t jseed) {
    double r_inner = r_outer * kRingInnerFrac;
    double nr = r_outer * 0.34;
    double ncx = cx + std::cos(nucleus_angle) * (r_inner - nr * 0.4);
    double ncy = cy + std::sin(nucleus_angle) * (r_inner - nr * 0.4);
    int x0 = static_cast<int>(cx - r_outer - 1), x1 = static_cast<int>(cx + r_outer + 1);
    int y0 = static_cast<int>(cy - r_outer - 1), y1 = static_cast<int>(cy + r_outer + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            double d = std::sqrt(dx * dx + dy * dy);
            if (d > r_outer) continue;
            double ndx = x + 0.5 - ncx, ndy = y + 0.5 - ncy;
            bool in_nucleus = ndx * ndx + ndy * ndy <= nr * nr;
            if (in_nucleus)
                pt.put(x, y, kRingNucleus, 5, jseed);
            else if (d >= r_inner)
                pt.put(x, y, kRingBand, 6, jseed);
            else
                pt.put(x, y, kRingCore, 4, jseed);
            pt.mark_motif(x, y);
        }
}

Polygon cluster_polygon(double cx, double cy, double radius, int w, int h) {
    Polygon poly;
    const int sides = 24;
    for (int i = 0; i < sides; ++i) {
        double a = 2.0 * std::numbers::pi * i / sides;
        double x = std::clamp(cx + radius * std::cos(a), 0.0, static_cast<double>(w));
        double y = std::clamp(cy + radius * std::sin(a), 0.0, static_cast<double>(h));
        poly.vertices.push_back({x, y});
    }
    return poly;
}

} // namespace

void SynthSpec::validate() const {
    if (width < 32 || height < 32) throw config_error("synthetic slide must be at least 32x32");
    if (label != 0 && label != 1) throw config_error("label must be 0 or 1");
    if (label == 1 && n_positive_clusters < 1)
        throw config_error("label=1 requires n_positive_clusters >= 1");
    if (label == 0 && n_positive_clusters != 0)
        throw config_error("label=0 requires n_positive_clusters == 0");
    if (n_tissue_blobs < 1) throw config_error("n_tissue_blobs must be >= 1");
    if (motif_density < 1) throw config_error("motif_density must be >= 1");
    if (levels < 1) throw config_error("levels must be >= 1");
    if (base_magnification <= 0) throw config_error("base_magnification must be positive");
}

SynthResult generate_synthetic_slide(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                     SynthDebug* debug) {
    spec.validate();
    std::filesystem::create_directories(out_dir);

    Rng rng(spec.seed);
    Rng blob_rng = rng.fork(1);
    Rng dot_rng = rng.fork(2);
    Rng cluster_rng = rng.fork(3);
    const std::uint64_t tex_seed = mix64(spec.seed, 0x7e5);

    ImageRGB level0;
    level0.width = spec.width;
    level0.height = spec.height;
    level0.pixels.resize(static_cast<std::size_t>(spec.width) * spec.height * 3);

    if (debug) {
        debug->tissue = ImageGray::zeros(spec.width, spec.height);
        debug->motif = ImageGray::zeros(spec.width, spec.height);
    }
    Painter pt{level0, tex_seed, debug ? &debug->tissue : nullptr, debug ? &debug->motif : nullptr};

    paint_background(pt);

    const double scale = std::min(spec.width, spec.height);
    std::vector<Blob> blobs;
    for (int i = 0; i < spec.n_tissue_blobs; ++i) {
        Blob b;
        b.cx = blob_rng.uniform(0.22, 0.78) * spec.width;
        b.cy = blob_rng.uniform(0.22, 0.78) * spec.height;
        b.rx = blob_rng.uniform(0.11, 0.19) * scale;
        b.ry = blob_rng.uniform(0.11, 0.19) * scale;
        b.rot = blob_rng.uniform(0.0, 2.0 * std::numbers::pi);
        b.wob1 = blob_rng.uniform(0.0, 2.0 * std::numbers::pi);
        b.wob2 = blob_rng.uniform(0.0, 2.0 * std::numbers::pi);
        blobs.push_back(b);
        paint_blob(pt, b);
    }

    // distractor nuclei on every slide, positive or negative
    for (int i = 0; i < spec.n_tissue_blobs; ++i) {
        const Blob& b = blobs[i];
        int dots = static_cast<int>(b.rx * b.ry / 250.0);
        for (int d = 0; d < dots; ++d) {
            double px = 0, py = 0;
            bool ok = false;
            for (int attempt = 0; attempt < 24 && !ok; ++attempt) {
                px = b.cx + dot_rng.uniform(-1.0, 1.0) * b.rx;
                py = b.cy + dot_rng.uniform(-1.0, 1.0) * b.ry;
                ok = b.contains(px, py);
            }
            if (!ok) continue;
            paint_nucleus_dot(pt, px, py, dot_rng.uniform(2.0, 4.2), dot_rng.uniform(2.0, 4.2),
                              dot_rng.uniform(0.0, std::numbers::pi),
                              mix64(tex_seed, 0x9000 + i * 4096 + d));
        }
    }

    AnnotationSet ann;
    ann.slide_id = spec.id;
    for (int c = 0; c < spec.n_positive_clusters; ++c) {
        const Blob& host = blobs[c % blobs.size()];
        double r_cluster = std::clamp(0.35 * std::min(host.rx, host.ry), 14.0, 72.0);
        r_cluster = std::min(r_cluster, std::max(8.0, scale / 2.0 - kRingOuterMax - 8.0));
        double margin = r_cluster + kRingOuterMax + 6.0;
        double off = std::max(0.0, std::min(host.rx, host.ry) * 0.55 - r_cluster);
        double ang = cluster_rng.uniform(0.0, 2.0 * std::numbers::pi);
        double cx = host.cx + std::cos(ang) * off * cluster_rng.uniform();
        double cy = host.cy + std::sin(ang) * off * cluster_rng.uniform();
        cx = std::clamp(cx, margin, spec.width - margin);
        cy = std::clamp(cy, margin, spec.height - margin);

        // guarantee tissue context under the cluster even if the host blob
        // wobbles away from it
        paint_tissue_disc(pt, cx, cy, r_cluster + kRingOuterMax + 5.0);

        std::vector<std::array<double, 2>> placed;
        for (int m = 0; m < spec.motif_density; ++m) {
            double rx = 0, ry = 0;
            bool ok = false;
            for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
                double a = cluster_rng.uniform(0.0, 2.0 * std::numbers::pi);
                double rr = std::sqrt(cluster_rng.uniform()) * r_cluster;
                rx = cx + std::cos(a) * rr;
                ry = cy + std::sin(a) * rr;
                ok = true;
                for (const auto& p : placed) {
                    double dx = p[0] - rx, dy = p[1] - ry;
                    if (dx * dx + dy * dy < 11.0 * 11.0) {
                        ok = false;
                        break;
                    }
                }
            }
            placed.push_back({rx, ry});
            paint_ring_cell(pt, rx, ry, cluster_rng.uniform(kRingOuterMin, kRingOuterMax),
                            cluster_rng.uniform(0.0, 2.0 * std::numbers::pi),
                            mix64(tex_seed, 0x50000 + c * 4096 + m));
        }
        ann.polygons.push_back(
            cluster_polygon(cx, cy, r_cluster + kRingOuterMax + 4.0, spec.width, spec.height));
    }

    // pyramid: strict 2x box downsampling chain
    std::vector<LevelMeta> metas;
    ImageRGB current = std::move(level0);
    for (int lvl = 0; lvl < spec.levels; ++lvl) {
        LevelMeta lm;
        lm.width = current.width;
        lm.height = current.height;
        lm.magnification = spec.base_magnification / static_cast<double>(1 << lvl);
        lm.file = "level_" + std::to_string(lvl) + ".ppm";
        write_ppm(out_dir / lm.file, current);
        metas.push_back(lm);
        if (lvl + 1 < spec.levels) {
            ImageRGB next;
            kernels::box_downsample2x(current, next);
            current = std::move(next);
        }
    }
    write_slide_meta(out_dir, spec.id, spec.label, metas);
    save_annotations(out_dir / "annotations.json", ann);

    SynthResult result;
    result.slide = open_slide(out_dir);
    result.annotations = ann;
    return result;
}

} // namespace wsimil
