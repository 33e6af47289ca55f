#include "wsimil/tissue.hpp"

#include <algorithm>

#include "wsimil/errors.hpp"

namespace wsimil {

Histogram256 luminance_histogram(const ImageRGB& img) {
    if (img.empty()) throw data_error("luminance_histogram: empty image");
    Histogram256 hist;
    kernels::luminance_histogram(img, hist);
    return hist;
}

int otsu_threshold(const Histogram256& hist) {
    int occupied = 0;
    for (auto c : hist)
        if (c > 0) ++occupied;
    if (occupied < 2) throw data_error("otsu_threshold: needs at least two occupied bins");

    // prefix weights/sums make each candidate split O(1); the scan over all
    // 255 splits stays exhaustive
    double total_w = 0, total_sum = 0;
    for (int i = 0; i < 256; ++i) {
        total_w += static_cast<double>(hist[i]);
        total_sum += static_cast<double>(hist[i]) * i;
    }
    int best_t = 0;
    double best_sigma = -1.0;
    double w0 = 0, sum0 = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += static_cast<double>(hist[t]);
        sum0 += static_cast<double>(hist[t]) * t;
        double w1 = total_w - w0;
        if (w0 == 0 || w1 == 0) continue;
        double mu0 = sum0 / w0;
        double mu1 = (total_sum - sum0) / w1;
        double d = mu0 - mu1;
        double sigma = (w0 / total_w) * (w1 / total_w) * d * d;
        if (sigma > best_sigma) {
            best_sigma = sigma;
            best_t = t;
        }
    }
    return best_t;
}

std::uint64_t TissueMask::tissue_count() const {
    return integral[static_cast<std::size_t>(height) * (width + 1) + width];
}

std::uint32_t TissueMask::count_in_rect(int x0, int y0, int x1, int y1) const {
    x0 = std::clamp(x0, 0, width);
    x1 = std::clamp(x1, 0, width);
    y0 = std::clamp(y0, 0, height);
    y1 = std::clamp(y1, 0, height);
    if (x0 >= x1 || y0 >= y1) return 0;
    const std::size_t stride = width + 1;
    return integral[y1 * stride + x1] - integral[y0 * stride + x1] - integral[y1 * stride + x0] +
           integral[y0 * stride + x0];
}

TissueMask tissue_mask(const Slide& slide, int work_level) {
    if (work_level < 0 || work_level >= slide.level_count())
        throw data_error("tissue_mask: no such level");
    const LevelMeta& lm = slide.levels[work_level];
    ImageRGB img = read_region(slide, work_level, 0, 0, lm.width, lm.height);
    Histogram256 hist = luminance_histogram(img);
    int t = otsu_threshold(hist);

    TissueMask m;
    m.width = lm.width;
    m.height = lm.height;
    m.level = work_level;
    m.magnification = lm.magnification;
    m.threshold = t;
    m.mask.resize(static_cast<std::size_t>(lm.width) * lm.height);
    for (int y = 0; y < lm.height; ++y)
        for (int x = 0; x < lm.width; ++x) {
            const std::uint8_t* p = img.px(x, y);
            m.mask[static_cast<std::size_t>(y) * lm.width + x] =
                luminance_of(p[0], p[1], p[2]) < t ? 1 : 0;
        }

    m.integral.assign(static_cast<std::size_t>(lm.width + 1) * (lm.height + 1), 0);
    const std::size_t stride = lm.width + 1;
    for (int y = 0; y < lm.height; ++y) {
        std::uint32_t row = 0;
        for (int x = 0; x < lm.width; ++x) {
            row += m.mask[static_cast<std::size_t>(y) * lm.width + x];
            m.integral[(y + 1) * stride + (x + 1)] = m.integral[y * stride + (x + 1)] + row;
        }
    }
    return m;
}

} // namespace wsimil
