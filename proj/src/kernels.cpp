#include "wsimil/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "wsimil/errors.hpp"

namespace wsimil::kernels {

namespace {
int g_threads = 1;
}

void set_thread_count(int n) {
    g_threads = std::max(1, n);
    omp_set_dynamic(0);
    omp_set_num_threads(g_threads);
}

int thread_count() { return g_threads; }

int conv_out_dim(int in_dim) { return (in_dim - 1) / 2 + 1; }

// One output pixel of the stride-2, pad-1, 3x3 convolution. Inner loops run
// in a fixed order, so the value is identical no matter which thread computes it.
static inline double conv_cell(const Tensor& in, const Tensor& weights, int bn, int oc, int oy,
                               int ox) {
    const int ic_count = in.c;
    const int ih = in.h, iw = in.w;
    double acc = 0.0;
    for (int ic = 0; ic < ic_count; ++ic) {
        const double* inp = in.v.data() + in.index(bn, ic, 0, 0);
        const double* wp = weights.v.data() + weights.index(oc, ic, 0, 0);
        for (int ky = 0; ky < 3; ++ky) {
            int iy = oy * 2 + ky - 1;
            if (iy < 0 || iy >= ih) continue;
            const double* in_row = inp + static_cast<std::size_t>(iy) * iw;
            for (int kx = 0; kx < 3; ++kx) {
                int ix = ox * 2 + kx - 1;
                if (ix < 0 || ix >= iw) continue;
                acc += in_row[ix] * wp[ky * 3 + kx];
            }
        }
    }
    return acc;
}

static void check_conv_shapes(const Tensor& in, const Tensor& weights,
                              const std::vector<double>& bias, const Tensor& out) {
    if (weights.h != 3 || weights.w != 3) throw runtime_fault("conv2d: kernel must be 3x3");
    if (weights.c != in.c) throw runtime_fault("conv2d: channel mismatch");
    if (static_cast<int>(bias.size()) != weights.n) throw runtime_fault("conv2d: bias size mismatch");
    if (out.n != in.n || out.c != weights.n || out.h != conv_out_dim(in.h) ||
        out.w != conv_out_dim(in.w))
        throw runtime_fault("conv2d: output shape mismatch");
}

void conv2d_forward_serial(const Tensor& in, const Tensor& weights, const std::vector<double>& bias,
                           Tensor& out) {
    check_conv_shapes(in, weights, bias, out);
    for (int bn = 0; bn < out.n; ++bn)
        for (int oc = 0; oc < out.c; ++oc) {
            double* op = out.v.data() + out.index(bn, oc, 0, 0);
            for (int oy = 0; oy < out.h; ++oy)
                for (int ox = 0; ox < out.w; ++ox)
                    op[static_cast<std::size_t>(oy) * out.w + ox] =
                        bias[oc] + conv_cell(in, weights, bn, oc, oy, ox);
        }
}

void conv2d_forward_omp(const Tensor& in, const Tensor& weights, const std::vector<double>& bias,
                        Tensor& out) {
    check_conv_shapes(in, weights, bias, out);
    const int planes = out.n * out.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const int bn = p / out.c;
        const int oc = p % out.c;
        double* op = out.v.data() + out.index(bn, oc, 0, 0);
        for (int oy = 0; oy < out.h; ++oy)
            for (int ox = 0; ox < out.w; ++ox)
                op[static_cast<std::size_t>(oy) * out.w + ox] =
                    bias[oc] + conv_cell(in, weights, bn, oc, oy, ox);
    }
}

void conv2d_forward(const Tensor& in, const Tensor& weights, const std::vector<double>& bias,
                    Tensor& out) {
    if (g_threads > 1)
        conv2d_forward_omp(in, weights, bias, out);
    else
        conv2d_forward_serial(in, weights, bias, out);
}

// Gather form of the data gradient: each input pixel sums the output
// gradients it contributed to.
static inline double backward_data_cell(const Tensor& dout, const Tensor& weights, int bn, int ic,
                                        int iy, int ix) {
    double acc = 0.0;
    for (int oc = 0; oc < dout.c; ++oc) {
        const double* dop = dout.v.data() + dout.index(bn, oc, 0, 0);
        const double* wp = weights.v.data() + weights.index(oc, ic, 0, 0);
        for (int ky = 0; ky < 3; ++ky) {
            int num_y = iy + 1 - ky;
            if (num_y < 0 || (num_y & 1)) continue;
            int oy = num_y / 2;
            if (oy >= dout.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
                int num_x = ix + 1 - kx;
                if (num_x < 0 || (num_x & 1)) continue;
                int ox = num_x / 2;
                if (ox >= dout.w) continue;
                acc += dop[static_cast<std::size_t>(oy) * dout.w + ox] * wp[ky * 3 + kx];
            }
        }
    }
    return acc;
}

void conv2d_backward_data_serial(const Tensor& dout, const Tensor& weights, Tensor& din) {
    for (int bn = 0; bn < din.n; ++bn)
        for (int ic = 0; ic < din.c; ++ic) {
            double* dp = din.v.data() + din.index(bn, ic, 0, 0);
            for (int iy = 0; iy < din.h; ++iy)
                for (int ix = 0; ix < din.w; ++ix)
                    dp[static_cast<std::size_t>(iy) * din.w + ix] =
                        backward_data_cell(dout, weights, bn, ic, iy, ix);
        }
}

void conv2d_backward_data_omp(const Tensor& dout, const Tensor& weights, Tensor& din) {
    const int planes = din.n * din.c;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const int bn = p / din.c;
        const int ic = p % din.c;
        double* dp = din.v.data() + din.index(bn, ic, 0, 0);
        for (int iy = 0; iy < din.h; ++iy)
            for (int ix = 0; ix < din.w; ++ix)
                dp[static_cast<std::size_t>(iy) * din.w + ix] =
                    backward_data_cell(dout, weights, bn, ic, iy, ix);
    }
}

void conv2d_backward_data(const Tensor& dout, const Tensor& weights, Tensor& din) {
    if (g_threads > 1)
        conv2d_backward_data_omp(dout, weights, din);
    else
        conv2d_backward_data_serial(dout, weights, din);
}

// Weight gradient, gather form: each filter tap owns the full reduction over
// batch and output positions in a fixed order.
static inline double backward_filter_cell(const Tensor& in, const Tensor& dout, int oc, int ic,
                                          int ky, int kx) {
    double acc = 0.0;
    for (int bn = 0; bn < in.n; ++bn) {
        const double* inp = in.v.data() + in.index(bn, ic, 0, 0);
        const double* dop = dout.v.data() + dout.index(bn, oc, 0, 0);
        for (int oy = 0; oy < dout.h; ++oy) {
            int iy = oy * 2 + ky - 1;
            if (iy < 0 || iy >= in.h) continue;
            const double* in_row = inp + static_cast<std::size_t>(iy) * in.w;
            const double* do_row = dop + static_cast<std::size_t>(oy) * dout.w;
            for (int ox = 0; ox < dout.w; ++ox) {
                int ix = ox * 2 + kx - 1;
                if (ix < 0 || ix >= in.w) continue;
                acc += in_row[ix] * do_row[ox];
            }
        }
    }
    return acc;
}

static inline double backward_bias_cell(const Tensor& dout, int oc) {
    double acc = 0.0;
    for (int bn = 0; bn < dout.n; ++bn) {
        const double* dop = dout.v.data() + dout.index(bn, oc, 0, 0);
        const std::size_t hw = static_cast<std::size_t>(dout.h) * dout.w;
        for (std::size_t i = 0; i < hw; ++i) acc += dop[i];
    }
    return acc;
}

void conv2d_backward_filter_serial(const Tensor& in, const Tensor& dout, Tensor& dweights,
                                   std::vector<double>& dbias) {
    for (int oc = 0; oc < dweights.n; ++oc) {
        for (int ic = 0; ic < dweights.c; ++ic)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    dweights.at(oc, ic, ky, kx) = backward_filter_cell(in, dout, oc, ic, ky, kx);
        dbias[oc] = backward_bias_cell(dout, oc);
    }
}

void conv2d_backward_filter_omp(const Tensor& in, const Tensor& dout, Tensor& dweights,
                                std::vector<double>& dbias) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < dweights.n; ++oc) {
        for (int ic = 0; ic < dweights.c; ++ic)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    dweights.at(oc, ic, ky, kx) = backward_filter_cell(in, dout, oc, ic, ky, kx);
        dbias[oc] = backward_bias_cell(dout, oc);
    }
}

void conv2d_backward_filter(const Tensor& in, const Tensor& dout, Tensor& dweights,
                            std::vector<double>& dbias) {
    if (g_threads > 1)
        conv2d_backward_filter_omp(in, dout, dweights, dbias);
    else
        conv2d_backward_filter_serial(in, dout, dweights, dbias);
}

// Box block covering destination pixel (x,y): source pixels [2x, min(2x+2,w)) etc.
static inline void box_cell(const ImageRGB& src, int x, int y, std::uint8_t* out) {
    const int x0 = 2 * x, y0 = 2 * y;
    const int x1 = std::min(x0 + 2, src.width);
    const int y1 = std::min(y0 + 2, src.height);
    const int count = (x1 - x0) * (y1 - y0);
    int sum[3] = {0, 0, 0};
    for (int sy = y0; sy < y1; ++sy)
        for (int sx = x0; sx < x1; ++sx) {
            const std::uint8_t* p = src.px(sx, sy);
            sum[0] += p[0];
            sum[1] += p[1];
            sum[2] += p[2];
        }
    // round half up: floor(sum/count + 1/2)
    for (int ch = 0; ch < 3; ++ch)
        out[ch] = static_cast<std::uint8_t>((2 * sum[ch] + count) / (2 * count));
}

static void prep_box_dst(const ImageRGB& src, ImageRGB& dst) {
    dst.width = (src.width + 1) / 2;
    dst.height = (src.height + 1) / 2;
    dst.pixels.resize(static_cast<std::size_t>(dst.width) * dst.height * 3);
}

void box_downsample2x_serial(const ImageRGB& src, ImageRGB& dst) {
    prep_box_dst(src, dst);
    for (int y = 0; y < dst.height; ++y)
        for (int x = 0; x < dst.width; ++x) box_cell(src, x, y, dst.px(x, y));
}

void box_downsample2x_omp(const ImageRGB& src, ImageRGB& dst) {
    prep_box_dst(src, dst);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < dst.height; ++y)
        for (int x = 0; x < dst.width; ++x) box_cell(src, x, y, dst.px(x, y));
}

void box_downsample2x(const ImageRGB& src, ImageRGB& dst) {
    if (g_threads > 1)
        box_downsample2x_omp(src, dst);
    else
        box_downsample2x_serial(src, dst);
}

void luminance_histogram_serial(const ImageRGB& img, Histogram256& hist) {
    hist.fill(0);
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* p = img.pixels.data() + 3 * i;
        ++hist[luminance_of(p[0], p[1], p[2])];
    }
}

void luminance_histogram_omp(const ImageRGB& img, Histogram256& hist) {
    hist.fill(0);
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    const int nthreads = g_threads;
    std::vector<Histogram256> partial(nthreads);
#pragma omp parallel num_threads(nthreads)
    {
        const int t = omp_get_thread_num();
        partial[t].fill(0);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
            const std::uint8_t* p = img.pixels.data() + 3 * i;
            ++partial[t][luminance_of(p[0], p[1], p[2])];
        }
    }
    // integer merge: order-independent
    for (const auto& h : partial)
        for (int b = 0; b < 256; ++b) hist[b] += h[b];
}

void luminance_histogram(const ImageRGB& img, Histogram256& hist) {
    if (g_threads > 1)
        luminance_histogram_omp(img, hist);
    else
        luminance_histogram_serial(img, hist);
}

} // namespace wsimil::kernels
