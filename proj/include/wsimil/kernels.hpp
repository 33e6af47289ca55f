#pragma once

#include <array>
#include <cstdint>

#include "wsimil/image.hpp"
#include "wsimil/tensor.hpp"

namespace wsimil::kernels {

// Global worker cap for all OpenMP regions. 0 or 1 selects the serial
// reference paths. Every parallel kernel is written in gather form (each
// output element owns a fixed-order reduction), so results are bit-identical
// for any thread count.
void set_thread_count(int n);
int thread_count();

// 3x3 convolution, stride 2, zero padding 1: out = (in - 1) / 2 + 1.
// weights shaped (oc, ic, 3, 3); bias length oc.
int conv_out_dim(int in_dim);

void conv2d_forward_serial(const Tensor& in, const Tensor& weights,
                           const std::vector<double>& bias, Tensor& out);
void conv2d_forward_omp(const Tensor& in, const Tensor& weights, const std::vector<double>& bias,
                        Tensor& out);
void conv2d_forward(const Tensor& in, const Tensor& weights, const std::vector<double>& bias,
                    Tensor& out);

void conv2d_backward_data_serial(const Tensor& dout, const Tensor& weights, Tensor& din);
void conv2d_backward_data_omp(const Tensor& dout, const Tensor& weights, Tensor& din);
void conv2d_backward_data(const Tensor& dout, const Tensor& weights, Tensor& din);

void conv2d_backward_filter_serial(const Tensor& in, const Tensor& dout, Tensor& dweights,
                                   std::vector<double>& dbias);
void conv2d_backward_filter_omp(const Tensor& in, const Tensor& dout, Tensor& dweights,
                                std::vector<double>& dbias);
void conv2d_backward_filter(const Tensor& in, const Tensor& dout, Tensor& dweights,
                            std::vector<double>& dbias);

// 2x2 box-mean downsample with round-half-up; output dims ceil(src/2).
// Edge blocks shrink to the available pixels.
void box_downsample2x_serial(const ImageRGB& src, ImageRGB& dst);
void box_downsample2x_omp(const ImageRGB& src, ImageRGB& dst);
void box_downsample2x(const ImageRGB& src, ImageRGB& dst);

using Histogram256 = std::array<std::uint64_t, 256>;

void luminance_histogram_serial(const ImageRGB& img, Histogram256& hist);
void luminance_histogram_omp(const ImageRGB& img, Histogram256& hist);
void luminance_histogram(const ImageRGB& img, Histogram256& hist);

} // namespace wsimil::kernels
