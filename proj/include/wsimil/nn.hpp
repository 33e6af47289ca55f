#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsimil/rng.hpp"
#include "wsimil/tensor.hpp"

namespace wsimil {

// Reference classifier: a chain of 3x3 stride-2 ReLU conv blocks, global
// average pooling, and a dense head. head_outputs == 1 gives the sigmoid
// binary head; larger values are used by the auxiliary pretext task
// (softmax). No batch norm, so train and eval paths are identical and
// finite-difference gradient checks stay exact.
struct ArchSpec {
    int input_size = 64;
    int in_channels = 3;
    std::vector<int> conv_channels = {16, 32, 64};
    int head_outputs = 1;

    void validate() const;
    std::vector<int> spatial_dims() const; // per-block output spatial size
    int final_spatial() const;
    int final_channels() const { return conv_channels.back(); }
    bool same_body(const ArchSpec& o) const;
};

struct ParamTensor {
    std::string name;
    Tensor value;
    Tensor m; // Adam first moment
    Tensor v; // Adam second moment
    std::int64_t step = 0;
    bool trainable = true;
};

struct ModelParams {
    ArchSpec arch;
    std::vector<ParamTensor> tensors; // conv<i>.w, conv<i>.b, ..., head.w, head.b

    ParamTensor& by_name(const std::string& name);
    const ParamTensor& by_name(const std::string& name) const;
    bool is_head(std::size_t idx) const { return idx + 2 >= tensors.size(); }
};

// Glorot uniform: weights ~ U(-L, L) with L = sqrt(6 / (fan_in + fan_out));
// biases zero; Adam state zeroed.
ModelParams init_model(const ArchSpec& arch, Rng& rng);

struct ForwardCache {
    Tensor input;
    std::vector<Tensor> pre;  // conv outputs before ReLU
    std::vector<Tensor> post; // after ReLU; post.back() feeds GAP and Grad-CAM
    std::vector<double> gap;  // batch x final_channels
    std::vector<double> logits; // batch x head_outputs
    std::vector<double> probs;  // sigmoid (binary) or softmax (row-major)
    int batch = 0;
};

ForwardCache forward(const ModelParams& params, const Tensor& batch);

// Probabilities only (binary head).
std::vector<double> predict_probs(const ModelParams& params, const Tensor& batch);

struct Gradients {
    std::vector<Tensor> g; // parallel to ModelParams::tensors
};

// Mean binary cross-entropy with probabilities clipped to
// [1e-7, 1 - 1e-7]; gradients are filled for trainable tensors only.
std::pair<double, Gradients> loss_and_backward(const ModelParams& params, const ForwardCache& cache,
                                               const std::vector<int>& labels);

// Softmax cross-entropy for the pretext head (labels in [0, head_outputs)).
std::pair<double, Gradients> loss_and_backward_multiclass(const ModelParams& params,
                                                          const ForwardCache& cache,
                                                          const std::vector<int>& labels);

// Adam with bias correction, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
// Frozen tensors are untouched, including their step counters.
void adam_step(ModelParams& params, const Gradients& grads, double lr);

// lr(epoch) = 0.001 * 0.95^floor(epoch / 2).
double lr_at(int epoch, double base_lr = 1e-3, double decay = 0.95, int every = 2);

enum class FreezePhase { head_only, all_trainable };
void set_freeze(ModelParams& params, FreezePhase phase);

// Single binary file: magic, u32 header length, JSON header, then per
// tensor the f32 blobs for value, m and v in declaration order.
void save_checkpoint(const std::filesystem::path& file, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& file);

// Copies conv-body weights from src (any head) into dst, resetting the
// copied tensors' Adam state. Head tensors are left as initialized.
void transplant_body(ModelParams& dst, const ModelParams& src);

Tensor make_batch(const std::vector<Tensor>& tiles);

} // namespace wsimil
