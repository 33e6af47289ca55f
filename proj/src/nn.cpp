#include "wsimil/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "wsimil/errors.hpp"
#include "wsimil/kernels.hpp"

namespace wsimil {

using nlohmann::json;

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kProbClip = 1e-7;
constexpr char kMagic[4] = {'W', 'S', 'M', 'C'};
} // namespace

void ArchSpec::validate() const {
    if (input_size < 1) throw config_error("arch: input_size must be positive");
    if (in_channels < 1) throw config_error("arch: in_channels must be positive");
    if (conv_channels.empty()) throw config_error("arch: need at least one conv block");
    if (head_outputs < 1) throw config_error("arch: head_outputs must be positive");
    int dim = input_size;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
        if (conv_channels[i] < 1) throw config_error("arch: conv channels must be positive");
        dim = kernels::conv_out_dim(dim);
        if (dim < 1) throw config_error("arch: spatial dims collapse to zero");
    }
}

std::vector<int> ArchSpec::spatial_dims() const {
    std::vector<int> dims;
    int dim = input_size;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
        dim = kernels::conv_out_dim(dim);
        dims.push_back(dim);
    }
    return dims;
}

int ArchSpec::final_spatial() const { return spatial_dims().back(); }

bool ArchSpec::same_body(const ArchSpec& o) const {
    return input_size == o.input_size && in_channels == o.in_channels &&
           conv_channels == o.conv_channels;
}

ParamTensor& ModelParams::by_name(const std::string& name) {
    for (auto& t : tensors)
        if (t.name == name) return t;
    throw runtime_fault("no parameter tensor named " + name);
}

const ParamTensor& ModelParams::by_name(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw runtime_fault("no parameter tensor named " + name);
}

namespace {

ParamTensor make_param(const std::string& name, int n, int c, int h, int w) {
    ParamTensor p;
    p.name = name;
    p.value = Tensor(n, c, h, w);
    p.m = Tensor(n, c, h, w);
    p.v = Tensor(n, c, h, w);
    return p;
}

void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : t.v) x = rng.uniform(-limit, limit);
}

} // namespace

ModelParams init_model(const ArchSpec& arch, Rng& rng) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    int ic = arch.in_channels;
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
        const int oc = arch.conv_channels[i];
        ParamTensor w = make_param("conv" + std::to_string(i) + ".w", oc, ic, 3, 3);
        glorot_fill(w.value, ic * 9, oc * 9, rng);
        p.tensors.push_back(std::move(w));
        p.tensors.push_back(make_param("conv" + std::to_string(i) + ".b", 1, oc, 1, 1));
        ic = oc;
    }
    ParamTensor hw = make_param("head.w", arch.head_outputs, arch.final_channels(), 1, 1);
    glorot_fill(hw.value, arch.final_channels(), arch.head_outputs, rng);
    p.tensors.push_back(std::move(hw));
    p.tensors.push_back(make_param("head.b", 1, arch.head_outputs, 1, 1));
    return p;
}

ForwardCache forward(const ModelParams& params, const Tensor& batch) {
    const ArchSpec& arch = params.arch;
    if (batch.c != arch.in_channels || batch.h != arch.input_size || batch.w != arch.input_size)
        throw data_error("forward: batch shape does not match arch input");
    if (batch.n < 1) throw data_error("forward: empty batch");

    ForwardCache cache;
    cache.batch = batch.n;
    cache.input = batch;
    const Tensor* cur = &cache.input;
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
        const Tensor& w = params.tensors[2 * i].value;
        const Tensor& b = params.tensors[2 * i + 1].value;
        Tensor out(cur->n, w.n, kernels::conv_out_dim(cur->h), kernels::conv_out_dim(cur->w));
        kernels::conv2d_forward(*cur, w, b.v, out);
        cache.pre.push_back(out);
        for (double& x : out.v) x = x > 0 ? x : 0;
        cache.post.push_back(std::move(out));
        cur = &cache.post.back();
    }

    const Tensor& last = cache.post.back();
    const int C = last.c;
    const double inv_hw = 1.0 / (static_cast<double>(last.h) * last.w);
    cache.gap.assign(static_cast<std::size_t>(batch.n) * C, 0.0);
    for (int bn = 0; bn < batch.n; ++bn)
        for (int c = 0; c < C; ++c) {
            const double* p = last.v.data() + last.index(bn, c, 0, 0);
            double acc = 0;
            const std::size_t hw = static_cast<std::size_t>(last.h) * last.w;
            for (std::size_t i = 0; i < hw; ++i) acc += p[i];
            cache.gap[static_cast<std::size_t>(bn) * C + c] = acc * inv_hw;
        }

    const Tensor& hw_t = params.tensors[params.tensors.size() - 2].value;
    const Tensor& hb_t = params.tensors[params.tensors.size() - 1].value;
    const int out_n = arch.head_outputs;
    cache.logits.assign(static_cast<std::size_t>(batch.n) * out_n, 0.0);
    for (int bn = 0; bn < batch.n; ++bn)
        for (int o = 0; o < out_n; ++o) {
            double acc = hb_t.v[o];
            for (int c = 0; c < C; ++c)
                acc += hw_t.at(o, c, 0, 0) * cache.gap[static_cast<std::size_t>(bn) * C + c];
            cache.logits[static_cast<std::size_t>(bn) * out_n + o] = acc;
        }

    if (out_n == 1) {
        cache.probs.resize(batch.n);
        for (int bn = 0; bn < batch.n; ++bn)
            cache.probs[bn] = 1.0 / (1.0 + std::exp(-cache.logits[bn]));
    } else {
        cache.probs.assign(cache.logits.size(), 0.0);
        for (int bn = 0; bn < batch.n; ++bn) {
            const double* lg = cache.logits.data() + static_cast<std::size_t>(bn) * out_n;
            double* pr = cache.probs.data() + static_cast<std::size_t>(bn) * out_n;
            double mx = lg[0];
            for (int o = 1; o < out_n; ++o) mx = std::max(mx, lg[o]);
            double denom = 0;
            for (int o = 0; o < out_n; ++o) denom += std::exp(lg[o] - mx);
            for (int o = 0; o < out_n; ++o) pr[o] = std::exp(lg[o] - mx) / denom;
        }
    }
    return cache;
}

std::vector<double> predict_probs(const ModelParams& params, const Tensor& batch) {
    return forward(params, batch).probs;
}

namespace {

// Shared backward pass from per-logit gradients down to parameter tensors.
Gradients backprop_from_dlogits(const ModelParams& params, const ForwardCache& cache,
                                const std::vector<double>& dlogits) {
    const ArchSpec& arch = params.arch;
    const int B = cache.batch;
    const int C = arch.final_channels();
    const int out_n = arch.head_outputs;

    Gradients grads;
    grads.g.reserve(params.tensors.size());
    for (const auto& t : params.tensors) {
        grads.g.emplace_back(t.value.n, t.value.c, t.value.h, t.value.w);
    }

    const std::size_t head_w_idx = params.tensors.size() - 2;
    const std::size_t head_b_idx = params.tensors.size() - 1;
    const Tensor& head_w = params.tensors[head_w_idx].value;

    if (params.tensors[head_w_idx].trainable) {
        Tensor& dW = grads.g[head_w_idx];
        Tensor& dB = grads.g[head_b_idx];
        for (int o = 0; o < out_n; ++o) {
            for (int c = 0; c < C; ++c) {
                double acc = 0;
                for (int bn = 0; bn < B; ++bn)
                    acc += dlogits[static_cast<std::size_t>(bn) * out_n + o] *
                           cache.gap[static_cast<std::size_t>(bn) * C + c];
                dW.at(o, c, 0, 0) = acc;
            }
            double acc = 0;
            for (int bn = 0; bn < B; ++bn)
                acc += dlogits[static_cast<std::size_t>(bn) * out_n + o];
            dB.v[o] = acc;
        }
    }

    bool any_conv_trainable = false;
    for (std::size_t i = 0; i + 2 < params.tensors.size(); ++i)
        if (params.tensors[i].trainable) any_conv_trainable = true;
    if (!any_conv_trainable) return grads;

    // d loss / d gap, then spread through the average pool
    const Tensor& last = cache.post.back();
    Tensor dpost(last.n, last.c, last.h, last.w);
    const double inv_hw = 1.0 / (static_cast<double>(last.h) * last.w);
    for (int bn = 0; bn < B; ++bn)
        for (int c = 0; c < C; ++c) {
            double dgap = 0;
            for (int o = 0; o < out_n; ++o)
                dgap += dlogits[static_cast<std::size_t>(bn) * out_n + o] * head_w.at(o, c, 0, 0);
            const double dval = dgap * inv_hw;
            double* p = dpost.v.data() + dpost.index(bn, c, 0, 0);
            const std::size_t hw = static_cast<std::size_t>(last.h) * last.w;
            for (std::size_t i = 0; i < hw; ++i) p[i] = dval;
        }

    for (int blk = static_cast<int>(arch.conv_channels.size()) - 1; blk >= 0; --blk) {
        const Tensor& pre = cache.pre[blk];
        Tensor dpre = dpost;
        for (std::size_t i = 0; i < dpre.v.size(); ++i)
            if (pre.v[i] <= 0) dpre.v[i] = 0;

        const Tensor& below = blk == 0 ? cache.input : cache.post[blk - 1];
        if (params.tensors[2 * blk].trainable) {
            kernels::conv2d_backward_filter(below, dpre, grads.g[2 * blk],
                                            grads.g[2 * blk + 1].v);
        }
        if (blk > 0) {
            Tensor dbelow(below.n, below.c, below.h, below.w);
            kernels::conv2d_backward_data(dpre, params.tensors[2 * blk].value, dbelow);
            dpost = std::move(dbelow);
        }
    }
    return grads;
}

} // namespace

std::pair<double, Gradients> loss_and_backward(const ModelParams& params, const ForwardCache& cache,
                                               const std::vector<int>& labels) {
    if (params.arch.head_outputs != 1)
        throw runtime_fault("loss_and_backward: binary loss needs a single-output head");
    if (static_cast<int>(labels.size()) != cache.batch)
        throw data_error("loss_and_backward: labels size mismatch");
    for (int y : labels)
        if (y != 0 && y != 1) throw data_error("loss_and_backward: labels must be 0 or 1");

    const int B = cache.batch;
    double loss = 0;
    std::vector<double> dlogits(B, 0.0);
    for (int bn = 0; bn < B; ++bn) {
        const double p = cache.probs[bn];
        const double pc = std::clamp(p, kProbClip, 1.0 - kProbClip);
        loss += labels[bn] == 1 ? -std::log(pc) : -std::log(1.0 - pc);
        // clip is flat outside its range, so clipped samples get zero gradient
        if (p > kProbClip && p < 1.0 - kProbClip) dlogits[bn] = (p - labels[bn]) / B;
    }
    loss /= B;
    return {loss, backprop_from_dlogits(params, cache, dlogits)};
}

std::pair<double, Gradients> loss_and_backward_multiclass(const ModelParams& params,
                                                          const ForwardCache& cache,
                                                          const std::vector<int>& labels) {
    const int out_n = params.arch.head_outputs;
    if (out_n < 2) throw runtime_fault("multiclass loss needs head_outputs >= 2");
    if (static_cast<int>(labels.size()) != cache.batch)
        throw data_error("loss_and_backward_multiclass: labels size mismatch");
    const int B = cache.batch;
    double loss = 0;
    std::vector<double> dlogits(cache.logits.size(), 0.0);
    for (int bn = 0; bn < B; ++bn) {
        const int y = labels[bn];
        if (y < 0 || y >= out_n)
            throw data_error("loss_and_backward_multiclass: label out of range");
        const double* pr = cache.probs.data() + static_cast<std::size_t>(bn) * out_n;
        loss += -std::log(std::max(pr[y], kProbClip));
        for (int o = 0; o < out_n; ++o)
            dlogits[static_cast<std::size_t>(bn) * out_n + o] =
                (pr[o] - (o == y ? 1.0 : 0.0)) / B;
    }
    loss /= B;
    return {loss, backprop_from_dlogits(params, cache, dlogits)};
}

void adam_step(ModelParams& params, const Gradients& grads, double lr) {
    if (grads.g.size() != params.tensors.size())
        throw runtime_fault("adam_step: gradient/parameter mismatch");
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        ParamTensor& t = params.tensors[i];
        if (!t.trainable) continue;
        const Tensor& g = grads.g[i];
        if (!g.same_shape(t.value)) throw runtime_fault("adam_step: gradient shape mismatch");
        t.step += 1;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t.step));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t.step));
        for (std::size_t j = 0; j < t.value.v.size(); ++j) {
            const double gj = g.v[j];
            t.m.v[j] = kBeta1 * t.m.v[j] + (1.0 - kBeta1) * gj;
            t.v.v[j] = kBeta2 * t.v.v[j] + (1.0 - kBeta2) * gj * gj;
            const double mhat = t.m.v[j] / bc1;
            const double vhat = t.v.v[j] / bc2;
            t.value.v[j] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    }
}

double lr_at(int epoch, double base_lr, double decay, int every) {
    if (epoch < 0) throw config_error("lr_at: negative epoch");
    return base_lr * std::pow(decay, static_cast<double>(epoch / every));
}

void set_freeze(ModelParams& params, FreezePhase phase) {
    for (std::size_t i = 0; i < params.tensors.size(); ++i)
        params.tensors[i].trainable = phase == FreezePhase::all_trainable || params.is_head(i);
}

namespace {

json arch_to_json(const ArchSpec& a) {
    return json{{"input_size", a.input_size},
                {"in_channels", a.in_channels},
                {"conv_channels", a.conv_channels},
                {"head_outputs", a.head_outputs}};
}

ArchSpec arch_from_json(const json& j) {
    ArchSpec a;
    a.input_size = j.at("input_size").get<int>();
    a.in_channels = j.at("in_channels").get<int>();
    a.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    a.head_outputs = j.at("head_outputs").get<int>();
    return a;
}

void write_f32_blob(std::ofstream& out, const Tensor& t) {
    std::vector<float> buf(t.v.size());
    for (std::size_t i = 0; i < t.v.size(); ++i) buf[i] = static_cast<float>(t.v[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_f32_blob(std::ifstream& in, Tensor& t) {
    std::vector<float> buf(t.v.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] = static_cast<double>(buf[i]);
}

} // namespace

void save_checkpoint(const std::filesystem::path& file, const ModelParams& params) {
    json hdr;
    hdr["arch"] = arch_to_json(params.arch);
    hdr["tensors"] = json::array();
    for (const auto& t : params.tensors) {
        hdr["tensors"].push_back({{"name", t.name},
                                  {"shape", {t.value.n, t.value.c, t.value.h, t.value.w}},
                                  {"trainable", t.trainable},
                                  {"step", t.step}});
    }
    const std::string hdr_str = hdr.dump();
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write checkpoint: " + file.string());
    out.write(kMagic, 4);
    const std::uint32_t len = static_cast<std::uint32_t>(hdr_str.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(hdr_str.data(), static_cast<std::streamsize>(hdr_str.size()));
    for (const auto& t : params.tensors) {
        write_f32_blob(out, t.value);
        write_f32_blob(out, t.m);
        write_f32_blob(out, t.v);
    }
    if (!out) throw data_error("short checkpoint write: " + file.string());
}

ModelParams load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw data_error("cannot open checkpoint: " + file.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw data_error("not a checkpoint file: " + file.string());
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string hdr_str(len, '\0');
    in.read(hdr_str.data(), len);
    if (!in) throw data_error("truncated checkpoint header: " + file.string());
    json hdr;
    try {
        hdr = json::parse(hdr_str);
    } catch (const json::exception& e) {
        throw data_error("corrupt checkpoint header: " + std::string(e.what()));
    }

    ModelParams params;
    params.arch = arch_from_json(hdr.at("arch"));
    params.arch.validate();
    for (const auto& jt : hdr.at("tensors")) {
        auto shape = jt.at("shape").get<std::vector<int>>();
        if (shape.size() != 4) throw data_error("bad tensor shape in checkpoint");
        ParamTensor t = make_param(jt.at("name").get<std::string>(), shape[0], shape[1], shape[2],
                                   shape[3]);
        t.trainable = jt.at("trainable").get<bool>();
        t.step = jt.at("step").get<std::int64_t>();
        params.tensors.push_back(std::move(t));
    }
    for (auto& t : params.tensors) {
        read_f32_blob(in, t.value);
        read_f32_blob(in, t.m);
        read_f32_blob(in, t.v);
    }
    if (!in) throw data_error("truncated checkpoint blobs: " + file.string());

    // cross-check header against the declared architecture
    ModelParams expect;
    {
        Rng rng(0);
        expect = init_model(params.arch, rng);
    }
    if (expect.tensors.size() != params.tensors.size())
        throw data_error("checkpoint tensor count does not match arch");
    for (std::size_t i = 0; i < expect.tensors.size(); ++i) {
        if (expect.tensors[i].name != params.tensors[i].name ||
            !expect.tensors[i].value.same_shape(params.tensors[i].value))
            throw data_error("checkpoint tensor " + params.tensors[i].name +
                             " does not match arch");
    }
    return params;
}

void transplant_body(ModelParams& dst, const ModelParams& src) {
    if (!dst.arch.same_body(src.arch))
        throw data_error("transplant_body: incompatible conv bodies");
    for (std::size_t i = 0; i + 2 < dst.tensors.size(); ++i) {
        dst.tensors[i].value = src.tensors[i].value;
        dst.tensors[i].m.fill(0.0);
        dst.tensors[i].v.fill(0.0);
        dst.tensors[i].step = 0;
    }
}

Tensor make_batch(const std::vector<Tensor>& tiles) {
    if (tiles.empty()) throw data_error("make_batch: no tiles");
    const Tensor& first = tiles.front();
    Tensor batch(static_cast<int>(tiles.size()), first.c, first.h, first.w);
    const std::size_t per = first.v.size();
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (tiles[i].v.size() != per || tiles[i].n != 1)
            throw data_error("make_batch: inconsistent tile shapes");
        std::copy(tiles[i].v.begin(), tiles[i].v.end(), batch.v.begin() + per * i);
    }
    return batch;
}

} // namespace wsimil
