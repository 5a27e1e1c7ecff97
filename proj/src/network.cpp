#include "slr/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slr {

namespace {

using kernels::Backend;
using kernels::DenseShape;

template <typename T>
void relu_inplace(std::vector<T>& v) {
    for (T& a : v) a = a > T(0) ? a : T(0);
}

template <typename T>
void softmax_rows(std::vector<T>& logits, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        T* row = logits.data() + r * cols;
        const T mx = *std::max_element(row, row + cols);
        T sum = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
    }
}

template <typename T>
void layer_forward(Backend backend, const DenseLayer<T>& layer, std::span<const T> x, std::size_t batch,
                   std::vector<T>& y) {
    y.resize(batch * layer.out);
    kernels::dense_forward<T>(backend, {batch, layer.in, layer.out}, x, layer.weight, layer.bias, y);
}

template <typename T>
void layer_backward(Backend backend, const DenseLayer<T>& layer, std::span<const T> x, std::span<const T> dy,
                    std::size_t batch, DenseLayer<T>& grad, std::vector<T>* dx) {
    const DenseShape shape{batch, layer.in, layer.out};
    kernels::dense_backward_params<T>(backend, shape, x, dy, grad.weight, grad.bias);
    if (dx) {
        dx->resize(batch * layer.in);
        kernels::dense_backward_input<T>(backend, shape, dy, layer.weight, *dx);
    }
}

std::vector<int> dims_from_json(const nlohmann::json& j) {
    std::vector<int> out;
    for (const auto& v : j) out.push_back(v.get<int>());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configs

ModelConfig ModelConfig::defaults(int class_count) {
    ModelConfig c;
    c.class_count = class_count;
    for (auto& b : c.branch_dims) b = {128, 64};
    c.head_dims = {512};
    c.dropout_rate = 0.2;
    return c;
}

ModelConfig ModelConfig::uniform(int class_count, std::vector<int> branch, std::vector<int> head, double dropout,
                                 std::uint64_t seed) {
    ModelConfig c;
    c.class_count = class_count;
    for (auto& b : c.branch_dims) b = branch;
    c.head_dims = std::move(head);
    c.dropout_rate = dropout;
    c.seed = seed;
    return c;
}

void ModelConfig::validate() const {
    if (class_count < 2) throw Error("class_count must be >= 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout_rate must be in [0, 1)");
    for (const auto& dims : branch_dims) {
        for (int d : dims) {
            if (d <= 0) throw Error("branch widths must be positive");
        }
    }
    for (int d : head_dims) {
        if (d <= 0) throw Error("head widths must be positive");
    }
}

std::size_t ModelConfig::branch_output(std::size_t segment) const {
    const auto& dims = branch_dims[segment];
    return dims.empty() ? kSegmentSizes[segment] : static_cast<std::size_t>(dims.back());
}

std::size_t ModelConfig::concat_width() const {
    std::size_t w = 0;
    for (std::size_t s = 0; s < kSegmentCount; ++s) w += branch_output(s);
    return w;
}

std::size_t ModelConfig::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        std::size_t in = kSegmentSizes[s];
        for (int d : branch_dims[s]) {
            n += in * static_cast<std::size_t>(d) + static_cast<std::size_t>(d);
            in = static_cast<std::size_t>(d);
        }
    }
    std::size_t in = concat_width();
    for (int d : head_dims) {
        n += in * static_cast<std::size_t>(d) + static_cast<std::size_t>(d);
        in = static_cast<std::size_t>(d);
    }
    n += in * static_cast<std::size_t>(class_count) + static_cast<std::size_t>(class_count);
    return n;
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& b : branch_dims) branches.push_back(b);
    return {{"class_count", class_count},
            {"branch_dims", branches},
            {"head_dims", head_dims},
            {"dropout_rate", dropout_rate},
            {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c = defaults(j.value("class_count", 343));
    try {
        if (j.contains("branch_dims")) {
            const auto& b = j.at("branch_dims");
            const bool nested = !b.empty() && b.front().is_array();
            if (nested) {
                if (b.size() != kSegmentCount) throw Error("branch_dims needs 7 lists");
                for (std::size_t s = 0; s < kSegmentCount; ++s) c.branch_dims[s] = dims_from_json(b[s]);
            } else {
                for (auto& dims : c.branch_dims) dims = dims_from_json(b);
            }
        }
        if (j.contains("head_dims")) c.head_dims = dims_from_json(j.at("head_dims"));
        c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid model config: ") + e.what());
    }
    c.validate();
    return c;
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw Error("weight_decay must be >= 0");
    if (epochs < 1) throw Error("epochs must be >= 1");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw Error("validation_fraction must be in [0, 1)");
    }
    if (patience < 0) throw Error("patience must be >= 0");
}

nlohmann::json TrainingConfig::to_json() const {
    return {{"loss", "sparse_categorical_crossentropy"},
            {"optimizer", "adam"},
            {"learning_rate", learning_rate},
            {"weight_decay", weight_decay},
            {"weight_decay_mode", decay_mode == WeightDecayMode::L2 ? "l2" : "decoupled"},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"beta1", beta1},
            {"beta2", beta2},
            {"epsilon", epsilon},
            {"validation_fraction", validation_fraction},
            {"patience", patience},
            {"seed", seed},
            {"backend", backend == Backend::Serial ? "serial" : "openmp"}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    TrainingConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        const std::string mode = j.value("weight_decay_mode", std::string("decoupled"));
        if (mode == "decoupled") {
            c.decay_mode = WeightDecayMode::Decoupled;
        } else if (mode == "l2") {
            c.decay_mode = WeightDecayMode::L2;
        } else {
            throw Error("weight_decay_mode must be 'decoupled' or 'l2'");
        }
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
        c.patience = j.value("patience", c.patience);
        c.seed = j.value("seed", c.seed);
        const std::string backend = j.value("backend", std::string("openmp"));
        if (backend == "openmp") {
            c.backend = Backend::OpenMP;
        } else if (backend == "serial") {
            c.backend = Backend::Serial;
        } else {
            throw Error("backend must be 'openmp' or 'serial'");
        }
        if (j.contains("loss") && j.at("loss") != "sparse_categorical_crossentropy") {
            throw Error("only sparse_categorical_crossentropy is supported");
        }
        if (j.contains("optimizer") && j.at("optimizer") != "adam") throw Error("only the adam optimizer is supported");
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid training config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Network

template <typename T>
Network<T>::Network(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        std::size_t in = kSegmentSizes[s];
        for (int d : cfg_.branch_dims[s]) {
            branches_[s].emplace_back(in, static_cast<std::size_t>(d));
            in = static_cast<std::size_t>(d);
        }
    }
    std::size_t in = cfg_.concat_width();
    for (int d : cfg_.head_dims) {
        head_.emplace_back(in, static_cast<std::size_t>(d));
        in = static_cast<std::size_t>(d);
    }
    output_ = DenseLayer<T>(in, static_cast<std::size_t>(cfg_.class_count));
}

template <typename T>
Network<T> Network<T>::initialise(const ModelConfig& cfg) {
    Network net(cfg);
    std::mt19937_64 rng(cfg.seed);
    for (DenseLayer<T>* layer : net.layers()) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer->in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (T& w : layer->weight) w = static_cast<T>(dist(rng));
    }
    return net;
}

template <typename T>
std::vector<DenseLayer<T>*> Network<T>::layers() {
    std::vector<DenseLayer<T>*> out;
    for (auto& branch : branches_) {
        for (auto& l : branch) out.push_back(&l);
    }
    for (auto& l : head_) out.push_back(&l);
    out.push_back(&output_);
    return out;
}

template <typename T>
std::vector<const DenseLayer<T>*> Network<T>::layers() const {
    std::vector<const DenseLayer<T>*> out;
    for (const auto& branch : branches_) {
        for (const auto& l : branch) out.push_back(&l);
    }
    for (const auto& l : head_) out.push_back(&l);
    out.push_back(&output_);
    return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer<T>* l : layers()) n += l->weight.size() + l->bias.size();
    return n;
}

template <typename T>
void Network<T>::fill(T value) {
    for (DenseLayer<T>* l : layers()) {
        std::fill(l->weight.begin(), l->weight.end(), value);
        std::fill(l->bias.begin(), l->bias.end(), value);
    }
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
    Network<U> out(cfg_);
    auto src = layers();
    auto dst = out.layers();
    for (std::size_t i = 0; i < src.size(); ++i) {
        std::transform(src[i]->weight.begin(), src[i]->weight.end(), dst[i]->weight.begin(),
                       [](T v) { return static_cast<U>(v); });
        std::transform(src[i]->bias.begin(), src[i]->bias.end(), dst[i]->bias.begin(),
                       [](T v) { return static_cast<U>(v); });
    }
    return out;
}

template <typename T>
std::vector<T> Network<T>::forward(std::span<const T> x, std::size_t batch, bool train_mode, std::mt19937_64* rng,
                                   Backend backend) const {
    ForwardCache<T> cache;
    forward(x, batch, train_mode, rng, backend, cache);
    return std::move(cache.probs);
}

template <typename T>
void Network<T>::forward(std::span<const T> x, std::size_t batch, bool train_mode, std::mt19937_64* rng,
                         Backend backend, ForwardCache<T>& cache) const {
    if (x.size() != batch * kFeatureSize) throw Error("forward: input length must be batch x 947");
    cache.batch = batch;
    const std::size_t width = cfg_.concat_width();
    cache.concat.assign(batch * width, T(0));

    std::size_t col = 0;
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        const std::size_t seg = kSegmentSizes[s];
        std::vector<T>& in = cache.inputs[s];
        in.resize(batch * seg);
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy_n(x.data() + b * kFeatureSize + kSegmentOffsets[s], seg, in.data() + b * seg);
        }
        auto& acts = cache.branch_acts[s];
        acts.resize(branches_[s].size());
        const std::vector<T>* cur = &in;
        for (std::size_t l = 0; l < branches_[s].size(); ++l) {
            layer_forward<T>(backend, branches_[s][l], *cur, batch, acts[l]);
            relu_inplace(acts[l]);
            cur = &acts[l];
        }
        const std::size_t w = cfg_.branch_output(s);
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy_n(cur->data() + b * w, w, cache.concat.data() + b * width + col);
        }
        col += w;
    }

    const bool dropout = train_mode && rng != nullptr && cfg_.dropout_rate > 0.0;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - cfg_.dropout_rate));
    std::bernoulli_distribution keep(1.0 - cfg_.dropout_rate);
    cache.head_relu.resize(head_.size());
    cache.head_mask.resize(head_.size());
    cache.head_out.resize(head_.size());
    const std::vector<T>* cur = &cache.concat;
    for (std::size_t l = 0; l < head_.size(); ++l) {
        layer_forward<T>(backend, head_[l], *cur, batch, cache.head_relu[l]);
        relu_inplace(cache.head_relu[l]);
        std::vector<T>& mask = cache.head_mask[l];
        std::vector<T>& out = cache.head_out[l];
        if (dropout) {
            mask.resize(cache.head_relu[l].size());
            for (T& m : mask) m = keep(*rng) ? keep_scale : T(0);
            out.resize(mask.size());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = cache.head_relu[l][i] * mask[i];
        } else {
            mask.clear();
            out = cache.head_relu[l];
        }
        cur = &out;
    }
    layer_forward<T>(backend, output_, *cur, batch, cache.probs);
    softmax_rows(cache.probs, batch, output_.out);
}

template <typename T>
void Network<T>::backward(const ForwardCache<T>& cache, std::span<const int> targets, Network& grads,
                          Backend backend) const {
    const std::size_t batch = cache.batch;
    const std::size_t classes = output_.out;
    if (targets.size() != batch) throw Error("backward: one target per sample required");

    std::vector<T> delta(cache.probs);
    const T inv_batch = T(1) / static_cast<T>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const int t = targets[b];
        if (t < 0 || static_cast<std::size_t>(t) >= classes) throw Error("target class out of range");
        T* row = delta.data() + b * classes;
        row[t] -= T(1);
        for (std::size_t c = 0; c < classes; ++c) row[c] *= inv_batch;
    }

    std::vector<T> upstream;
    const std::vector<T>& out_in = head_.empty() ? cache.concat : cache.head_out.back();
    layer_backward<T>(backend, output_, out_in, delta, batch, grads.output_, &upstream);

    for (std::size_t li = head_.size(); li-- > 0;) {
        const std::vector<T>& relu = cache.head_relu[li];
        const std::vector<T>& mask = cache.head_mask[li];
        for (std::size_t i = 0; i < upstream.size(); ++i) {
            T g = relu[i] > T(0) ? upstream[i] : T(0);
            if (!mask.empty()) g *= mask[i];
            upstream[i] = g;
        }
        const std::vector<T>& in = li == 0 ? cache.concat : cache.head_out[li - 1];
        std::vector<T> next;
        layer_backward<T>(backend, head_[li], in, upstream, batch, grads.head_[li], &next);
        upstream = std::move(next);
    }

    const std::size_t width = cfg_.concat_width();
    std::size_t col = 0;
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        const std::size_t w = cfg_.branch_output(s);
        const auto& layers_s = branches_[s];
        if (!layers_s.empty()) {
            std::vector<T> d(batch * w);
            for (std::size_t b = 0; b < batch; ++b) {
                std::copy_n(upstream.data() + b * width + col, w, d.data() + b * w);
            }
            const auto& acts = cache.branch_acts[s];
            for (std::size_t li = layers_s.size(); li-- > 0;) {
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = acts[li][i] > T(0) ? d[i] : T(0);
                const std::vector<T>& in = li == 0 ? cache.inputs[s] : acts[li - 1];
                std::vector<T> next;
                layer_backward<T>(backend, layers_s[li], in, d, batch, grads.branches_[s][li],
                                  li == 0 ? nullptr : &next);
                d = std::move(next);
            }
        }
        col += w;
    }
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;
template Network<double> Network<double>::cast<double>() const;

// ---------------------------------------------------------------------------
// Loss, gradients, Adam

namespace {

template <typename T>
double cross_entropy_impl(std::span<const T> probs, int target) {
    if (target < 0 || static_cast<std::size_t>(target) >= probs.size()) throw Error("target class out of range");
    const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(target)]), 1e-12);
    return -std::log(p);
}

}  // namespace

double cross_entropy(std::span<const float> probs, int target) { return cross_entropy_impl(probs, target); }
double cross_entropy(std::span<const double> probs, int target) { return cross_entropy_impl(probs, target); }

template <typename T>
Network<T> gradients(const Network<T>& net, std::span<const T> x, std::span<const int> targets, bool train_mode,
                     std::uint64_t seed, Backend backend) {
    if (targets.empty()) throw Error("gradients: empty batch");
    std::mt19937_64 rng(seed);
    ForwardCache<T> cache;
    net.forward(x, targets.size(), train_mode, &rng, backend, cache);
    Network<T> grads(net.config());
    net.backward(cache, targets, grads, backend);
    return grads;
}

template Network<float> gradients(const Network<float>&, std::span<const float>, std::span<const int>, bool,
                                  std::uint64_t, Backend);
template Network<double> gradients(const Network<double>&, std::span<const double>, std::span<const int>, bool,
                                   std::uint64_t, Backend);

template <typename T>
void adam_step(Network<T>& params, const Network<T>& grads, AdamState<T>& state, const TrainingConfig& tc) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(tc.beta1, t);
    const double c2 = 1.0 - std::pow(tc.beta2, t);
    const T b1 = static_cast<T>(tc.beta1);
    const T b2 = static_cast<T>(tc.beta2);
    const T lr = static_cast<T>(tc.learning_rate);
    const T eps = static_cast<T>(tc.epsilon);
    const T wd = static_cast<T>(tc.weight_decay);
    const T inv_c1 = static_cast<T>(1.0 / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2);
    const bool l2 = tc.decay_mode == WeightDecayMode::L2;

    auto p_layers = params.layers();
    auto g_layers = grads.layers();
    auto m_layers = state.m.layers();
    auto v_layers = state.v.layers();
    if (p_layers.size() != g_layers.size() || p_layers.size() != m_layers.size()) {
        throw Error("adam_step: shape mismatch");
    }
    auto update = [&](std::vector<T>& p, const std::vector<T>& g, std::vector<T>& m, std::vector<T>& v) {
        if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
            throw Error("adam_step: shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const T gi = l2 ? g[i] + wd * p[i] : g[i];
            m[i] = b1 * m[i] + (T(1) - b1) * gi;
            v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
            const T mhat = m[i] * inv_c1;
            const T vhat = v[i] * inv_c2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            if (!l2) p[i] -= lr * wd * p[i];
        }
    };
    for (std::size_t k = 0; k < p_layers.size(); ++k) {
        update(p_layers[k]->weight, g_layers[k]->weight, m_layers[k]->weight, v_layers[k]->weight);
        update(p_layers[k]->bias, g_layers[k]->bias, m_layers[k]->bias, v_layers[k]->bias);
    }
}

template void adam_step(Network<float>&, const Network<float>&, AdamState<float>&, const TrainingConfig&);
template void adam_step(Network<double>&, const Network<double>&, AdamState<double>&, const TrainingConfig&);

}  // namespace slr
