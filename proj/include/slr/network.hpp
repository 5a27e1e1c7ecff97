#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"
#include "slr/features.hpp"
#include "slr/kernels.hpp"

namespace slr {

/// Architecture of the branched classifier. Each of the seven feature
/// segments feeds its own dense+ReLU branch; branch outputs are concatenated
/// into a dense+ReLU(+dropout) head and a final dense layer over the classes.
struct ModelConfig {
    int class_count = 343;
    std::array<std::vector<int>, kSegmentCount> branch_dims;
    std::vector<int> head_dims = {512};
    double dropout_rate = 0.2;
    std::uint64_t seed = 0;

    /// Branches 128 -> 64, head 512, dropout 0.2.
    static ModelConfig defaults(int class_count = 343);
    /// Same hidden widths for all seven branches.
    static ModelConfig uniform(int class_count, std::vector<int> branch, std::vector<int> head, double dropout = 0.0,
                               std::uint64_t seed = 0);

    void validate() const;
    std::size_t branch_output(std::size_t segment) const;
    std::size_t concat_width() const;
    std::size_t parameter_count() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

enum class WeightDecayMode { Decoupled, L2 };

struct TrainingConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    WeightDecayMode decay_mode = WeightDecayMode::Decoupled;
    int epochs = 40;
    int batch_size = 64;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double validation_fraction = 0.1;
    /// Stop after this many epochs without validation improvement; 0 disables.
    int patience = 0;
    std::uint64_t seed = 0;
    kernels::Backend backend = kernels::Backend::OpenMP;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

template <typename T>
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<T> weight;  // [in x out]
    std::vector<T> bias;    // [out]

    DenseLayer() = default;
    DenseLayer(std::size_t in_, std::size_t out_) : in(in_), out(out_), weight(in_ * out_), bias(out_) {}
};

template <typename T>
struct ForwardCache;

/// Parameters of the branched classifier. The same type doubles as the
/// gradient and Adam-moment containers.
template <typename T>
class Network {
public:
    Network() = default;
    /// Zero-filled parameters with the shapes implied by `cfg`.
    explicit Network(const ModelConfig& cfg);

    /// He-uniform weights, zero biases, deterministic in cfg.seed.
    static Network initialise(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    /// Layers in serialisation order: branch 0..6 (input side first), head,
    /// output layer.
    std::vector<DenseLayer<T>*> layers();
    std::vector<const DenseLayer<T>*> layers() const;

    std::array<std::vector<DenseLayer<T>>, kSegmentCount>& branches() { return branches_; }
    std::vector<DenseLayer<T>>& head() { return head_; }
    DenseLayer<T>& output() { return output_; }
    const DenseLayer<T>& output() const { return output_; }

    std::size_t parameter_count() const;
    void fill(T value);

    template <typename U>
    Network<U> cast() const;

    /// Batched forward. `x` is [batch x 947]; returns [batch x class_count]
    /// softmax probabilities. Dropout is applied only when `train_mode` is set
    /// and `rng` is given.
    std::vector<T> forward(std::span<const T> x, std::size_t batch, bool train_mode = false,
                           std::mt19937_64* rng = nullptr,
                           kernels::Backend backend = kernels::Backend::OpenMP) const;

    /// Same as forward but keeps the activations needed by backward().
    void forward(std::span<const T> x, std::size_t batch, bool train_mode, std::mt19937_64* rng,
                 kernels::Backend backend, ForwardCache<T>& cache) const;

    /// Accumulates mean-over-batch cross-entropy gradients into `grads`.
    void backward(const ForwardCache<T>& cache, std::span<const int> targets, Network& grads,
                  kernels::Backend backend = kernels::Backend::OpenMP) const;

private:
    template <typename U>
    friend class Network;

    ModelConfig cfg_;
    std::array<std::vector<DenseLayer<T>>, kSegmentCount> branches_;
    std::vector<DenseLayer<T>> head_;
    DenseLayer<T> output_;
};

template <typename T>
struct ForwardCache {
    std::size_t batch = 0;
    std::array<std::vector<T>, kSegmentCount> inputs;
    // Post-ReLU outputs, one per branch layer.
    std::array<std::vector<std::vector<T>>, kSegmentCount> branch_acts;
    std::vector<T> concat;
    // Head post-ReLU (pre-dropout), dropout scale masks, post-dropout outputs.
    std::vector<std::vector<T>> head_relu;
    std::vector<std::vector<T>> head_mask;
    std::vector<std::vector<T>> head_out;
    std::vector<T> probs;
};

/// Sparse categorical cross-entropy: -ln(max(p[target], 1e-12)).
double cross_entropy(std::span<const float> probs, int target);
double cross_entropy(std::span<const double> probs, int target);

/// Mean-over-batch gradients of the loss, with dropout masks drawn from
/// `seed`. `x` is [targets.size() x 947].
template <typename T>
Network<T> gradients(const Network<T>& net, std::span<const T> x, std::span<const int> targets, bool train_mode,
                     std::uint64_t seed, kernels::Backend backend = kernels::Backend::OpenMP);

template <typename T>
struct AdamState {
    Network<T> m;
    Network<T> v;
    std::int64_t step = 0;

    AdamState() = default;
    explicit AdamState(const ModelConfig& cfg) : m(cfg), v(cfg) {}
};

/// One bias-corrected Adam update. Decoupled decay then applies
/// theta <- theta - lr * wd * theta; L2 mode adds wd * theta to the gradient.
template <typename T>
void adam_step(Network<T>& params, const Network<T>& grads, AdamState<T>& state, const TrainingConfig& tc);

}  // namespace slr
