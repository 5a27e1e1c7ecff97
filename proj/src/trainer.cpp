#include "slr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace slr {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Scores {
    double loss = 0.0;
    double sfsr = 0.0;
};

Scores score(const Network<float>& net, std::span<const float> x, std::span<const int> y, kernels::Backend backend) {
    constexpr std::size_t kChunk = 512;
    const auto classes = static_cast<std::size_t>(net.config().class_count);
    double loss = 0.0;
    std::size_t hits = 0;
    for (std::size_t begin = 0; begin < y.size(); begin += kChunk) {
        const std::size_t n = std::min(kChunk, y.size() - begin);
        const auto probs = net.forward(x.subspan(begin * kFeatureSize, n * kFeatureSize), n, false, nullptr, backend);
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const float> row(probs.data() + i * classes, classes);
            loss += cross_entropy(row, y[begin + i]);
            const auto best = std::max_element(row.begin(), row.end()) - row.begin();
            if (best == y[begin + i]) ++hits;
        }
    }
    const auto n = static_cast<double>(y.size());
    return {loss / n, static_cast<double>(hits) / n};
}

void check_labels(const WindowSet& set, int classes) {
    for (int label : set.labels) {
        if (label < 0 || label >= classes) throw Error("window label outside the class range");
    }
}

}  // namespace

TrainResult train(const WindowSet& train_set, const WindowSet& val, const ModelConfig& mc, const TrainingConfig& tc,
                  const EpochCallback& on_epoch) {
    mc.validate();
    tc.validate();
    if (train_set.empty()) throw Error("empty dataset");
    check_labels(train_set, mc.class_count);
    check_labels(val, mc.class_count);

    const std::vector<float> x = pack_features<float>(train_set.features);
    const std::vector<int>& y = train_set.labels;
    const bool has_val = !val.empty();
    const std::vector<float> vx = has_val ? pack_features<float>(val.features) : std::vector<float>{};
    const std::span<const float> sel_x = has_val ? std::span<const float>(vx) : std::span<const float>(x);
    const std::span<const int> sel_y = has_val ? std::span<const int>(val.labels) : std::span<const int>(y);

    Network<float> net = Network<float>::initialise(mc);
    Network<float> grads(mc);
    AdamState<float> state(mc);
    ForwardCache<float> cache;

    std::mt19937_64 rng(tc.seed);
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(tc.batch_size);
    std::vector<float> xb(batch * kFeatureSize);
    std::vector<int> yb(batch);

    TrainResult result;
    result.net = net;
    double best_sfsr = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::uint64_t step = 0;
    const auto classes = static_cast<std::size_t>(mc.class_count);

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t n = std::min(batch, order.size() - begin);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t src = order[begin + i];
                std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(src * kFeatureSize), kFeatureSize,
                            xb.begin() + static_cast<std::ptrdiff_t>(i * kFeatureSize));
                yb[i] = y[src];
            }
            std::mt19937_64 drng(mix(tc.seed, step++));
            const std::span<const float> xs(xb.data(), n * kFeatureSize);
            const std::span<const int> ys(yb.data(), n);
            net.forward(xs, n, true, &drng, tc.backend, cache);
            for (std::size_t i = 0; i < n; ++i) {
                loss_sum += cross_entropy(std::span<const float>(cache.probs.data() + i * classes, classes), ys[i]);
            }
            grads.fill(0.0f);
            net.backward(cache, ys, grads, tc.backend);
            adam_step(net, grads, state, tc);
        }

        const Scores s = score(net, sel_x, sel_y, tc.backend);
        EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()), s.loss, s.sfsr};
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);

        if (s.sfsr > best_sfsr || (s.sfsr == best_sfsr && s.loss < best_loss)) {
            best_sfsr = s.sfsr;
            best_loss = s.loss;
            result.net = net;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (tc.patience > 0 && ++since_best >= tc.patience) {
            break;
        }
    }
    return result;
}

VideoSplit stratified_split(std::vector<VideoSequence> videos, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw Error("validation fraction must be in [0, 1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < videos.size(); ++i) by_class[videos[i].sign_id].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<bool> held(videos.size(), false);
    if (fraction > 0.0) {
        for (auto& [sign, idx] : by_class) {
            const auto n = static_cast<long>(idx.size());
            if (n < 2) continue;
            const long k = std::clamp(std::lround(fraction * static_cast<double>(n)), 1L, n - 1);
            std::shuffle(idx.begin(), idx.end(), rng);
            for (long i = 0; i < k; ++i) held[idx[static_cast<std::size_t>(i)]] = true;
        }
    }
    VideoSplit out;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        (held[i] ? out.held_out : out.kept).push_back(std::move(videos[i]));
    }
    return out;
}

Model train_model(const Dataset& data, const PipelineConfig& pipeline, const AugmentPlan& aug, ModelConfig mc,
                  const TrainingConfig& tc, TrainingReport* report, const EpochCallback& on_epoch) {
    pipeline.validate();
    tc.validate();
    if (aug.copies < 0) throw Error("augment copies must be >= 0");
    if (aug.copies > 0) aug.cfg.validate();
    if (data.videos.empty()) throw Error("empty dataset");

    FilterResult filtered = filter_dataset(data.videos, pipeline.min_present_ratio);
    VideoSplit split = stratified_split(std::move(filtered.videos), tc.validation_fraction, tc.seed);

    std::vector<VideoSequence> train_videos = split.kept;
    for (std::size_t i = 0; i < split.kept.size(); ++i) {
        const VideoSequence& v = split.kept[i];
        const SignClass* sc = data.registry.find(v.sign_id);
        for (int c = 0; c < aug.copies; ++c) {
            AugmentConfig cfg = aug.cfg;
            cfg.seed = mix(mix(aug.cfg.seed, i), static_cast<std::uint64_t>(c));
            cfg.mirror = aug.cfg.mirror && sc && sc->symmetric;
            train_videos.push_back(augment(v, cfg));
        }
    }

    const WindowSet train_set = encode_videos(train_videos, pipeline);
    const WindowSet val_set = encode_videos(split.held_out, pipeline);
    if (train_set.empty()) throw Error("empty dataset");

    int max_label = 0;
    for (int l : train_set.labels) max_label = std::max(max_label, l);
    for (int l : val_set.labels) max_label = std::max(max_label, l);
    std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
    for (int l : train_set.labels) seen[static_cast<std::size_t>(l)] = true;
    for (int k = 1; k <= max_label; ++k) {
        if (!seen[static_cast<std::size_t>(k)]) {
            throw Error("class " + std::to_string(k) + " has no training samples");
        }
    }
    mc.class_count = max_label + 1;

    TrainResult result = train(train_set, val_set, mc, tc, on_epoch);
    Model model{result.net, pipeline, data.registry};
    if (report) {
        report->train_videos = split.kept.size();
        report->val_videos = split.held_out.size();
        report->dropped_videos = filtered.dropped;
        report->train_windows = train_set.size();
        report->val_windows = val_set.size();
        report->result = std::move(result);
    }
    return model;
}

}  // namespace slr
