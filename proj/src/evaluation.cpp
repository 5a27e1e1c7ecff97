#include "slr/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "slr/synthetic.hpp"

namespace slr {

std::size_t argmax(std::span<const float> values) {
    if (values.empty()) throw Error("argmax of empty range");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

namespace {

void check_shape(std::span<const float> probs, std::size_t classes, std::size_t rows) {
    if (classes == 0) throw Error("class count must be positive");
    if (probs.size() != rows * classes) throw Error("probability buffer does not match labels");
}

}  // namespace

double sfsr_from_probs(std::span<const float> probs, std::size_t classes, std::span<const int> labels) {
    check_shape(probs, classes, labels.size());
    if (labels.empty()) throw Error("empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (static_cast<int>(argmax(probs.subspan(i * classes, classes))) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

std::vector<std::size_t> video_predictions(std::span<const float> probs, std::size_t classes, const WindowSet& set,
                                           IsrAggregation aggregation) {
    check_shape(probs, classes, set.size());
    const std::size_t nv = set.video_count();
    std::vector<std::vector<float>> acc(nv, std::vector<float>(classes, 0.0f));
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto row = probs.subspan(i * classes, classes);
        auto& a = acc[set.video_of[i]];
        if (aggregation == IsrAggregation::MeanSoftmax) {
            for (std::size_t c = 0; c < classes; ++c) a[c] += row[c];
        } else {
            a[argmax(row)] += 1.0f;
        }
    }
    std::vector<std::size_t> out(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        if (set.windows_per_video[v] == 0) throw Error("video " + set.video_ids[v] + " has no windows");
        out[v] = argmax(acc[v]);
    }
    return out;
}

}  // namespace

double isr_from_probs(std::span<const float> probs, std::size_t classes, const WindowSet& set,
                      IsrAggregation aggregation) {
    if (set.video_count() == 0) throw Error("empty dataset");
    const auto pred = video_predictions(probs, classes, set, aggregation);
    std::size_t hits = 0;
    for (std::size_t v = 0; v < pred.size(); ++v) {
        if (static_cast<int>(pred[v]) == set.video_labels[v]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double sfsr(const Model& model, const WindowSet& set) {
    const auto probs = model.predict(std::span<const FeatureVector>(set.features));
    return sfsr_from_probs(probs, static_cast<std::size_t>(model.class_count()), set.labels);
}

double isr(const Model& model, const WindowSet& set, IsrAggregation aggregation) {
    const auto probs = model.predict(std::span<const FeatureVector>(set.features));
    return isr_from_probs(probs, static_cast<std::size_t>(model.class_count()), set, aggregation);
}

nlohmann::json LatencyStats::to_json() const {
    return {{"iterations", iterations},
            {"mean_ms", mean_ms},
            {"median_ms", median_ms},
            {"p95_ms", p95_ms},
            {"p99_ms", p99_ms}};
}

LatencyStats summarize_latencies(std::vector<double> samples_ms) {
    if (samples_ms.empty()) throw Error("no latency samples");
    std::sort(samples_ms.begin(), samples_ms.end());
    const std::size_t n = samples_ms.size();
    auto rank = [&](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        return samples_ms[std::clamp<std::size_t>(r, 1, n) - 1];
    };
    LatencyStats s;
    s.iterations = n;
    s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(n);
    s.median_ms = rank(0.5);
    s.p95_ms = rank(0.95);
    s.p99_ms = rank(0.99);
    return s;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j{{"sfsr", sfsr},
                     {"isr", isr},
                     {"windows", windows},
                     {"videos", videos},
                     {"per_class_count", per_class_count},
                     {"per_class_accuracy", per_class_accuracy},
                     {"confusion", confusion}};
    if (latency) j["latency"] = latency->to_json();
    return j;
}

EvalReport evaluate(const Model& model, const WindowSet& set, IsrAggregation aggregation) {
    if (set.empty()) throw Error("empty dataset");
    const auto classes = static_cast<std::size_t>(model.class_count());
    const auto probs = model.predict(std::span<const FeatureVector>(set.features));
    EvalReport r;
    r.windows = set.size();
    r.videos = set.video_count();
    r.sfsr = sfsr_from_probs(probs, classes, set.labels);
    r.isr = isr_from_probs(probs, classes, set, aggregation);
    r.per_class_count.assign(classes, 0);
    r.per_class_accuracy.assign(classes, 0.0);
    r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < set.size(); ++i) {
        const int label = set.labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) throw Error("label outside the model's classes");
        const std::size_t pred = argmax(std::span<const float>(probs).subspan(i * classes, classes));
        ++r.per_class_count[static_cast<std::size_t>(label)];
        ++r.confusion[static_cast<std::size_t>(label)][pred];
    }
    for (std::size_t c = 0; c < classes; ++c) {
        if (r.per_class_count[c] > 0) {
            r.per_class_accuracy[c] =
                static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.per_class_count[c]);
        }
    }
    return r;
}

LatencyStats latency_bench(const Model& model, std::size_t iterations, const LandmarkWindow* sample) {
    const LandmarkWindow own = sample ? LandmarkWindow{} : synthetic_window(model.pipeline.window);
    const LandmarkWindow& win = sample ? *sample : own;
    iterations = std::max<std::size_t>(iterations, 100);
    const std::size_t warmup = std::min<std::size_t>(20, iterations / 10);
    std::vector<double> samples;
    samples.reserve(iterations);
    volatile float sink = 0.0f;
    for (std::size_t i = 0; i < warmup + iterations; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const FeatureVector x = encode_window(fill_missing(win));
        const auto p = model.predict(x, kernels::Backend::Serial);
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink + p[0];
        if (i >= warmup) samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return summarize_latencies(std::move(samples));
}

}  // namespace slr
