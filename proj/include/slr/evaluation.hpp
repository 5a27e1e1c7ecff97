#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "slr/model.hpp"
#include "slr/pipeline.hpp"

namespace slr {

enum class IsrAggregation { MeanSoftmax, MajorityVote };

/// Index of the largest entry; lowest index on ties.
std::size_t argmax(std::span<const float> values);

/// Fraction of windows whose argmax equals the label. `probs` is
/// [labels.size() x classes].
double sfsr_from_probs(std::span<const float> probs, std::size_t classes, std::span<const int> labels);

/// Fraction of videos classified correctly after aggregating their windows.
/// Throws when a video has no windows.
double isr_from_probs(std::span<const float> probs, std::size_t classes, const WindowSet& set,
                      IsrAggregation aggregation = IsrAggregation::MeanSoftmax);

double sfsr(const Model& model, const WindowSet& set);
double isr(const Model& model, const WindowSet& set, IsrAggregation aggregation = IsrAggregation::MeanSoftmax);

struct LatencyStats {
    std::size_t iterations = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;

    nlohmann::json to_json() const;
};

/// Nearest-rank percentiles over per-iteration timings.
LatencyStats summarize_latencies(std::vector<double> samples_ms);

struct EvalReport {
    double sfsr = 0.0;
    double isr = 0.0;
    std::size_t windows = 0;
    std::size_t videos = 0;
    std::vector<std::size_t> per_class_count;
    std::vector<double> per_class_accuracy;  // NaN-free: 0 for classes without samples
    std::vector<std::vector<std::size_t>> confusion;  // [label][predicted], window level
    std::optional<LatencyStats> latency;

    nlohmann::json to_json() const;
};

EvalReport evaluate(const Model& model, const WindowSet& set,
                    IsrAggregation aggregation = IsrAggregation::MeanSoftmax);

/// Wall-clock of encode + forward for one window on the calling thread,
/// serial kernels, warmup excluded. `sample` defaults to a synthetic window.
LatencyStats latency_bench(const Model& model, std::size_t iterations, const LandmarkWindow* sample = nullptr);

}  // namespace slr
