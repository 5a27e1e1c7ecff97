#pragma once

#include <functional>
#include <vector>

#include "slr/model.hpp"
#include "slr/network.hpp"
#include "slr/pipeline.hpp"
#include "slr/record_io.hpp"

namespace slr {

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_sfsr = 0.0;
};

struct TrainResult {
    Network<float> net;
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam over encoded windows. Returns the parameters of the epoch
/// with the best validation SFSR (lower validation loss breaks ties). When
/// `val` is empty the training set is used for selection.
TrainResult train(const WindowSet& train_set, const WindowSet& val, const ModelConfig& mc, const TrainingConfig& tc,
                  const EpochCallback& on_epoch = {});

struct VideoSplit {
    std::vector<VideoSequence> kept;
    std::vector<VideoSequence> held_out;
};

/// Per-class split by video. Each class with n >= 2 videos holds out
/// round(fraction * n) of them, at least 1 and at most n - 1.
VideoSplit stratified_split(std::vector<VideoSequence> videos, double fraction, std::uint64_t seed);

struct AugmentPlan {
    AugmentConfig cfg;
    /// Augmented copies added per training video.
    int copies = 0;
};

struct TrainingReport {
    std::size_t train_videos = 0;
    std::size_t val_videos = 0;
    std::size_t dropped_videos = 0;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    TrainResult result;
};

/// filter -> split -> augment -> encode -> train. class_count is taken from
/// the largest sign id present; every id in 1..max needs training windows.
Model train_model(const Dataset& data, const PipelineConfig& pipeline, const AugmentPlan& aug, ModelConfig mc,
                  const TrainingConfig& tc, TrainingReport* report = nullptr, const EpochCallback& on_epoch = {});

}  // namespace slr
