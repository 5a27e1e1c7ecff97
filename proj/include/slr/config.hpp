#pragma once

#include <filesystem>

#include "json.hpp"
#include "slr/decoder.hpp"
#include "slr/network.hpp"
#include "slr/preprocess.hpp"
#include "slr/trainer.hpp"

namespace slr {

/// The single JSON config document. Every section and field is optional:
///   {"model": {...}, "training": {...}, "pipeline": {...},
///    "augment": {..., "copies": N}, "decoder": {...}}
/// model.class_count is ignored by training, which derives it from the data.
struct AppConfig {
    ModelConfig model = ModelConfig::defaults();
    TrainingConfig training;
    PipelineConfig pipeline;
    AugmentPlan augment;
    DecoderConfig decoder;

    nlohmann::json to_json() const;
    static AppConfig from_json(const nlohmann::json& j);
    static AppConfig load(const std::filesystem::path& path);
};

nlohmann::json augment_to_json(const AugmentPlan& plan);
AugmentPlan augment_from_json(const nlohmann::json& j);

}  // namespace slr
