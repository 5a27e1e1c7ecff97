#pragma once

// A small model trained on synthetic signs, and continuous recordings of
// those signs for decoding tests.

#include <random>

#include "slr/synthetic.hpp"
#include "slr/trainer.hpp"

namespace slr::test {

inline SynthConfig fixture_synth() {
    SynthConfig cfg;
    cfg.class_count = 4;
    cfg.samples_per_class = 12;
    cfg.label_a_frames = 4;
    cfg.seed = 21;
    return cfg;
}

inline const Model& fixture_model() {
    static const Model model = [] {
        const Dataset data = gen_synthetic(fixture_synth());
        TrainingConfig tc;
        tc.learning_rate = 1e-3;
        tc.epochs = 25;
        tc.batch_size = 32;
        tc.seed = 3;
        return train_model(data, PipelineConfig{}, AugmentPlan{}, ModelConfig::uniform(5, {32}, {64}, 0.0, 4), tc);
    }();
    return model;
}

/// A recording of `signs` random signs back to back.
inline VideoSequence fixture_stream(std::uint64_t seed, int signs = 4, const std::string& id = "stream") {
    const SynthConfig cfg = fixture_synth();
    const auto templates = synth_templates(cfg);
    std::mt19937_64 rng(seed);
    std::vector<int> ids;
    for (int i = 0; i < signs; ++i) ids.push_back(1 + static_cast<int>(rng() % templates.size()));
    return render_stream(templates, ids, id, cfg, 8, rng);
}

}  // namespace slr::test
