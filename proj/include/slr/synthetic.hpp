#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "slr/preprocess.hpp"
#include "slr/record_io.hpp"

namespace slr {

/// Knobs of the synthetic signer. Coordinates are image-normalised with the
/// shoulders 0.2 apart around (0.5, 0.5).
struct SynthConfig {
    int class_count = 20;
    int samples_per_class = 60;
    Fps fps{30};
    std::uint64_t seed = 0;
    double duration_s = 1.2;
    double speed_min = 0.85;
    double speed_max = 1.2;
    double jitter = 0.002;
    /// Per-frame probability that a hand block is lost.
    double dropout = 0.05;
    /// Label-A (non-sign) frames before and after each sign.
    int label_a_frames = 0;
};

/// What distinguishes one synthetic sign from another.
struct SignTemplate {
    std::array<double, 5> curl{};    // per finger, radians per joint
    std::array<double, 5> spread{};  // per finger, radians
    Vec3 rotation{};                 // palm yaw/pitch/roll, radians
    Vec3 start{};                    // dominant-hand wrist start, relative to mid-shoulder
    Vec3 displacement{};             // wrist travel over the sign
    double arc = 0.0;                // sideways bulge of the path
    bool two_handed = false;
};

SignTemplate random_template(std::mt19937_64& rng);

/// Class templates for `cfg`, deterministic in cfg.seed.
std::vector<SignTemplate> synth_templates(const SynthConfig& cfg);

/// 21 hand landmarks for a template at path progress `s` in [0, 1].
HandLandmarks render_hand(const SignTemplate& t, double s, bool left, double scale = 1.0);

/// One sample video of a sign with per-sample variation drawn from `rng`.
VideoSequence render_sample(const SignTemplate& t, int sign_id, const std::string& video_id, const SynthConfig& cfg,
                            std::mt19937_64& rng);

/// samples_per_class videos per class, sign ids 1..class_count, glosses
/// SIGN01.. in the registry.
Dataset gen_synthetic(const SynthConfig& cfg);

/// A continuous recording: the given signs back to back, separated by
/// `gap_frames` Label-A frames. Frames carry the sign ids they belong to.
VideoSequence render_stream(const std::vector<SignTemplate>& templates, const std::vector<int>& sign_ids,
                            const std::string& video_id, const SynthConfig& cfg, int gap_frames,
                            std::mt19937_64& rng);

/// A window at the default pipeline settings, for latency measurements.
LandmarkWindow synthetic_window(std::size_t window = 3, std::uint64_t seed = 1);

}  // namespace slr
