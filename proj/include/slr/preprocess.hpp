#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slr/landmarks.hpp"

namespace slr {

enum class Interpolation { Linear, Nearest };

inline constexpr std::int64_t kDefaultTargetFps = 5;

/// Shared conditioning knobs for training, evaluation and live sessions.
struct PipelineConfig {
    Fps target_fps{kDefaultTargetFps};
    std::size_t window = 3;
    std::size_t stride = 1;
    Interpolation interpolation = Interpolation::Linear;
    double min_present_ratio = 0.0;

    void validate() const;
};

/// W >= 2 consecutive frames at a common fps.
struct LandmarkWindow {
    std::vector<FrameRecord> frames;
    std::string video_id;
    std::size_t start = 0;

    std::size_t size() const { return frames.size(); }
    /// Training label: sign_id of the last frame.
    int label() const { return frames.empty() ? kNoSign : frames.back().sign_id; }
};

struct AugmentConfig {
    double jitter_sigma = 0.0;
    int time_offset_max = 0;
    bool mirror = false;
    double speed_min = 1.0;
    double speed_max = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Interpolates two frames at fraction `frac` in [0,1). frac == 0 returns `a`
/// unchanged. Labels follow the nearer frame (ties go to `a`).
FrameRecord interpolate_frames(const FrameRecord& a, const FrameRecord& b, double frac,
                               Interpolation mode = Interpolation::Linear);

/// Incremental resampler shared by the offline path and live sessions.
///
/// With a source fps, frame i sits at t = i / source_fps and positions are
/// computed in exact rational arithmetic. Without one, per-frame timestamps
/// (seconds) drive the output grid t0 + k / target_fps.
class StreamResampler {
public:
    explicit StreamResampler(Fps target, Interpolation mode = Interpolation::Linear);

    void set_source_fps(std::optional<Fps> source) { source_ = source; }
    const std::optional<Fps>& source_fps() const { return source_; }
    const Fps& target_fps() const { return target_; }

    /// Feeds the next source frame and returns every output frame whose time
    /// is now bracketed. Throws Error on non-increasing timestamps.
    std::vector<FrameRecord> push(const FrameRecord& frame, std::optional<double> timestamp_s = {});

    void reset();

private:
    FrameRecord emit(double frac, bool exact) const;

    Fps target_;
    Interpolation mode_;
    std::optional<Fps> source_;
    std::optional<FrameRecord> prev_;
    std::optional<FrameRecord> cur_;
    double prev_t_ = 0.0;
    double cur_t_ = 0.0;
    double t0_ = 0.0;
    std::int64_t count_ = 0;
    std::int64_t next_k_ = 0;
};

VideoSequence resample(const VideoSequence& seq, Fps target_fps, Interpolation mode = Interpolation::Linear);

/// Windows [i, i+W) for i = 0, stride, ... while i + W <= N.
std::vector<LandmarkWindow> make_windows(const VideoSequence& seq, std::size_t window, std::size_t stride = 1);

/// Carry-forward fill of absent blocks, bounded to the window.
LandmarkWindow fill_missing(LandmarkWindow win);

/// x -> 1 - x on every block and left/right hand swap.
FrameRecord mirror(const FrameRecord& frame);
VideoSequence mirror(const VideoSequence& seq);

/// Speed perturbation, start-offset crop, Gaussian jitter, optional mirror,
/// in that order. Pure function of (seq, cfg).
VideoSequence augment(const VideoSequence& seq, const AugmentConfig& cfg);

struct FilterResult {
    std::vector<VideoSequence> videos;
    std::size_t dropped = 0;
};

/// Fraction of frames with at least one hand present.
double hand_present_ratio(const VideoSequence& seq);

/// Drops videos whose hand-present ratio is below `min_present_ratio`.
FilterResult filter_dataset(std::vector<VideoSequence> videos, double min_present_ratio);

}  // namespace slr
