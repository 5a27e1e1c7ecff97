#include "slr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace slr {

namespace {

template <int N>
std::optional<LandmarkBlock<N>> lerp_block(const std::optional<LandmarkBlock<N>>& a,
                                           const std::optional<LandmarkBlock<N>>& b, double t) {
    if (!a || !b) return std::nullopt;
    LandmarkBlock<N> out;
    for (int i = 0; i < N; ++i) {
        const Vec3& p = a->points[i];
        const Vec3& q = b->points[i];
        out.points[i] = {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y), p.z + t * (q.z - p.z)};
    }
    return out;
}

template <int N>
void mirror_block(std::optional<LandmarkBlock<N>>& block) {
    if (!block) return;
    for (Vec3& p : block->points) p.x = 1.0 - p.x;
}

template <int N>
void jitter_block(std::optional<LandmarkBlock<N>>& block, std::normal_distribution<double>& noise,
                  std::mt19937_64& rng) {
    if (!block) return;
    for (Vec3& p : block->points) {
        p.x += noise(rng);
        p.y += noise(rng);
        p.z += noise(rng);
    }
}

template <int N>
void carry_forward(std::optional<LandmarkBlock<N>>& slot, std::optional<LandmarkBlock<N>>& last) {
    if (slot) {
        last = slot;
    } else if (last) {
        slot = last;
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (window < 2) throw Error("window length must be >= 2");
    if (stride < 1) throw Error("stride must be >= 1");
    if (!(min_present_ratio >= 0.0 && min_present_ratio <= 1.0)) {
        throw Error("min_present_ratio must be in [0, 1]");
    }
}

void AugmentConfig::validate() const {
    if (!(jitter_sigma >= 0.0)) throw Error("jitter_sigma must be >= 0");
    if (time_offset_max < 0) throw Error("time_offset_max must be >= 0");
    if (!(speed_min > 0.0) || !(speed_min <= speed_max)) throw Error("speed range must satisfy 0 < min <= max");
}

FrameRecord interpolate_frames(const FrameRecord& a, const FrameRecord& b, double frac, Interpolation mode) {
    if (frac == 0.0) return a;
    if (mode == Interpolation::Nearest) return frac <= 0.5 ? a : b;
    FrameRecord out;
    out.left = lerp_block(a.left, b.left, frac);
    out.right = lerp_block(a.right, b.right, frac);
    out.pose = lerp_block(a.pose, b.pose, frac);
    out.video_id = a.video_id;
    out.sign_id = frac <= 0.5 ? a.sign_id : b.sign_id;
    out.fps = a.fps;
    return out;
}

StreamResampler::StreamResampler(Fps target, Interpolation mode) : target_(target), mode_(mode) {}

void StreamResampler::reset() {
    prev_.reset();
    cur_.reset();
    prev_t_ = cur_t_ = t0_ = 0.0;
    count_ = 0;
    next_k_ = 0;
}

FrameRecord StreamResampler::emit(double frac, bool exact) const {
    FrameRecord out = exact ? *cur_ : interpolate_frames(*prev_, *cur_, frac, mode_);
    out.fps = target_;
    return out;
}

std::vector<FrameRecord> StreamResampler::push(const FrameRecord& frame, std::optional<double> timestamp_s) {
    std::vector<FrameRecord> out;
    if (source_) {
        prev_ = std::move(cur_);
        cur_ = frame;
        const std::int64_t i = count_++;
        // Output k sits at source position k * src / tgt = num / den.
        const __int128 den = static_cast<__int128>(source_->den()) * target_.num();
        const __int128 step = static_cast<__int128>(source_->num()) * target_.den();
        const __int128 limit = static_cast<__int128>(i) * den;
        while (true) {
            const __int128 num = static_cast<__int128>(next_k_) * step;
            if (num > limit) break;
            const __int128 idx = num / den;
            const __int128 rem = num % den;
            if (rem == 0) {
                // idx == i here; earlier knots were emitted on their own push.
                out.push_back(emit(0.0, true));
            } else {
                out.push_back(emit(static_cast<double>(rem) / static_cast<double>(den), false));
            }
            (void)idx;
            ++next_k_;
        }
        return out;
    }

    if (!timestamp_s) throw Error("timestamp required when source fps is unknown");
    const double t = *timestamp_s;
    if (count_ > 0 && !(t > cur_t_)) throw Error("non-increasing frame timestamp");
    prev_ = std::move(cur_);
    prev_t_ = cur_t_;
    cur_ = frame;
    cur_t_ = t;
    if (count_ == 0) t0_ = t;
    ++count_;
    const double period = static_cast<double>(target_.den()) / static_cast<double>(target_.num());
    while (true) {
        const double tk = t0_ + static_cast<double>(next_k_) * period;
        if (tk > cur_t_) break;
        if (tk == cur_t_) {
            out.push_back(emit(0.0, true));
        } else {
            out.push_back(emit((tk - prev_t_) / (cur_t_ - prev_t_), false));
        }
        ++next_k_;
    }
    return out;
}

VideoSequence resample(const VideoSequence& seq, Fps target_fps, Interpolation mode) {
    if (seq.frames.empty()) throw Error("cannot resample an empty video");
    StreamResampler rs(target_fps, mode);
    rs.set_source_fps(seq.fps);
    VideoSequence out;
    out.video_id = seq.video_id;
    out.sign_id = seq.sign_id;
    out.fps = target_fps;
    for (const FrameRecord& f : seq.frames) {
        for (FrameRecord& r : rs.push(f)) out.frames.push_back(std::move(r));
    }
    return out;
}

std::vector<LandmarkWindow> make_windows(const VideoSequence& seq, std::size_t window, std::size_t stride) {
    if (window < 2) throw Error("window length must be >= 2");
    if (stride < 1) throw Error("stride must be >= 1");
    std::vector<LandmarkWindow> out;
    for (std::size_t i = 0; i + window <= seq.frames.size(); i += stride) {
        LandmarkWindow w;
        w.video_id = seq.video_id;
        w.start = i;
        w.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(i),
                        seq.frames.begin() + static_cast<std::ptrdiff_t>(i + window));
        out.push_back(std::move(w));
    }
    return out;
}

LandmarkWindow fill_missing(LandmarkWindow win) {
    std::optional<HandLandmarks> left;
    std::optional<HandLandmarks> right;
    std::optional<PoseLandmarks> pose;
    for (FrameRecord& f : win.frames) {
        carry_forward(f.left, left);
        carry_forward(f.right, right);
        carry_forward(f.pose, pose);
    }
    return win;
}

FrameRecord mirror(const FrameRecord& frame) {
    FrameRecord out = frame;
    std::swap(out.left, out.right);
    mirror_block(out.left);
    mirror_block(out.right);
    mirror_block(out.pose);
    return out;
}

VideoSequence mirror(const VideoSequence& seq) {
    VideoSequence out = seq;
    for (FrameRecord& f : out.frames) f = mirror(f);
    return out;
}

VideoSequence augment(const VideoSequence& seq, const AugmentConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    VideoSequence out = seq;
    if (seq.frames.empty()) return out;

    // Speed perturbation: sample the source at positions j * factor.
    double factor = cfg.speed_min;
    if (cfg.speed_max > cfg.speed_min) {
        factor = std::uniform_real_distribution<double>(cfg.speed_min, cfg.speed_max)(rng);
    }
    if (factor != 1.0) {
        const std::size_t n = seq.frames.size();
        const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) / factor)) + 1;
        out.frames.clear();
        for (std::size_t j = 0; j < count; ++j) {
            const double pos = static_cast<double>(j) * factor;
            const auto idx = std::min(static_cast<std::size_t>(pos), n - 1);
            const double frac = pos - static_cast<double>(idx);
            if (idx + 1 >= n || frac == 0.0) {
                out.frames.push_back(seq.frames[idx]);
            } else {
                out.frames.push_back(interpolate_frames(seq.frames[idx], seq.frames[idx + 1], frac));
            }
        }
    }

    if (cfg.time_offset_max > 0 && out.frames.size() > 2) {
        const int max_crop = std::min<int>(cfg.time_offset_max, static_cast<int>(out.frames.size()) - 2);
        const int crop = std::uniform_int_distribution<int>(0, max_crop)(rng);
        out.frames.erase(out.frames.begin(), out.frames.begin() + crop);
    }

    if (cfg.jitter_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.jitter_sigma);
        for (FrameRecord& f : out.frames) {
            jitter_block(f.left, noise, rng);
            jitter_block(f.right, noise, rng);
            jitter_block(f.pose, noise, rng);
        }
    }

    if (cfg.mirror) out = mirror(out);
    return out;
}

double hand_present_ratio(const VideoSequence& seq) {
    if (seq.frames.empty()) return 0.0;
    const auto present = std::count_if(seq.frames.begin(), seq.frames.end(),
                                       [](const FrameRecord& f) { return f.any_hand(); });
    return static_cast<double>(present) / static_cast<double>(seq.frames.size());
}

FilterResult filter_dataset(std::vector<VideoSequence> videos, double min_present_ratio) {
    if (!(min_present_ratio >= 0.0 && min_present_ratio <= 1.0)) {
        throw Error("min_present_ratio must be in [0, 1]");
    }
    FilterResult result;
    for (VideoSequence& v : videos) {
        if (hand_present_ratio(v) < min_present_ratio) {
            ++result.dropped;
        } else {
            result.videos.push_back(std::move(v));
        }
    }
    return result;
}

}  // namespace slr
