#pragma once

#include <cmath>
#include <random>
#include <string>

#include "slr/landmarks.hpp"
#include "slr/preprocess.hpp"

namespace slr::test {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <int N>
LandmarkBlock<N> random_block(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    LandmarkBlock<N> b;
    for (Vec3& p : b.points) p = {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
    return b;
}

inline HandLandmarks random_hand(std::mt19937_64& rng) { return random_block<kHandPoints>(rng); }
inline PoseLandmarks random_pose(std::mt19937_64& rng) { return random_block<kPosePoints>(rng); }

/// Each block present with probability `p_present`.
inline FrameRecord random_frame(std::mt19937_64& rng, double p_present = 0.8, int sign_id = 1,
                                Fps fps = Fps(30), const std::string& video_id = "v") {
    FrameRecord f;
    if (uniform(rng) < p_present) f.left = random_hand(rng);
    if (uniform(rng) < p_present) f.right = random_hand(rng);
    if (uniform(rng) < p_present) f.pose = random_pose(rng);
    f.sign_id = sign_id;
    f.fps = fps;
    f.video_id = video_id;
    return f;
}

inline VideoSequence random_video(std::mt19937_64& rng, std::size_t frames, Fps fps = Fps(30), int sign_id = 1,
                                  const std::string& video_id = "v", double p_present = 1.0) {
    VideoSequence v;
    v.video_id = video_id;
    v.fps = fps;
    v.sign_id = sign_id;
    for (std::size_t i = 0; i < frames; ++i) v.frames.push_back(random_frame(rng, p_present, sign_id, fps, video_id));
    return v;
}

inline LandmarkWindow random_window(std::mt19937_64& rng, std::size_t w = 3, double p_present = 1.0) {
    LandmarkWindow win;
    win.video_id = "w";
    for (std::size_t i = 0; i < w; ++i) win.frames.push_back(random_frame(rng, p_present));
    return win;
}

/// Uniformly scaled rotation (from a random unit quaternion) plus translation.
struct Rigid {
    double r[9];
    Vec3 t;
    double s = 1.0;

    Vec3 apply(const Vec3& p) const {
        return {s * (r[0] * p.x + r[1] * p.y + r[2] * p.z) + t.x, s * (r[3] * p.x + r[4] * p.y + r[5] * p.z) + t.y,
                s * (r[6] * p.x + r[7] * p.y + r[8] * p.z) + t.z};
    }
    template <int N>
    LandmarkBlock<N> apply(const LandmarkBlock<N>& b) const {
        LandmarkBlock<N> out;
        for (int i = 0; i < N; ++i) out.points[i] = apply(b.points[i]);
        return out;
    }
};

inline Rigid random_rigid(std::mt19937_64& rng, double scale_lo = 0.2, double scale_hi = 5.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    double q[4] = {n(rng), n(rng), n(rng), n(rng)};
    const double len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (double& c : q) c /= len;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Rigid m{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w), 2 * (x * y + z * w),
             1 - 2 * (x * x + z * z), 2 * (y * z - x * w), 2 * (x * z - y * w), 2 * (y * z + x * w),
             1 - 2 * (x * x + y * y)},
            {uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)},
            uniform(rng, scale_lo, scale_hi)};
    return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

}  // namespace slr::test
