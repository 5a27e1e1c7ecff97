#include "slr/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "slr/pipeline.hpp"

namespace slr {

namespace {

constexpr double kHandSize = 0.045;  // wrist to middle MCP, image units
const Vec3 kMidShoulder{0.5, 0.5, 0.0};
const Vec3 kRestOffset{-0.06, 0.32, 0.0};  // dominant hand resting below the chest

Vec3 add(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 scale(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return add(a, scale(add(b, scale(a, -1.0)), t)); }

struct Mat3 {
    std::array<double, 9> m{};
    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
};

Mat3 mul(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a.m[3 * i + k] * b.m[3 * k + j];
            r.m[3 * i + j] = s;
        }
    }
    return r;
}

Mat3 rotation(const Vec3& ypr) {
    const double cy = std::cos(ypr.x), sy = std::sin(ypr.x);
    const double cp = std::cos(ypr.y), sp = std::sin(ypr.y);
    const double cr = std::cos(ypr.z), sr = std::sin(ypr.z);
    const Mat3 yaw{{cy, 0, sy, 0, 1, 0, -sy, 0, cy}};
    const Mat3 pitch{{1, 0, 0, 0, cp, -sp, 0, sp, cp}};
    const Mat3 roll{{cr, -sr, 0, sr, cr, 0, 0, 0, 1}};
    return mul(roll, mul(pitch, yaw));
}

// Local hand frame: wrist at the origin, fingers along +y, back of the hand +z.
constexpr std::array<Vec3, 5> kFingerBase = {{
    {-0.35, 0.25, 0.0},  // thumb CMC
    {-0.25, 0.95, 0.0},  // index MCP
    {0.0, 1.0, 0.0},     // middle MCP
    {0.22, 0.93, 0.0},   // ring MCP
    {0.42, 0.82, 0.0},   // pinky MCP
}};
constexpr std::array<std::array<double, 3>, 5> kSegmentLength = {{
    {0.40, 0.32, 0.28},
    {0.45, 0.28, 0.22},
    {0.50, 0.32, 0.24},
    {0.46, 0.30, 0.22},
    {0.35, 0.22, 0.20},
}};

HandLandmarks local_hand(const std::array<double, 5>& curl, const std::array<double, 5>& spread) {
    HandLandmarks h;
    h.points[0] = {0, 0, 0};
    for (int f = 0; f < 5; ++f) {
        const int base = 1 + 4 * f;
        h.points[base] = kFingerBase[f];
        const double base_angle = (f == 0 ? -0.8 : 0.0) + spread[f];
        const Vec3 d0{std::sin(base_angle), std::cos(base_angle), 0.0};
        Vec3 p = kFingerBase[f];
        for (int j = 0; j < 3; ++j) {
            const double phi = curl[f] * (j + 1);
            const Vec3 dir = add(scale(d0, std::cos(phi)), Vec3{0, 0, -std::sin(phi)});
            p = add(p, scale(dir, kSegmentLength[f][j]));
            h.points[base + 1 + j] = p;
        }
    }
    return h;
}

Vec3 wrist_path(const SignTemplate& t, double s, bool left) {
    const double len = std::hypot(t.displacement.x, t.displacement.y);
    const Vec3 perp = len > 1e-9 ? Vec3{-t.displacement.y / len, t.displacement.x / len, 0.0} : Vec3{};
    Vec3 p = add(add(t.start, scale(t.displacement, s)), scale(perp, t.arc * std::sin(std::numbers::pi * s)));
    if (left) p.x = -p.x;
    return p;
}

HandLandmarks place_hand(const HandLandmarks& local, const Vec3& rot, bool left, const Vec3& wrist,
                         double hand_scale) {
    Vec3 r = rot;
    if (left) {
        r.x = -r.x;
        r.z = -r.z;
    }
    const Mat3 R = rotation(r);
    HandLandmarks out;
    for (int i = 0; i < kHandPoints; ++i) {
        Vec3 v = local.points[i];
        if (left) v.x = -v.x;
        v.y = -v.y;  // image y grows downwards
        out.points[i] = add(wrist, scale(R.apply(v), kHandSize * hand_scale));
    }
    return out;
}

PoseLandmarks base_pose() {
    PoseLandmarks p;
    const std::array<Vec3, kPosePoints> rel = {{
        {0.0, -0.15, -0.05},                                                  // 0 nose
        {0.015, -0.17, -0.04}, {0.025, -0.17, -0.04}, {0.035, -0.17, -0.04},  // 1-3 left eye
        {-0.015, -0.17, -0.04}, {-0.025, -0.17, -0.04}, {-0.035, -0.17, -0.04},
        {0.06, -0.15, 0.0}, {-0.06, -0.15, 0.0},   // ears
        {0.02, -0.12, -0.04}, {-0.02, -0.12, -0.04},  // mouth
        {0.1, 0.0, 0.0}, {-0.1, 0.0, 0.0},          // 11, 12 shoulders
        {0.14, 0.18, 0.0}, {-0.14, 0.18, 0.0},      // elbows
        {0.1, 0.32, 0.0}, {-0.1, 0.32, 0.0},        // wrists
        {0.11, 0.35, 0.0}, {-0.11, 0.35, 0.0},      // pinky
        {0.1, 0.36, 0.0}, {-0.1, 0.36, 0.0},        // index
        {0.09, 0.34, 0.0}, {-0.09, 0.34, 0.0},      // thumb
        {0.07, 0.35, 0.0}, {-0.07, 0.35, 0.0},      // hips
    }};
    for (int i = 0; i < kPosePoints; ++i) p.points[i] = rel[i];
    return p;
}

/// Pose arm landmarks follow the hand wrists (relative coordinates).
void attach_arm(PoseLandmarks& pose, const Vec3& wrist_rel, bool left) {
    const int shoulder = left ? 11 : 12;
    const int elbow = left ? 13 : 14;
    const int wrist = left ? 15 : 16;
    const Vec3 s = pose.points[shoulder];
    pose.points[elbow] = add(lerp(s, wrist_rel, 0.55), Vec3{0.0, 0.06, 0.0});
    pose.points[wrist] = wrist_rel;
    for (int k : {17, 19, 21}) {
        const int idx = k + (left ? 0 : 1);
        pose.points[idx] = add(wrist_rel, Vec3{0.0, -0.02 - 0.005 * (k - 17), 0.0});
    }
}

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

struct SampleVariation {
    SignTemplate t;
    double global_scale = 1.0;
    Vec3 shift{};
    double hand_scale = 1.0;
};

SampleVariation vary(const SignTemplate& base, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SampleVariation v;
    v.t = base;
    for (double& c : v.t.curl) c = std::max(0.0, c + 0.05 * n(rng));
    for (double& s : v.t.spread) s += 0.03 * n(rng);
    v.t.rotation = add(v.t.rotation, Vec3{0.05 * n(rng), 0.05 * n(rng), 0.05 * n(rng)});
    v.t.start = add(v.t.start, Vec3{0.008 * n(rng), 0.008 * n(rng), 0.004 * n(rng)});
    v.t.displacement = scale(v.t.displacement, 1.0 + 0.05 * n(rng));
    v.t.arc *= 1.0 + 0.1 * n(rng);
    v.global_scale = 0.9 + 0.2 * u(rng);
    v.shift = {0.03 * (2 * u(rng) - 1), 0.03 * (2 * u(rng) - 1), 0.0};
    v.hand_scale = 0.92 + 0.16 * u(rng);
    return v;
}

const std::array<double, 5> kRelaxedCurl = {0.25, 0.35, 0.35, 0.4, 0.45};
const std::array<double, 5> kNoSpread = {0, 0, 0, 0, 0};

/// Builds one frame (relative coordinates), then maps to the image.
FrameRecord compose_frame(const SampleVariation& v, const std::optional<HandLandmarks>& right_rel,
                          const std::optional<HandLandmarks>& left_rel, double jitter, double dropout,
                          std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, jitter > 0 ? jitter : 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto to_image = [&](const Vec3& rel) {
        Vec3 p = add(add(kMidShoulder, v.shift), scale(rel, v.global_scale));
        if (jitter > 0) p = add(p, Vec3{noise(rng), noise(rng), noise(rng)});
        return p;
    };
    PoseLandmarks pose_rel = base_pose();
    if (right_rel) attach_arm(pose_rel, right_rel->points[0], false);
    if (left_rel) attach_arm(pose_rel, left_rel->points[0], true);

    FrameRecord f;
    PoseLandmarks pose;
    for (int i = 0; i < kPosePoints; ++i) pose.points[i] = to_image(pose_rel.points[i]);
    f.pose = pose;
    auto map_hand = [&](const std::optional<HandLandmarks>& rel) -> std::optional<HandLandmarks> {
        if (!rel) return std::nullopt;
        const bool lost = dropout > 0 && u(rng) < dropout;
        HandLandmarks h;
        for (int i = 0; i < kHandPoints; ++i) h.points[i] = to_image(rel->points[i]);
        if (lost) return std::nullopt;
        return h;
    };
    f.right = map_hand(right_rel);
    f.left = map_hand(left_rel);
    return f;
}

}  // namespace

SignTemplate random_template(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    SignTemplate t;
    for (double& c : t.curl) c = range(0.0, 1.2);
    for (double& s : t.spread) s = range(-0.25, 0.25);
    t.rotation = {range(-0.8, 0.8), range(-0.6, 0.6), range(-1.2, 1.2)};
    t.start = {range(-0.15, 0.1), range(-0.15, 0.2), range(-0.05, 0.05)};
    const double mag = range(0.04, 0.15);
    const double ang = range(0.0, 2.0 * std::numbers::pi);
    t.displacement = {mag * std::cos(ang), mag * std::sin(ang), range(-0.02, 0.02)};
    t.arc = range(-0.04, 0.04);
    t.two_handed = u(rng) < 0.3;
    return t;
}

std::vector<SignTemplate> synth_templates(const SynthConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::vector<SignTemplate> out;
    for (int c = 0; c < cfg.class_count; ++c) out.push_back(random_template(rng));
    return out;
}

HandLandmarks render_hand(const SignTemplate& t, double s, bool left, double hand_scale) {
    return place_hand(local_hand(t.curl, t.spread), t.rotation, left, wrist_path(t, s, left), hand_scale);
}

namespace {

/// Relative-coordinate hand frames for one sign, including Label-A lead-in
/// and lead-out.
struct RelativeFrame {
    std::optional<HandLandmarks> right;
    std::optional<HandLandmarks> left;
    int sign_id = kNoSign;
};

std::vector<RelativeFrame> sign_frames(const SampleVariation& v, int sign_id, const SynthConfig& cfg, int lead,
                                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * u(rng);
    const int n = std::max(2, static_cast<int>(std::lround(cfg.duration_s * speed * cfg.fps.value())) + 1);
    const SignTemplate& t = v.t;
    const HandLandmarks relaxed_local = local_hand(kRelaxedCurl, kNoSpread);
    const HandLandmarks right_rest = place_hand(relaxed_local, {}, false, kRestOffset, v.hand_scale);
    const HandLandmarks left_rest =
        place_hand(relaxed_local, {}, true, Vec3{-kRestOffset.x, kRestOffset.y, kRestOffset.z}, v.hand_scale);

    auto sign_hand = [&](double s, bool left) { return render_hand(t, s, left, v.hand_scale); };
    auto other_hand = [&](double s) -> HandLandmarks {
        if (t.two_handed) return sign_hand(s, true);
        return left_rest;
    };
    auto blend = [](const HandLandmarks& a, const HandLandmarks& b, double w) {
        HandLandmarks h;
        for (int i = 0; i < kHandPoints; ++i) h.points[i] = lerp(a.points[i], b.points[i], w);
        return h;
    };

    std::vector<RelativeFrame> frames;
    for (int i = 0; i < lead; ++i) {
        const double w = smoothstep((i + 1.0) / (lead + 1.0));
        RelativeFrame f;
        f.right = blend(right_rest, sign_hand(0.0, false), w);
        f.left = t.two_handed ? blend(left_rest, sign_hand(0.0, true), w) : other_hand(0.0);
        frames.push_back(f);
    }
    for (int i = 0; i < n; ++i) {
        const double s = smoothstep(static_cast<double>(i) / (n - 1));
        frames.push_back({sign_hand(s, false), other_hand(s), sign_id});
    }
    for (int i = 0; i < lead; ++i) {
        const double w = smoothstep((i + 1.0) / (lead + 1.0));
        RelativeFrame f;
        f.right = blend(sign_hand(1.0, false), right_rest, w);
        f.left = t.two_handed ? blend(sign_hand(1.0, true), left_rest, w) : other_hand(1.0);
        frames.push_back(f);
    }
    return frames;
}

}  // namespace

VideoSequence render_sample(const SignTemplate& t, int sign_id, const std::string& video_id, const SynthConfig& cfg,
                            std::mt19937_64& rng) {
    const SampleVariation v = vary(t, rng);
    VideoSequence video;
    video.video_id = video_id;
    video.fps = cfg.fps;
    for (const RelativeFrame& rf : sign_frames(v, sign_id, cfg, cfg.label_a_frames, rng)) {
        FrameRecord f = compose_frame(v, rf.right, rf.left, cfg.jitter, cfg.dropout, rng);
        f.video_id = video_id;
        f.sign_id = rf.sign_id;
        f.fps = cfg.fps;
        video.frames.push_back(std::move(f));
    }
    video.sign_id = VideoSequence::dominant_sign(video.frames);
    return video;
}

Dataset gen_synthetic(const SynthConfig& cfg) {
    if (cfg.class_count < 2) throw Error("class_count must be >= 2");
    if (cfg.samples_per_class < 1) throw Error("samples_per_class must be >= 1");
    const std::vector<SignTemplate> templates = synth_templates(cfg);
    Dataset ds;
    for (int c = 0; c < cfg.class_count; ++c) {
        SignClass s;
        s.sign_id = c + 1;
        char gloss[16];
        std::snprintf(gloss, sizeof gloss, "SIGN%02d", c + 1);
        s.gloss = gloss;
        s.english = "synthetic sign " + std::to_string(c + 1);
        s.handedness = templates[c].two_handed ? Handedness::Two : Handedness::One;
        s.symmetric = templates[c].two_handed;
        s.handshape_tags = {"synthetic"};
        ds.registry.add(std::move(s));
    }
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int k = 0; k < cfg.samples_per_class; ++k) {
        for (int c = 0; c < cfg.class_count; ++c) {
            char id[32];
            std::snprintf(id, sizeof id, "s%02d_v%04d", c + 1, k);
            ds.videos.push_back(render_sample(templates[c], c + 1, id, cfg, rng));
        }
    }
    return ds;
}

VideoSequence render_stream(const std::vector<SignTemplate>& templates, const std::vector<int>& sign_ids,
                            const std::string& video_id, const SynthConfig& cfg, int gap_frames,
                            std::mt19937_64& rng) {
    VideoSequence video;
    video.video_id = video_id;
    video.fps = cfg.fps;
    for (int id : sign_ids) {
        if (id < 1 || static_cast<std::size_t>(id) > templates.size()) throw Error("sign id without template");
        const SampleVariation v = vary(templates[static_cast<std::size_t>(id - 1)], rng);
        for (const RelativeFrame& rf : sign_frames(v, id, cfg, gap_frames / 2 + 1, rng)) {
            FrameRecord f = compose_frame(v, rf.right, rf.left, cfg.jitter, cfg.dropout, rng);
            f.video_id = video_id;
            f.sign_id = rf.sign_id;
            f.fps = cfg.fps;
            video.frames.push_back(std::move(f));
        }
    }
    video.sign_id = VideoSequence::dominant_sign(video.frames);
    return video;
}

LandmarkWindow synthetic_window(std::size_t window, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const SignTemplate t = random_template(rng);
    SynthConfig cfg;
    cfg.dropout = 0.0;
    cfg.duration_s = 0.4 * static_cast<double>(window);
    const VideoSequence v = render_sample(t, 1, "bench", cfg, rng);
    PipelineConfig p;
    p.window = window;
    std::vector<LandmarkWindow> w = prepare_windows(v, p, 1);
    if (w.empty()) throw Error("synthetic window too short");
    return w.front();
}

}  // namespace slr
