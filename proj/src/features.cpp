#include "slr/features.hpp"

#include <algorithm>
#include <cmath>

namespace slr {

namespace {

constexpr double kDegenerate = 1e-6;
constexpr double kTinyNorm = 1e-12;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Unit vector, or nullopt when the input is (numerically) zero.
std::optional<Vec3> unit(const Vec3& v) {
    const double n = norm(v);
    if (n < kTinyNorm) return std::nullopt;
    return Vec3{v.x / n, v.y / n, v.z / n};
}

template <int N>
void normalise_points(const std::optional<LandmarkBlock<N>>& block, const BodyFrame& bf, std::span<double> out) {
    if (out.size() != 3 * static_cast<std::size_t>(N)) throw Error("location output has wrong size");
    if (!block) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    for (int i = 0; i < N; ++i) {
        const Vec3& p = block->points[i];
        out[3 * i] = (p.x - bf.origin.x) / bf.scale;
        out[3 * i + 1] = (p.y - bf.origin.y) / bf.scale;
        out[3 * i + 2] = (p.z - bf.origin.z) / bf.scale;
    }
}

void palm_block(const std::optional<HandLandmarks>& hand, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (!hand) return;
    const HandLandmarks& h = *hand;
    const Vec3& wrist = h[kWrist];
    const Vec3& index = h[kIndexMcp];
    const Vec3& pinky = h[kPinkyMcp];
    const std::optional<Vec3> lateral = unit(sub(index, pinky));
    const std::optional<Vec3> normal = unit(cross(sub(index, wrist), sub(pinky, wrist)));
    std::optional<Vec3> distal;
    if (lateral && normal) distal = cross(*normal, *lateral);

    for (std::size_t b = 0; b < kHandBones.size(); ++b) {
        const auto [from, to] = kHandBones[b];
        const std::optional<Vec3> bone = unit(sub(h[to], h[from]));
        if (!bone) continue;
        double* row = out.data() + 5 * b;
        if (normal) row[0] = dot(*bone, *normal);
        if (lateral) row[1] = dot(*bone, *lateral);
        if (distal) row[2] = dot(*bone, *distal);
        row[3] = bone->y;
        row[4] = bone->z;
    }
    // Rounding can push a cosine of unit vectors a hair past 1.
    for (double& v : out) v = std::clamp(v, -1.0, 1.0);
}

void hand_displacement(const std::optional<HandLandmarks>& first, const std::optional<HandLandmarks>& last,
                       const BodyFrame& bf_first, const BodyFrame& bf_last, std::span<double> out) {
    if (!first || !last) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    for (int i = 0; i < kHandPoints; ++i) {
        const Vec3& a = (*first)[i];
        const Vec3& b = (*last)[i];
        out[3 * i] = (b.x - bf_last.origin.x) / bf_last.scale - (a.x - bf_first.origin.x) / bf_first.scale;
        out[3 * i + 1] = (b.y - bf_last.origin.y) / bf_last.scale - (a.y - bf_first.origin.y) / bf_first.scale;
        out[3 * i + 2] = (b.z - bf_last.origin.z) / bf_last.scale - (a.z - bf_first.origin.z) / bf_first.scale;
    }
}

}  // namespace

std::string_view segment_name(Segment s) {
    switch (s) {
        case Segment::LocationLeft: return "loc_l";
        case Segment::LocationRight: return "loc_r";
        case Segment::LocationPose: return "loc_pose";
        case Segment::HandshapeLeft: return "handshape_l";
        case Segment::HandshapeRight: return "handshape_r";
        case Segment::PalmOrientation: return "palm_orient";
        case Segment::Movement: return "movement";
    }
    return "?";
}

BodyFrame body_frame(const PoseLandmarks& pose) {
    const Vec3& l = pose[kLeftShoulder];
    const Vec3& r = pose[kRightShoulder];
    BodyFrame bf;
    bf.origin = {0.5 * (l.x + r.x), 0.5 * (l.y + r.y), 0.5 * (l.z + r.z)};
    bf.scale = norm(sub(l, r));
    if (bf.scale < kDegenerate) {
        bf.scale = 1.0;
        bf.degenerate = true;
    }
    return bf;
}

BodyFrame body_frame(const std::optional<PoseLandmarks>& pose) {
    return pose ? body_frame(*pose) : BodyFrame::identity();
}

void location_hand(const std::optional<HandLandmarks>& hand, const BodyFrame& bf, std::span<double> out) {
    normalise_points(hand, bf, out);
}

void location_pose(const std::optional<PoseLandmarks>& pose, const BodyFrame& bf, std::span<double> out) {
    normalise_points(pose, bf, out);
}

void handshape(const std::optional<HandLandmarks>& hand, std::span<double> out) {
    if (out.size() != 210) throw Error("handshape output has wrong size");
    std::fill(out.begin(), out.end(), 0.0);
    if (!hand) return;
    const double ref = norm(sub((*hand)[kMiddleMcp], (*hand)[kWrist]));
    if (ref < kDegenerate) return;
    std::size_t k = 0;
    for (int i = 0; i < kHandPoints; ++i) {
        for (int j = i + 1; j < kHandPoints; ++j) {
            out[k++] = norm(sub((*hand)[i], (*hand)[j])) / ref;
        }
    }
}

void palm_orientation(const std::optional<HandLandmarks>& left, const std::optional<HandLandmarks>& right,
                      std::span<double> out) {
    if (out.size() != 200) throw Error("palm orientation output has wrong size");
    palm_block(left, out.subspan(0, 100));
    palm_block(right, out.subspan(100, 100));
}

void movement(const LandmarkWindow& win, const BodyFrame& bf_first, const BodyFrame& bf_last, std::span<double> out) {
    if (win.frames.size() < 2) throw Error("movement needs a window of at least 2 frames");
    if (out.size() != 126) throw Error("movement output has wrong size");
    const FrameRecord& first = win.frames.front();
    const FrameRecord& last = win.frames.back();
    hand_displacement(first.left, last.left, bf_first, bf_last, out.subspan(0, 63));
    hand_displacement(first.right, last.right, bf_first, bf_last, out.subspan(63, 63));
}

std::array<double, 63> location_hand(const std::optional<HandLandmarks>& hand, const BodyFrame& bf) {
    std::array<double, 63> out{};
    location_hand(hand, bf, out);
    return out;
}

std::array<double, 75> location_pose(const std::optional<PoseLandmarks>& pose, const BodyFrame& bf) {
    std::array<double, 75> out{};
    location_pose(pose, bf, out);
    return out;
}

std::array<double, 210> handshape(const std::optional<HandLandmarks>& hand) {
    std::array<double, 210> out{};
    handshape(hand, out);
    return out;
}

std::array<double, 200> palm_orientation(const std::optional<HandLandmarks>& left,
                                         const std::optional<HandLandmarks>& right) {
    std::array<double, 200> out{};
    palm_orientation(left, right, out);
    return out;
}

std::array<double, 126> movement(const LandmarkWindow& win, const BodyFrame& bf_first, const BodyFrame& bf_last) {
    std::array<double, 126> out{};
    movement(win, bf_first, bf_last, out);
    return out;
}

FeatureVector encode_window(const LandmarkWindow& win) {
    if (win.frames.size() < 2) throw Error("movement needs a window of at least 2 frames");
    const FrameRecord& first = win.frames.front();
    const FrameRecord& last = win.frames.back();
    const BodyFrame bf_first = body_frame(first.pose);
    const BodyFrame bf_last = body_frame(last.pose);

    FeatureVector fv;
    location_hand(last.left, bf_last, fv.segment(Segment::LocationLeft));
    location_hand(last.right, bf_last, fv.segment(Segment::LocationRight));
    location_pose(last.pose, bf_last, fv.segment(Segment::LocationPose));
    handshape(last.left, fv.segment(Segment::HandshapeLeft));
    handshape(last.right, fv.segment(Segment::HandshapeRight));
    palm_orientation(last.left, last.right, fv.segment(Segment::PalmOrientation));
    movement(win, bf_first, bf_last, fv.segment(Segment::Movement));
    return fv;
}

}  // namespace slr
