#include <cmath>
#include <random>

#include "doctest.h"
#include "slr/features.hpp"
#include "support.hpp"

using namespace slr;
using namespace slr::test;

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Vec3 unit(const Vec3& a) {
    const double n = norm(a);
    return {a.x / n, a.y / n, a.z / n};
}

std::vector<double> handshape_oracle(const HandLandmarks& h) {
    const double ref = norm(sub(h.points[0], h.points[9]));
    std::vector<double> out;
    for (int i = 0; i < 21; ++i) {
        for (int j = i + 1; j < 21; ++j) out.push_back(norm(sub(h.points[i], h.points[j])) / ref);
    }
    return out;
}

std::vector<double> palm_oracle(const HandLandmarks& h) {
    const Vec3 w = h.points[0], idx = h.points[5], pinky = h.points[17];
    const Vec3 l = unit(sub(idx, pinky));
    const Vec3 n = unit(cross(sub(idx, w), sub(pinky, w)));
    const Vec3 d = cross(n, l);
    // Bones in chain order: thumb 0-1-2-3-4, index 0-5-..-8, and so on.
    std::vector<double> out;
    for (int finger = 0; finger < 5; ++finger) {
        int parent = 0;
        for (int k = 1; k <= 4; ++k) {
            const int child = 4 * finger + k;
            const Vec3 b = unit(sub(h.points[child], h.points[parent]));
            for (const Vec3& axis : {n, l, d, Vec3{0, 1, 0}, Vec3{0, 0, 1}}) out.push_back(dot(b, axis));
            parent = child;
        }
    }
    return out;
}

template <std::size_t N>
double max_abs_diff(const std::array<double, N>& a, const std::array<double, N>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <std::size_t N>
double max_rel_diff(const std::array<double, N>& a, const std::array<double, N>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m = std::max(m, rel_err(a[i], b[i]));
    return m;
}

bool all_zero(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

FrameRecord transform(const FrameRecord& f, const Rigid& r) {
    FrameRecord o = f;
    if (o.left) o.left = r.apply(*o.left);
    if (o.right) o.right = r.apply(*o.right);
    if (o.pose) o.pose = r.apply(*o.pose);
    return o;
}

}  // namespace

TEST_CASE("segment layout") {
    CHECK(kSegmentSizes[3] == 21 * 20 / 2);
    CHECK(kSegmentSizes[5] == 20 * 5 * 2);
    CHECK(kSegmentSizes[6] == 21 * 3 * 2);
    std::size_t off = 0;
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        CHECK(kSegmentOffsets[s] == off);
        off += kSegmentSizes[s];
    }
    CHECK(off == 947);
    FeatureVector v;
    CHECK(v.segment(Segment::Movement).data() - v.values().data() == 821);
    CHECK(segment_name(Segment::PalmOrientation) == "palm_orient");
}

TEST_CASE("body frame") {
    PoseLandmarks p{};
    p.points[11] = {0.4, 0.5, 0};
    p.points[12] = {0.6, 0.5, 0};
    BodyFrame bf = body_frame(p);
    CHECK(bf.origin.x == doctest::Approx(0.5));
    CHECK(bf.origin.y == doctest::Approx(0.5));
    CHECK(bf.origin.z == 0.0);
    CHECK(bf.scale == doctest::Approx(0.2));
    CHECK_FALSE(bf.degenerate);

    p.points[12] = p.points[11];
    bf = body_frame(p);
    CHECK(bf.scale == 1.0);
    CHECK(bf.degenerate);

    std::mt19937_64 rng(1);
    const PoseLandmarks q = random_pose(rng);
    const Vec3 v{0.3, -2.0, 1.5};
    PoseLandmarks moved = q;
    for (Vec3& pt : moved.points) pt = {pt.x + v.x, pt.y + v.y, pt.z + v.z};
    const BodyFrame a = body_frame(q), b = body_frame(moved);
    CHECK(b.origin.x == doctest::Approx(a.origin.x + v.x));
    CHECK(b.origin.y == doctest::Approx(a.origin.y + v.y));
    CHECK(b.scale == doctest::Approx(a.scale));

    const BodyFrame none = body_frame(std::optional<PoseLandmarks>{});
    CHECK(none.scale == 1.0);
    CHECK(none.origin == Vec3{});
}

TEST_CASE("location segments") {
    std::mt19937_64 rng(2);
    CHECK(all_zero(location_hand(std::nullopt, BodyFrame::identity())));
    CHECK(all_zero(location_pose(std::nullopt, BodyFrame::identity())));

    const HandLandmarks h = random_hand(rng);
    const auto raw = location_hand(h, BodyFrame::identity());
    for (int i = 0; i < 21; ++i) {
        CHECK(raw[3 * i] == h.points[i].x);
        CHECK(raw[3 * i + 1] == h.points[i].y);
        CHECK(raw[3 * i + 2] == h.points[i].z);
    }

    const PoseLandmarks p = random_pose(rng);
    const BodyFrame bf = body_frame(p);
    const auto lp = location_pose(p, bf);
    const Vec3 axis = unit(sub(p.points[11], p.points[12]));
    const Vec3 ls{lp[33], lp[34], lp[35]};
    const Vec3 rs{lp[36], lp[37], lp[38]};
    CHECK(dot(ls, axis) == doctest::Approx(0.5));
    CHECK(dot(rs, axis) == doctest::Approx(-0.5));
    CHECK(norm(ls) == doctest::Approx(0.5));

    // Translation plus uniform scale of the whole skeleton cancels out.
    for (int t = 0; t < 200; ++t) {
        const FrameRecord f = random_frame(rng, 1.0);
        Rigid r = random_rigid(rng);
        r.r[0] = r.r[4] = r.r[8] = 1.0;
        r.r[1] = r.r[2] = r.r[3] = r.r[5] = r.r[6] = r.r[7] = 0.0;
        const FrameRecord g = transform(f, r);
        CHECK(max_rel_diff(location_hand(f.left, body_frame(f.pose)), location_hand(g.left, body_frame(g.pose))) <
              1e-9);
        CHECK(max_rel_diff(location_pose(f.pose, body_frame(f.pose)), location_pose(g.pose, body_frame(g.pose))) <
              1e-9);
    }
}

TEST_CASE("handshape") {
    std::mt19937_64 rng(3);
    CHECK(all_zero(handshape(std::nullopt)));
    for (int t = 0; t < 100; ++t) {
        const HandLandmarks h = random_hand(rng);
        const auto got = handshape(h);
        const auto want = handshape_oracle(h);
        for (std::size_t k = 0; k < 210; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
    HandLandmarks flat = random_hand(rng);
    flat.points[9] = flat.points[0];
    CHECK(all_zero(handshape(flat)));
}

TEST_CASE("handshape is invariant under rigid motion and uniform scale") {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const HandLandmarks h = random_hand(rng);
        const Rigid r = random_rigid(rng);
        worst = std::max(worst, max_rel_diff(handshape(h), handshape(r.apply(h))));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("palm orientation") {
    std::mt19937_64 rng(5);
    CHECK(all_zero(palm_orientation(std::nullopt, std::nullopt)));
    for (int t = 0; t < 100; ++t) {
        const HandLandmarks l = random_hand(rng), r = random_hand(rng);
        const auto got = palm_orientation(l, r);
        const auto wl = palm_oracle(l), wr = palm_oracle(r);
        for (std::size_t k = 0; k < 100; ++k) {
            CHECK(got[k] == doctest::Approx(wl[k]).epsilon(1e-12));
            CHECK(got[100 + k] == doctest::Approx(wr[k]).epsilon(1e-12));
        }
        for (double v : got) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
        const auto only_right = palm_orientation(std::nullopt, r);
        CHECK(all_zero(std::span<const double>(only_right).first(100)));
    }
}

TEST_CASE("palm orientation under translation and rotation") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 200; ++t) {
        const HandLandmarks h = random_hand(rng);
        Rigid shift = random_rigid(rng);
        shift.s = 1.0;
        shift.r[0] = shift.r[4] = shift.r[8] = 1.0;
        shift.r[1] = shift.r[2] = shift.r[3] = shift.r[5] = shift.r[6] = shift.r[7] = 0.0;
        CHECK(max_abs_diff(palm_orientation(h, std::nullopt), palm_orientation(shift.apply(h), std::nullopt)) < 1e-9);

        Rigid rot = random_rigid(rng);
        rot.s = 1.0;
        const auto a = palm_orientation(h, std::nullopt);
        const auto b = palm_orientation(rot.apply(h), std::nullopt);
        double hand_axes = 0.0, world_axes = 0.0;
        for (std::size_t bone = 0; bone < 20; ++bone) {
            for (std::size_t c = 0; c < 3; ++c) hand_axes = std::max(hand_axes, std::abs(a[5 * bone + c] - b[5 * bone + c]));
            for (std::size_t c = 3; c < 5; ++c) world_axes = std::max(world_axes, std::abs(a[5 * bone + c] - b[5 * bone + c]));
        }
        CHECK(hand_axes < 1e-9);
        CHECK(world_axes > 1e-6);
    }
}

TEST_CASE("movement") {
    std::mt19937_64 rng(7);
    const BodyFrame id = BodyFrame::identity();

    LandmarkWindow constant = random_window(rng, 4);
    for (auto& f : constant.frames) f = constant.frames[0];
    CHECK(all_zero(movement(constant, id, id)));

    LandmarkWindow w = random_window(rng, 3);
    const Vec3 delta{0.05, -0.02, 0.01};
    w.frames[2] = w.frames[0];
    for (Vec3& p : w.frames[2].left->points) p = {p.x + delta.x, p.y + delta.y, p.z + delta.z};
    for (Vec3& p : w.frames[2].right->points) p = {p.x + delta.x, p.y + delta.y, p.z + delta.z};
    const auto m = movement(w, id, id);
    for (std::size_t k = 0; k < 42; ++k) {
        CHECK(m[3 * k] == doctest::Approx(delta.x));
        CHECK(m[3 * k + 1] == doctest::Approx(delta.y));
        CHECK(m[3 * k + 2] == doctest::Approx(delta.z));
    }

    // Linear in the landmark displacement.
    LandmarkWindow w2 = w;
    for (Vec3& p : w2.frames[2].left->points) p = {p.x + delta.x, p.y + delta.y, p.z + delta.z};
    const auto m2 = movement(w2, id, id);
    CHECK(m2[0] == doctest::Approx(2 * delta.x));

    w.frames[0].right.reset();
    const auto half = movement(w, id, id);
    CHECK(all_zero(std::span<const double>(half).subspan(63)));

    LandmarkWindow one = random_window(rng, 1);
    CHECK_THROWS_AS(movement(one, id, id), Error);
}

TEST_CASE("encode_window composes the segment operations") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        const LandmarkWindow w = fill_missing(random_window(rng, 3, 0.7));
        const FeatureVector v = encode_window(w);
        const FrameRecord& last = w.frames.back();
        const BodyFrame bl = body_frame(last.pose);
        const BodyFrame bf = body_frame(w.frames.front().pose);
        auto same = [&](Segment s, std::span<const double> ref) {
            const auto seg = v.segment(s);
            REQUIRE(seg.size() == ref.size());
            for (std::size_t k = 0; k < ref.size(); ++k) CHECK(seg[k] == ref[k]);
        };
        same(Segment::LocationLeft, location_hand(last.left, bl));
        same(Segment::LocationRight, location_hand(last.right, bl));
        same(Segment::LocationPose, location_pose(last.pose, bl));
        same(Segment::HandshapeLeft, handshape(last.left));
        same(Segment::HandshapeRight, handshape(last.right));
        same(Segment::PalmOrientation, palm_orientation(last.left, last.right));
        same(Segment::Movement, movement(w, bf, bl));
        for (double x : v.values()) CHECK(std::isfinite(x));
    }

    LandmarkWindow empty;
    empty.frames.resize(3);
    CHECK(all_zero(encode_window(empty).values()));
}

TEST_CASE("encoding is deterministic") {
    std::mt19937_64 rng(9);
    const LandmarkWindow w = random_window(rng);
    const FeatureVector a = encode_window(w), b = encode_window(w);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}
