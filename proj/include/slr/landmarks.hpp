#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slr {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline constexpr int kHandPoints = 21;
inline constexpr int kPosePoints = 25;

/// Fixed-size landmark block. Coordinates are unitless values as emitted by
/// the upstream estimator.
template <int N>
struct LandmarkBlock {
    static constexpr int kSize = N;
    std::array<Vec3, N> points{};

    const Vec3& operator[](std::size_t i) const { return points[i]; }
    Vec3& operator[](std::size_t i) { return points[i]; }

    bool finite() const;

    friend bool operator==(const LandmarkBlock&, const LandmarkBlock&) = default;
};

using HandLandmarks = LandmarkBlock<kHandPoints>;
using PoseLandmarks = LandmarkBlock<kPosePoints>;

/// Positive rational frame rate. Always stored reduced with den > 0.
class Fps {
public:
    Fps() = default;
    Fps(std::int64_t num, std::int64_t den = 1);

    /// Accepts "24", "29.97" or "30000/1001".
    static Fps parse(std::string_view text);
    /// Closest rational with denominator <= 100000.
    static Fps from_double(double fps);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const;

    friend bool operator==(const Fps&, const Fps&) = default;

private:
    std::int64_t num_ = 1;
    std::int64_t den_ = 1;
};

/// sign_id reserved for frames that are not part of a sign ("Label A").
inline constexpr int kNoSign = 0;

/// One video frame of landmarks. An absent block means the estimator lost
/// that hand/pose in this frame.
struct FrameRecord {
    std::optional<HandLandmarks> left;
    std::optional<HandLandmarks> right;
    std::optional<PoseLandmarks> pose;
    std::string video_id;
    int sign_id = kNoSign;
    Fps fps{};

    bool empty_detection() const { return !left && !right && !pose; }
    bool any_hand() const { return left.has_value() || right.has_value(); }

    /// Throws Error when fps/sign_id/coordinates are invalid.
    void validate() const;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct VideoSequence {
    std::string video_id;
    Fps fps{};
    int sign_id = kNoSign;
    std::vector<FrameRecord> frames;

    std::size_t size() const { return frames.size(); }

    /// Checks non-emptiness and that every frame shares video_id and fps.
    void validate() const;

    /// Most frequent non-zero frame label (lowest id on ties), or kNoSign.
    static int dominant_sign(const std::vector<FrameRecord>& frames);
};

enum class Handedness { One, Two };

struct SignClass {
    int sign_id = kNoSign;
    std::string gloss;
    std::string english;
    Handedness handedness = Handedness::One;
    bool symmetric = false;
    std::vector<std::string> handshape_tags;
};

/// Sign-class registry keyed by sign_id. sign_id 0 is implicit.
class SignRegistry {
public:
    void add(SignClass sign);
    bool contains(int sign_id) const;
    const SignClass* find(int sign_id) const;
    /// Gloss for an id; "<none>" for kNoSign, "#<id>" for unregistered ids.
    std::string gloss(int sign_id) const;
    const std::map<int, SignClass>& signs() const { return signs_; }
    std::size_t size() const { return signs_.size(); }

private:
    std::map<int, SignClass> signs_;
};

}  // namespace slr
