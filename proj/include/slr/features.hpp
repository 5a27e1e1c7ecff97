#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "slr/landmarks.hpp"
#include "slr/preprocess.hpp"

namespace slr {

enum class Segment { LocationLeft, LocationRight, LocationPose, HandshapeLeft, HandshapeRight, PalmOrientation, Movement };

inline constexpr std::size_t kSegmentCount = 7;
inline constexpr std::array<std::size_t, kSegmentCount> kSegmentSizes = {63, 63, 75, 210, 210, 200, 126};
inline constexpr std::array<std::size_t, kSegmentCount + 1> kSegmentOffsets = {0, 63, 126, 201, 411, 621, 821, 947};
inline constexpr std::size_t kFeatureSize = 947;

static_assert(kSegmentOffsets.back() == kFeatureSize);

std::string_view segment_name(Segment s);

/// The 947-value model input, split into seven fixed segments.
class FeatureVector {
public:
    std::span<double> segment(Segment s) {
        const auto i = static_cast<std::size_t>(s);
        return {values_.data() + kSegmentOffsets[i], kSegmentSizes[i]};
    }
    std::span<const double> segment(Segment s) const {
        const auto i = static_cast<std::size_t>(s);
        return {values_.data() + kSegmentOffsets[i], kSegmentSizes[i]};
    }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::array<double, kFeatureSize> values_{};
};

/// Shoulder-centred normalisation frame.
struct BodyFrame {
    Vec3 origin{};
    double scale = 1.0;
    bool degenerate = false;

    static BodyFrame identity() { return {}; }
};

// Pose indices of the shoulders; hand indices used by the palm frame.
inline constexpr int kLeftShoulder = 11;
inline constexpr int kRightShoulder = 12;
inline constexpr int kWrist = 0;
inline constexpr int kIndexMcp = 5;
inline constexpr int kMiddleMcp = 9;
inline constexpr int kPinkyMcp = 17;

/// The 20 bones of a hand as (parent, child) landmark pairs: thumb, index,
/// middle, ring and pinky chains from the wrist outwards.
inline constexpr std::array<std::array<int, 2>, 20> kHandBones = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 4},
    {0, 5}, {5, 6}, {6, 7}, {7, 8},
    {0, 9}, {9, 10}, {10, 11}, {11, 12},
    {0, 13}, {13, 14}, {14, 15}, {15, 16},
    {0, 17}, {17, 18}, {18, 19}, {19, 20},
}};

BodyFrame body_frame(const PoseLandmarks& pose);
BodyFrame body_frame(const std::optional<PoseLandmarks>& pose);

void location_hand(const std::optional<HandLandmarks>& hand, const BodyFrame& bf, std::span<double> out);
void location_pose(const std::optional<PoseLandmarks>& pose, const BodyFrame& bf, std::span<double> out);
void handshape(const std::optional<HandLandmarks>& hand, std::span<double> out);
void palm_orientation(const std::optional<HandLandmarks>& left, const std::optional<HandLandmarks>& right,
                      std::span<double> out);
void movement(const LandmarkWindow& win, const BodyFrame& bf_first, const BodyFrame& bf_last, std::span<double> out);

std::array<double, 63> location_hand(const std::optional<HandLandmarks>& hand, const BodyFrame& bf);
std::array<double, 75> location_pose(const std::optional<PoseLandmarks>& pose, const BodyFrame& bf);
std::array<double, 210> handshape(const std::optional<HandLandmarks>& hand);
std::array<double, 200> palm_orientation(const std::optional<HandLandmarks>& left,
                                         const std::optional<HandLandmarks>& right);
std::array<double, 126> movement(const LandmarkWindow& win, const BodyFrame& bf_first, const BodyFrame& bf_last);

/// Locations and palm orientation come from the last frame, movement from
/// first to last. Expects fill_missing to have been applied.
FeatureVector encode_window(const LandmarkWindow& win);

}  // namespace slr
