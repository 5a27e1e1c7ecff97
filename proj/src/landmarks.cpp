#include "slr/landmarks.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace slr {

template <int N>
bool LandmarkBlock<N>::finite() const {
    for (const Vec3& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) return false;
    }
    return true;
}

template struct LandmarkBlock<kHandPoints>;
template struct LandmarkBlock<kPosePoints>;

Fps::Fps(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error("fps denominator is zero");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    if (num <= 0) throw Error("fps must be positive");
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

namespace {

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw Error("invalid fps '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

Fps Fps::parse(std::string_view text) {
    if (text.empty()) throw Error("empty fps");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return Fps(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        std::string_view whole = text.substr(0, dot);
        std::string_view frac = text.substr(dot + 1);
        if (frac.size() > 12 || frac.empty()) throw Error("invalid fps '" + std::string(text) + "'");
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
        const std::int64_t f = parse_int(frac);
        if (w < 0 || f < 0) throw Error("fps must be positive");
        return Fps(w * den + f, den);
    }
    return Fps(parse_int(text), 1);
}

Fps Fps::from_double(double fps) {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw Error("fps must be positive");
    // Continued-fraction convergents.
    constexpr std::int64_t kMaxDen = 100000;
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double x = fps;
    for (int iter = 0; iter < 64; ++iter) {
        const double a = std::floor(x);
        const auto ai = static_cast<std::int64_t>(a);
        const std::int64_t h2 = ai * h1 + h0;
        const std::int64_t k2 = ai * k1 + k0;
        if (k2 > kMaxDen) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        const double rem = x - a;
        if (rem < 1e-12) break;
        x = 1.0 / rem;
    }
    return Fps(h1, k1);
}

std::string Fps::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

void FrameRecord::validate() const {
    if (sign_id < 0) throw Error("sign_id must be non-negative");
    if (fps.num() <= 0 || fps.den() <= 0) throw Error("fps must be positive");
    if (left && !left->finite()) throw Error("non-finite left hand coordinate");
    if (right && !right->finite()) throw Error("non-finite right hand coordinate");
    if (pose && !pose->finite()) throw Error("non-finite pose coordinate");
}

void VideoSequence::validate() const {
    if (frames.empty()) throw Error("video '" + video_id + "' has no frames");
    for (const FrameRecord& f : frames) {
        if (f.video_id != video_id) throw Error("frame video_id mismatch in '" + video_id + "'");
        if (!(f.fps == fps)) throw Error("mixed fps within video '" + video_id + "'");
    }
}

int VideoSequence::dominant_sign(const std::vector<FrameRecord>& frames) {
    std::map<int, int> counts;
    for (const FrameRecord& f : frames) {
        if (f.sign_id != kNoSign) ++counts[f.sign_id];
    }
    int best = kNoSign;
    int best_count = 0;
    for (auto [id, n] : counts) {
        if (n > best_count) {
            best = id;
            best_count = n;
        }
    }
    return best;
}

void SignRegistry::add(SignClass sign) {
    if (sign.sign_id <= kNoSign) throw Error("registry sign_id must be positive");
    if (sign.gloss.empty()) throw Error("empty gloss for sign_id " + std::to_string(sign.sign_id));
    const int id = sign.sign_id;
    if (!signs_.emplace(id, std::move(sign)).second) {
        throw Error("duplicate sign_id " + std::to_string(id));
    }
}

bool SignRegistry::contains(int sign_id) const {
    return sign_id == kNoSign || signs_.count(sign_id) != 0;
}

const SignClass* SignRegistry::find(int sign_id) const {
    auto it = signs_.find(sign_id);
    return it == signs_.end() ? nullptr : &it->second;
}

std::string SignRegistry::gloss(int sign_id) const {
    if (sign_id == kNoSign) return "<none>";
    if (const SignClass* s = find(sign_id)) return s->gloss;
    return "#" + std::to_string(sign_id);
}

}  // namespace slr
