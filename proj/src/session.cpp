#include "slr/session.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slr {

nlohmann::json error_message(std::string_view message) {
    return {{"type", "error"}, {"message", std::string(message)}};
}

template <typename Block>
std::optional<Block> block_from_json(const nlohmann::json& msg, const char* key) {
    const auto it = msg.find(key);
    if (it == msg.end() || it->is_null()) return std::nullopt;
    if (!it->is_array()) throw Error(std::string(key) + " must be an array or null");
    if (it->size() != static_cast<std::size_t>(Block::kSize)) {
        throw Error(std::string(key) + ": expected " + std::to_string(Block::kSize) + " landmarks, got " +
                    std::to_string(it->size()));
    }
    Block b;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& p = (*it)[i];
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
            throw Error(std::string(key) + ": landmark " + std::to_string(i) + " must be [x, y, z]");
        }
        b.points[i] = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    }
    if (!b.finite()) throw Error(std::string(key) + ": non-finite coordinate");
    return b;
}

template std::optional<HandLandmarks> block_from_json<HandLandmarks>(const nlohmann::json&, const char*);
template std::optional<PoseLandmarks> block_from_json<PoseLandmarks>(const nlohmann::json&, const char*);

namespace {

template <int N>
nlohmann::json block_to_json(const std::optional<LandmarkBlock<N>>& b) {
    if (!b) return nullptr;
    nlohmann::json arr = nlohmann::json::array();
    for (const Vec3& p : b->points) arr.push_back({p.x, p.y, p.z});
    return arr;
}

}  // namespace

nlohmann::json frame_to_json(const FrameRecord& frame, std::optional<double> t_ms) {
    nlohmann::json j{{"type", "frame"},
                     {"left", block_to_json(frame.left)},
                     {"right", block_to_json(frame.right)},
                     {"pose", block_to_json(frame.pose)}};
    if (t_ms) j["t_ms"] = *t_ms;
    return j;
}

Session::Session(const Model& model, DecoderConfig decoder, const CollocationLexicon* lexicon, std::string id)
    : model_(model), lexicon_(lexicon), id_(std::move(id)), stream_(model.pipeline), decoder_(decoder, lexicon) {}

std::optional<nlohmann::json> Session::handle_text(std::string_view text) {
    nlohmann::json msg;
    try {
        msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        return error_message("malformed message: not JSON");
    }
    return handle(msg);
}

std::optional<nlohmann::json> Session::handle(const nlohmann::json& msg) {
    try {
        if (!msg.is_object()) return error_message("malformed message: expected an object");
        const auto type = msg.find("type");
        if (type == msg.end() || !type->is_string()) return error_message("malformed message: missing type");
        const std::string& t = type->get_ref<const std::string&>();
        if (t == "frame") return frame(msg);
        if (t == "hello") return hello(msg);
        if (t == "flush") return flush();
        return error_message("unknown message type: " + t);
    } catch (const Error& e) {
        return error_message(e.what());
    } catch (const nlohmann::json::exception& e) {
        return error_message(std::string("malformed message: ") + e.what());
    }
}

nlohmann::json Session::hello(const nlohmann::json& msg) {
    std::optional<Fps> fps;
    if (const auto it = msg.find("fps"); it != msg.end() && !it->is_null()) {
        if (it->is_string()) {
            fps = Fps::parse(it->get<std::string>());
        } else if (it->is_number()) {
            fps = Fps::from_double(it->get<double>());
        } else {
            throw Error("fps must be a number or \"n/d\" string");
        }
    }
    stream_.reset();
    decoder_.reset();
    transcript_.clear();
    stream_.set_source_fps(fps);
    return {{"type", "ready"},
            {"session", id_},
            {"target_fps", model_.pipeline.target_fps.value()},
            {"window", model_.pipeline.window},
            {"class_count", model_.class_count()}};
}

std::optional<nlohmann::json> Session::frame(const nlohmann::json& msg) {
    FrameRecord f;
    f.left = block_from_json<HandLandmarks>(msg, "left");
    f.right = block_from_json<HandLandmarks>(msg, "right");
    f.pose = block_from_json<PoseLandmarks>(msg, "pose");
    f.video_id = id_;
    f.fps = stream_.source_fps().value_or(model_.pipeline.target_fps);

    std::optional<double> t_ms;
    if (const auto it = msg.find("t_ms"); it != msg.end() && !it->is_null()) {
        if (!it->is_number()) throw Error("t_ms must be a number");
        t_ms = it->get<double>();
        if (!std::isfinite(*t_ms)) throw Error("t_ms must be finite");
    }
    std::optional<double> ts;
    if (!stream_.source_fps()) {
        if (!t_ms) throw Error("t_ms is required when no fps was negotiated");
        ts = *t_ms / 1000.0;
    }

    const std::vector<LandmarkWindow> windows = stream_.push(f, ts);
    if (windows.empty()) return std::nullopt;

    std::vector<float> probs;
    for (const LandmarkWindow& w : windows) {
        probs = model_.predict(encode_window(w), kernels::Backend::Serial);
        decoder_.step(probs);
    }
    const std::vector<int> emitted = decoder_.take_merged();
    transcript_.insert(transcript_.end(), emitted.begin(), emitted.end());

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t k = std::min(kTopK, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t i = 0; i < k; ++i) {
        const int id = static_cast<int>(order[i]);
        top.push_back({{"sign_id", id}, {"gloss", gloss(id)}, {"p", probs[order[i]]}});
    }
    nlohmann::json reply{{"type", "prediction"}, {"top", std::move(top)}, {"emitted", glosses(emitted)},
                         {"emitted_ids", emitted}};
    reply["t_ms"] = t_ms ? nlohmann::json(*t_ms) : nlohmann::json(nullptr);
    return reply;
}

nlohmann::json Session::flush() {
    const std::vector<int> pending = decoder_.finish_pending();
    transcript_.insert(transcript_.end(), pending.begin(), pending.end());
    nlohmann::json reply{{"type", "flushed"},
                         {"emitted", glosses(pending)},
                         {"emitted_ids", pending},
                         {"transcript", glosses(transcript_)},
                         {"transcript_ids", transcript_}};
    decoder_.reset();
    stream_.reset();
    transcript_.clear();
    return reply;
}

std::string Session::gloss(int id) const {
    if (!model_.registry.contains(id) || id == kNoSign) {
        if (lexicon_) {
            if (const std::string* g = lexicon_->gloss(id)) return *g;
        }
    }
    return model_.registry.gloss(id);
}

nlohmann::json Session::glosses(const std::vector<int>& ids) const {
    nlohmann::json out = nlohmann::json::array();
    for (int id : ids) out.push_back(gloss(id));
    return out;
}

}  // namespace slr
