#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slr/decoder.hpp"
#include "slr/model.hpp"
#include "slr/pipeline.hpp"

namespace slr {

inline constexpr std::size_t kTopK = 5;

/// Wire messages (one JSON object per text frame or line):
///   client  {"type":"hello","fps":F}           fps optional, number or "n/d"
///           {"type":"frame","t_ms":T,"left":[[x,y,z]x21]|null,"right":...,"pose":[[x,y,z]x25]|null}
///           {"type":"flush"}
///   server  {"type":"ready","session","target_fps","window","class_count"}
///           {"type":"prediction","t_ms","top":[{"sign_id","gloss","p"}],"emitted":[gloss],"emitted_ids":[id]}
///           {"type":"flushed","emitted","emitted_ids","transcript","transcript_ids"}
///           {"type":"error","message"}
///
/// With a hello fps the stream is timed by frame index at that rate; without
/// one, t_ms drives resampling.
class Session {
public:
    Session(const Model& model, DecoderConfig decoder, const CollocationLexicon* lexicon, std::string id);

    /// Replies to one message; frames that do not complete a window get none.
    std::optional<nlohmann::json> handle_text(std::string_view text);
    std::optional<nlohmann::json> handle(const nlohmann::json& msg);

    const std::string& id() const { return id_; }
    const std::optional<Fps>& fps() const { return stream_.source_fps(); }
    std::size_t buffered() const { return stream_.buffered(); }
    const std::vector<int>& transcript() const { return transcript_; }

private:
    nlohmann::json hello(const nlohmann::json& msg);
    std::optional<nlohmann::json> frame(const nlohmann::json& msg);
    nlohmann::json flush();
    nlohmann::json glosses(const std::vector<int>& ids) const;
    std::string gloss(int id) const;

    const Model& model_;
    const CollocationLexicon* lexicon_;
    std::string id_;
    WindowStream stream_;
    StreamDecoder decoder_;
    std::vector<int> transcript_;
};

nlohmann::json error_message(std::string_view message);

/// Parses a landmark block; null or absent gives nullopt.
template <typename Block>
std::optional<Block> block_from_json(const nlohmann::json& msg, const char* key);

nlohmann::json frame_to_json(const FrameRecord& frame, std::optional<double> t_ms = {});

}  // namespace slr
