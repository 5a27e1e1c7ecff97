#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "slr/landmarks.hpp"

namespace slr {

struct DecoderConfig {
    double confidence_threshold = 0.5;
    int min_run = 3;
    int blank_id = kNoSign;

    void validate() const;
    nlohmann::json to_json() const;
    static DecoderConfig from_json(const nlohmann::json& j);
};

/// Collocated sign sequences (length >= 2) merged into a compound sign.
class CollocationLexicon {
public:
    void add(std::vector<int> sequence, int merged);
    /// Optional display name for a merged id that is not in the registry.
    void set_gloss(int merged, std::string gloss) { glosses_[merged] = std::move(gloss); }
    const std::string* gloss(int merged) const;
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::vector<int>, int>& entries() const { return entries_; }

    /// Longest key that is a prefix of `tokens`: (length, merged id).
    std::optional<std::pair<std::size_t, int>> longest_prefix_match(std::span<const int> tokens) const;
    /// True when some key is strictly longer than `tokens` and starts with it.
    bool extends(std::span<const int> tokens) const;

    static CollocationLexicon from_json(const nlohmann::json& doc, int blank_id = kNoSign);
    nlohmann::json to_json() const;

private:
    std::map<std::vector<int>, int> entries_;
    std::map<int, std::string> glosses_;
};

CollocationLexicon load_lexicon(const std::filesystem::path& path, int blank_id = kNoSign);

/// Greedy CTC rule: collapse consecutive duplicates, then delete blanks.
std::vector<int> collapse(std::span<const int> emissions, int blank_id = kNoSign);

/// Single left-to-right pass of greedy longest-match merging.
std::vector<int> ngram_merge(std::span<const int> tokens, const CollocationLexicon& lexicon);

struct DecoderState {
    int candidate = kNoSign;
    int run = 0;
    std::optional<int> last_emitted;
    std::vector<int> emitted;
};

/// Per-stream decoder: confidence gating, debounced CTC collapse, then
/// streaming collocation merging identical to ngram_merge over the whole
/// emitted sequence.
class StreamDecoder {
public:
    explicit StreamDecoder(DecoderConfig cfg = {}, const CollocationLexicon* lexicon = nullptr);

    /// Class decision for one window: argmax (lowest id on ties), or blank
    /// when below the confidence threshold.
    int classify(std::span<const float> probs) const;

    /// Raw CTC token emitted by this window, if any.
    std::optional<int> step(std::span<const float> probs);
    std::optional<int> step_class(int cls);

    /// Merged tokens that became final since the previous call.
    std::vector<int> take_merged();

    /// Final merged token list; resets the decoder.
    std::vector<int> flush();
    /// Merged tokens not yet returned by take_merged(), resolving any pending
    /// collocation prefix. Does not reset.
    std::vector<int> finish_pending();

    const DecoderState& state() const { return state_; }
    const DecoderConfig& config() const { return cfg_; }
    void reset();

private:
    void release(bool final);

    DecoderConfig cfg_;
    const CollocationLexicon* lexicon_;
    DecoderState state_;
    std::size_t merge_pos_ = 0;        // next raw token not yet merged
    std::vector<int> merged_ready_;    // merged tokens awaiting take_merged()
    std::vector<int> merged_all_;
};

}  // namespace slr
