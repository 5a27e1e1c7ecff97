#include "slr/decoder.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace slr {

void DecoderConfig::validate() const {
    if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
        throw Error("confidence_threshold must be in (0, 1)");
    }
    if (min_run < 1) throw Error("min_run must be >= 1");
    if (blank_id < 0) throw Error("blank_id must be non-negative");
}

nlohmann::json DecoderConfig::to_json() const {
    return {{"confidence_threshold", confidence_threshold}, {"min_run", min_run}, {"blank_id", blank_id}};
}

DecoderConfig DecoderConfig::from_json(const nlohmann::json& j) {
    DecoderConfig c;
    try {
        c.confidence_threshold = j.value("confidence_threshold", c.confidence_threshold);
        c.min_run = j.value("min_run", c.min_run);
        c.blank_id = j.value("blank_id", c.blank_id);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid decoder config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------

void CollocationLexicon::add(std::vector<int> sequence, int merged) {
    if (sequence.size() < 2) throw Error("collocation sequence needs at least 2 signs");
    if (merged <= kNoSign) throw Error("collocation merged id must be a positive sign id");
    for (int id : sequence) {
        if (id <= kNoSign) throw Error("collocation sequence contains a non-sign id");
    }
    if (!entries_.emplace(std::move(sequence), merged).second) throw Error("duplicate collocation sequence");
}

std::optional<std::pair<std::size_t, int>> CollocationLexicon::longest_prefix_match(
    std::span<const int> tokens) const {
    std::optional<std::pair<std::size_t, int>> best;
    // Keys sharing tokens[0] sit contiguously from lower_bound({tokens[0]}).
    if (tokens.size() < 2) return best;
    std::vector<int> probe(tokens.begin(), tokens.end());
    for (auto it = entries_.lower_bound({tokens[0]}); it != entries_.end() && it->first[0] == tokens[0]; ++it) {
        const std::vector<int>& key = it->first;
        if (key.size() > tokens.size()) continue;
        if (std::equal(key.begin(), key.end(), tokens.begin()) && (!best || key.size() > best->first)) {
            best = std::make_pair(key.size(), it->second);
        }
    }
    return best;
}

bool CollocationLexicon::extends(std::span<const int> tokens) const {
    if (tokens.empty()) return false;
    for (auto it = entries_.lower_bound({tokens[0]}); it != entries_.end() && it->first[0] == tokens[0]; ++it) {
        const std::vector<int>& key = it->first;
        if (key.size() > tokens.size() && std::equal(tokens.begin(), tokens.end(), key.begin())) return true;
    }
    return false;
}

CollocationLexicon CollocationLexicon::from_json(const nlohmann::json& doc, int blank_id) {
    if (!doc.is_array()) throw Error("lexicon must be a JSON array");
    CollocationLexicon lex;
    for (const auto& item : doc) {
        try {
            std::vector<int> seq = item.at("sequence").get<std::vector<int>>();
            const int merged = item.at("merged").get<int>();
            if (std::find(seq.begin(), seq.end(), blank_id) != seq.end() || merged == blank_id) {
                throw Error("collocation lexicon may not use the blank id");
            }
            lex.add(std::move(seq), merged);
            if (item.contains("gloss")) lex.set_gloss(merged, item.at("gloss").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("invalid lexicon entry: ") + e.what());
        }
    }
    return lex;
}

nlohmann::json CollocationLexicon::to_json() const {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& [seq, merged] : entries_) {
        nlohmann::json item{{"sequence", seq}, {"merged", merged}};
        if (const std::string* g = gloss(merged)) item["gloss"] = *g;
        doc.push_back(std::move(item));
    }
    return doc;
}

const std::string* CollocationLexicon::gloss(int merged) const {
    const auto it = glosses_.find(merged);
    return it == glosses_.end() ? nullptr : &it->second;
}

CollocationLexicon load_lexicon(const std::filesystem::path& path, int blank_id) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open lexicon " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return CollocationLexicon::from_json(nlohmann::json::parse(ss.str()), blank_id);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("invalid lexicon " + path.string() + ": " + e.what());
    }
}

std::vector<int> collapse(std::span<const int> emissions, int blank_id) {
    std::vector<int> out;
    std::optional<int> prev;
    for (int e : emissions) {
        if (e != prev && e != blank_id) out.push_back(e);
        prev = e;
    }
    return out;
}

std::vector<int> ngram_merge(std::span<const int> tokens, const CollocationLexicon& lexicon) {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (auto m = lexicon.longest_prefix_match(tokens.subspan(i))) {
            out.push_back(m->second);
            i += m->first;
        } else {
            out.push_back(tokens[i]);
            ++i;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

StreamDecoder::StreamDecoder(DecoderConfig cfg, const CollocationLexicon* lexicon)
    : cfg_(cfg), lexicon_(lexicon) {
    cfg_.validate();
    state_.candidate = cfg_.blank_id;
}

int StreamDecoder::classify(std::span<const float> probs) const {
    if (probs.empty()) return cfg_.blank_id;
    const auto best = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (static_cast<double>(probs[static_cast<std::size_t>(best)]) < cfg_.confidence_threshold) return cfg_.blank_id;
    return best;
}

std::optional<int> StreamDecoder::step(std::span<const float> probs) { return step_class(classify(probs)); }

std::optional<int> StreamDecoder::step_class(int cls) {
    if (cls == cfg_.blank_id) {
        state_.candidate = cfg_.blank_id;
        state_.run = 0;
        state_.last_emitted.reset();
        return std::nullopt;
    }
    if (cls != state_.candidate) {
        state_.candidate = cls;
        state_.run = 1;
        state_.last_emitted.reset();
    } else {
        ++state_.run;
    }
    if (state_.run >= cfg_.min_run && state_.last_emitted != cls) {
        state_.last_emitted = cls;
        state_.emitted.push_back(cls);
        release(false);
        return cls;
    }
    return std::nullopt;
}

void StreamDecoder::release(bool final) {
    const std::span<const int> raw(state_.emitted);
    while (merge_pos_ < raw.size()) {
        const std::span<const int> rest = raw.subspan(merge_pos_);
        if (lexicon_ == nullptr || lexicon_->empty()) {
            merged_ready_.push_back(rest[0]);
            merged_all_.push_back(rest[0]);
            ++merge_pos_;
            continue;
        }
        // A longer collocation may still complete; wait for more tokens.
        if (!final && lexicon_->extends(rest)) break;
        if (auto m = lexicon_->longest_prefix_match(rest)) {
            merged_ready_.push_back(m->second);
            merged_all_.push_back(m->second);
            merge_pos_ += m->first;
        } else {
            merged_ready_.push_back(rest[0]);
            merged_all_.push_back(rest[0]);
            ++merge_pos_;
        }
    }
}

std::vector<int> StreamDecoder::take_merged() {
    std::vector<int> out;
    out.swap(merged_ready_);
    return out;
}

std::vector<int> StreamDecoder::finish_pending() {
    release(true);
    return take_merged();
}

std::vector<int> StreamDecoder::flush() {
    release(true);
    std::vector<int> out = std::move(merged_all_);
    reset();
    return out;
}

void StreamDecoder::reset() {
    state_ = DecoderState{};
    state_.candidate = cfg_.blank_id;
    merge_pos_ = 0;
    merged_ready_.clear();
    merged_all_.clear();
}

}  // namespace slr
