#include "slr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "slr/model.hpp"

namespace slr {

nlohmann::json augment_to_json(const AugmentPlan& plan) {
    const AugmentConfig& c = plan.cfg;
    return {{"copies", plan.copies},
            {"jitter_sigma", c.jitter_sigma},
            {"time_offset_max", c.time_offset_max},
            {"mirror", c.mirror},
            {"speed_min", c.speed_min},
            {"speed_max", c.speed_max},
            {"seed", c.seed}};
}

AugmentPlan augment_from_json(const nlohmann::json& j) {
    AugmentPlan p;
    try {
        p.copies = j.value("copies", p.copies);
        p.cfg.jitter_sigma = j.value("jitter_sigma", p.cfg.jitter_sigma);
        p.cfg.time_offset_max = j.value("time_offset_max", p.cfg.time_offset_max);
        p.cfg.mirror = j.value("mirror", p.cfg.mirror);
        p.cfg.speed_min = j.value("speed_min", p.cfg.speed_min);
        p.cfg.speed_max = j.value("speed_max", p.cfg.speed_max);
        p.cfg.seed = j.value("seed", p.cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid augment config: ") + e.what());
    }
    if (p.copies < 0) throw Error("augment copies must be >= 0");
    p.cfg.validate();
    return p;
}

nlohmann::json AppConfig::to_json() const {
    return {{"model", model.to_json()},
            {"training", training.to_json()},
            {"pipeline", pipeline_to_json(pipeline)},
            {"augment", augment_to_json(augment)},
            {"decoder", decoder.to_json()}};
}

AppConfig AppConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    static const char* const kSections[] = {"model", "training", "pipeline", "augment", "decoder"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(kSections), std::end(kSections), key) == std::end(kSections)) {
            throw Error("unknown config section: " + key);
        }
        if (!value.is_object()) throw Error("config section " + key + " must be an object");
    }
    const auto section = [&](const char* key) { return j.value(key, nlohmann::json::object()); };
    AppConfig c;
    c.model = ModelConfig::from_json(section("model"));
    c.training = TrainingConfig::from_json(section("training"));
    c.pipeline = pipeline_from_json(section("pipeline"));
    c.augment = augment_from_json(section("augment"));
    c.decoder = DecoderConfig::from_json(section("decoder"));
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return from_json(nlohmann::json::parse(ss.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("invalid config " + path.string() + ": " + e.what());
    }
}

}  // namespace slr
