#include "slr/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "slr/record_io.hpp"

namespace slr {

std::vector<float> Model::predict(const FeatureVector& x, kernels::Backend backend) const {
    std::array<float, kFeatureSize> buf;
    const auto v = x.values();
    for (std::size_t k = 0; k < kFeatureSize; ++k) buf[k] = static_cast<float>(v[k]);
    return net.forward(buf, 1, false, nullptr, backend);
}

std::vector<float> Model::predict(std::span<const FeatureVector> xs, kernels::Backend backend) const {
    if (xs.empty()) return {};
    const std::vector<float> packed = pack_features<float>(xs);
    return net.forward(packed, xs.size(), false, nullptr, backend);
}

nlohmann::json pipeline_to_json(const PipelineConfig& p) {
    return {{"target_fps", p.target_fps.str()},
            {"window", p.window},
            {"stride", p.stride},
            {"interpolation", p.interpolation == Interpolation::Nearest ? "nearest" : "linear"},
            {"min_present_ratio", p.min_present_ratio}};
}

PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    PipelineConfig p;
    try {
        if (j.contains("target_fps")) {
            const auto& f = j.at("target_fps");
            p.target_fps = f.is_string() ? Fps::parse(f.get<std::string>()) : Fps::from_double(f.get<double>());
        }
        p.window = j.value("window", p.window);
        p.stride = j.value("stride", p.stride);
        const std::string interp = j.value("interpolation", std::string("linear"));
        if (interp == "linear") {
            p.interpolation = Interpolation::Linear;
        } else if (interp == "nearest") {
            p.interpolation = Interpolation::Nearest;
        } else {
            throw Error("interpolation must be 'linear' or 'nearest'");
        }
        p.min_present_ratio = j.value("min_present_ratio", p.min_present_ratio);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid pipeline config: ") + e.what());
    }
    p.validate();
    return p;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw Error("model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
    pos += 4;
    return v;
}

void put_floats(std::vector<std::uint8_t>& out, const std::vector<float>& values) {
    for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

void get_floats(std::span<const std::uint8_t> in, std::size_t& pos, std::vector<float>& values) {
    if (pos + 4 * values.size() > in.size()) throw Error("model file truncated");
    for (float& f : values) {
        f = std::bit_cast<float>(get_u32(in, pos));
        if (!std::isfinite(f)) throw Error("model file contains a non-finite parameter");
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
    nlohmann::json cfg = {{"model", model.net.config().to_json()},
                          {"pipeline", pipeline_to_json(model.pipeline)},
                          {"signs", registry_to_json(model.registry)}};
    const std::string blob = cfg.dump();
    std::vector<std::uint8_t> out;
    out.reserve(12 + blob.size() + 4 * model.net.parameter_count());
    out.insert(out.end(), std::begin(kModelMagic), std::end(kModelMagic));
    put_u32(out, kModelFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out.insert(out.end(), blob.begin(), blob.end());
    for (const DenseLayer<float>* layer : model.net.layers()) {
        put_floats(out, layer->weight);
        put_floats(out, layer->bias);
    }
    return out;
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) throw Error("bad model magic");
    std::size_t pos = 4;
    const std::uint32_t version = get_u32(bytes, pos);
    if (version != kModelFormatVersion) {
        throw Error("unsupported model format version " + std::to_string(version));
    }
    const std::uint32_t len = get_u32(bytes, pos);
    if (pos + len > bytes.size()) throw Error("model file truncated");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model config is not valid JSON: ") + e.what());
    }
    pos += len;
    if (!cfg.contains("model")) throw Error("model config lacks 'model'");

    Model model;
    model.net = Network<float>(ModelConfig::from_json(cfg.at("model")));
    model.pipeline = pipeline_from_json(cfg.value("pipeline", nlohmann::json::object()));
    model.registry = registry_from_json(cfg.value("signs", nlohmann::json::array()));

    const std::size_t expected = pos + 4 * model.net.parameter_count();
    if (bytes.size() < expected) throw Error("model file truncated: shape mismatch with embedded config");
    if (bytes.size() > expected) throw Error("model file has trailing bytes: shape mismatch with embedded config");
    for (DenseLayer<float>* layer : model.net.layers()) {
        get_floats(bytes, pos, layer->weight);
        get_floats(bytes, pos, layer->bias);
    }
    return model;
}

std::size_t save_model(const Model& model, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
    return bytes.size();
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace slr
