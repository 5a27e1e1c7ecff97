#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "slr/features.hpp"
#include "slr/network.hpp"
#include "slr/preprocess.hpp"

namespace slr {

/// A trained classifier together with the conditioning it was trained under
/// and the glosses of its classes.
struct Model {
    Network<float> net;
    PipelineConfig pipeline;
    SignRegistry registry;

    int class_count() const { return net.config().class_count; }

    /// Softmax over classes for one encoded window.
    std::vector<float> predict(const FeatureVector& x, kernels::Backend backend = kernels::Backend::Serial) const;
    /// Row-major [n x class_count] probabilities.
    std::vector<float> predict(std::span<const FeatureVector> xs,
                               kernels::Backend backend = kernels::Backend::OpenMP) const;
};

/// Copies features into a contiguous [n x 947] buffer of T.
template <typename T>
std::vector<T> pack_features(std::span<const FeatureVector> xs) {
    std::vector<T> out(xs.size() * kFeatureSize);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto v = xs[i].values();
        for (std::size_t k = 0; k < kFeatureSize; ++k) out[i * kFeatureSize + k] = static_cast<T>(v[k]);
    }
    return out;
}

// Model file layout (all integers little-endian):
//   "SLRM"                       4 bytes
//   format version               u32
//   config length                u32
//   config                       UTF-8 JSON {"model", "pipeline", "signs"}
//   tensors                      f32, per layer weight [in x out] then bias,
//                                layers in Network::layers() order
inline constexpr char kModelMagic[4] = {'S', 'L', 'R', 'M'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(std::span<const std::uint8_t> bytes);

/// Returns the number of bytes written.
std::size_t save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

nlohmann::json pipeline_to_json(const PipelineConfig& p);
PipelineConfig pipeline_from_json(const nlohmann::json& j);

}  // namespace slr
