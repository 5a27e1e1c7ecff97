#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "slr/decoder.hpp"
#include "slr/model.hpp"

namespace slr {

inline constexpr const char* kServiceVersion = "0.1.0";

struct ServerConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    /// Newline-delimited JSON over plain TCP; same protocol as /stream.
    std::optional<std::uint16_t> ndjson_port;
    std::optional<std::filesystem::path> static_dir;
    DecoderConfig decoder;
};

/// Model metadata reported by /healthz.
struct ModelInfo {
    std::string path;
    std::size_t file_bytes = 0;
};

nlohmann::json health_json(const Model& model, const ModelInfo& info, std::size_t active_sessions);

/// HTTP + WebSocket listener with one thread per connection. GET /healthz,
/// WebSocket /stream, and static files under `static_dir` ("/" serves
/// index.html). The model and lexicon are shared read-only.
class Server {
public:
    Server(const Model& model, ModelInfo info, const CollocationLexicon* lexicon, ServerConfig cfg);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the listeners and starts accepting in background threads.
    void start();
    /// Closes the listeners and all open connections, then waits for them.
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    std::uint16_t port() const { return port_; }
    std::optional<std::uint16_t> ndjson_port() const { return ndjson_port_; }
    std::size_t active_sessions() const { return active_.load(); }

private:
    struct Impl;

    const Model& model_;
    ModelInfo info_;
    const CollocationLexicon* lexicon_;
    ServerConfig cfg_;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
    std::optional<std::uint16_t> ndjson_port_;
    std::atomic<std::size_t> active_{0};
    std::atomic<std::uint64_t> next_session_{1};
};

/// Content type for a static file name.
std::string mime_type(const std::filesystem::path& path);

/// Maps a request target to a file under `root`; nullopt when the target
/// escapes the root or is malformed.
std::optional<std::filesystem::path> static_path(const std::filesystem::path& root, std::string_view target);

}  // namespace slr
