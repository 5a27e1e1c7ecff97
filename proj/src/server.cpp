#include "slr/server.hpp"

#include <sys/socket.h>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/read_until.hpp>
#include <boost/asio/streambuf.hpp>
#include <boost/asio/write.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "slr/session.hpp"

namespace slr {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

nlohmann::json health_json(const Model& model, const ModelInfo& info, std::size_t active_sessions) {
    return {{"status", "ok"},
            {"version", kServiceVersion},
            {"format_version", kModelFormatVersion},
            {"class_count", model.class_count()},
            {"parameters", model.net.parameter_count()},
            {"feature_size", kFeatureSize},
            {"model_path", info.path},
            {"model_file_bytes", info.file_bytes},
            {"target_fps", model.pipeline.target_fps.str()},
            {"window", model.pipeline.window},
            {"signs", model.registry.size()},
            {"active_sessions", active_sessions}};
}

std::string mime_type(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json" || ext == ".map") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".wasm") return "application/wasm";
    if (ext == ".txt") return "text/plain; charset=utf-8";
    return "application/octet-stream";
}

std::optional<std::filesystem::path> static_path(const std::filesystem::path& root, std::string_view target) {
    target = target.substr(0, target.find_first_of("?#"));
    if (target.empty() || target.front() != '/') return std::nullopt;
    std::string rel(target.substr(1));
    if (rel.empty() || rel.back() == '/') rel += "index.html";
    if (rel.find('\\') != std::string::npos || rel.find('\0') != std::string::npos) return std::nullopt;
    std::filesystem::path p;
    for (const auto& part : std::filesystem::path(rel)) {
        if (part == ".." || part == ".") return std::nullopt;
        p /= part;
    }
    return root / p;
}

struct Server::Impl {
    asio::io_context ioc;
    std::optional<tcp::acceptor> http;
    std::optional<tcp::acceptor> ndjson;
    std::vector<std::thread> accept_threads;

    std::mutex mu;
    std::condition_variable cv;
    std::set<int> open_fds;
    std::size_t live = 0;
    bool stopping = false;

    static void serve_http(Server& s, tcp::socket& sock);
    static void serve_websocket(Server& s, tcp::socket& sock, const http::request<http::string_body>& req);
    static void serve_ndjson(Server& s, tcp::socket& sock);
};

namespace {

tcp::acceptor listen_on(asio::io_context& ioc, const std::string& host, std::uint16_t port) {
    const tcp::endpoint ep(asio::ip::make_address(host), port);
    tcp::acceptor acc(ioc);
    acc.open(ep.protocol());
    acc.set_option(asio::socket_base::reuse_address(true));
    acc.bind(ep);
    acc.listen();
    return acc;
}

std::string dump(const nlohmann::json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

template <typename Body>
void finish(http::response<Body>& res, const http::request<http::string_body>& req) {
    res.version(req.version());
    res.keep_alive(req.keep_alive());
    res.set(http::field::server, std::string("slr/") + kServiceVersion);
    res.prepare_payload();
}

http::response<http::string_body> text_response(const http::request<http::string_body>& req, http::status status,
                                                std::string body, std::string type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, type);
    res.body() = std::move(body);
    finish(res, req);
    return res;
}

}  // namespace

Server::Server(const Model& model, ModelInfo info, const CollocationLexicon* lexicon, ServerConfig cfg)
    : model_(model), info_(std::move(info)), lexicon_(lexicon), cfg_(std::move(cfg)), impl_(std::make_unique<Impl>()) {
    cfg_.decoder.validate();
}

Server::~Server() { stop(); }

void Server::start() {
    Impl& im = *impl_;
    im.http.emplace(listen_on(im.ioc, cfg_.host, cfg_.port));
    port_ = im.http->local_endpoint().port();
    if (cfg_.ndjson_port) {
        im.ndjson.emplace(listen_on(im.ioc, cfg_.host, *cfg_.ndjson_port));
        ndjson_port_ = im.ndjson->local_endpoint().port();
    }

    // Each connection runs on its own detached thread; `live` counts them so
    // stop() can wait for all of them.
    auto spawn = [this](tcp::socket sock, bool ndjson) {
        Impl& im = *impl_;
        const int fd = sock.native_handle();
        {
            std::lock_guard lock(im.mu);
            if (im.stopping) return;
            im.open_fds.insert(fd);
            ++im.live;
        }
        std::thread([this, fd, ndjson, sock = std::move(sock)]() mutable {
            try {
                if (ndjson) {
                    Impl::serve_ndjson(*this, sock);
                } else {
                    Impl::serve_http(*this, sock);
                }
            } catch (const std::exception& e) {
                std::cerr << "connection error: " << e.what() << '\n';
            }
            Impl& im = *impl_;
            std::lock_guard lock(im.mu);
            im.open_fds.erase(fd);
            boost::system::error_code ignored;
            sock.close(ignored);
            --im.live;
            im.cv.notify_all();
        }).detach();
    };
    auto accept_loop = [this, spawn](tcp::acceptor& acc, bool ndjson) {
        for (;;) {
            tcp::socket sock(impl_->ioc);
            boost::system::error_code ec;
            acc.accept(sock, ec);
            {
                std::lock_guard lock(impl_->mu);
                if (impl_->stopping) return;
            }
            if (ec) continue;
            spawn(std::move(sock), ndjson);
        }
    };
    im.accept_threads.emplace_back([&im, accept_loop] { accept_loop(*im.http, false); });
    if (im.ndjson) im.accept_threads.emplace_back([&im, accept_loop] { accept_loop(*im.ndjson, true); });
}

void Server::stop() {
    if (!impl_) return;
    Impl& im = *impl_;
    {
        std::lock_guard lock(im.mu);
        if (im.stopping && im.accept_threads.empty()) return;
        im.stopping = true;
        // shutdown() on a listening socket wakes a blocked accept().
        if (im.http) ::shutdown(im.http->native_handle(), SHUT_RDWR);
        if (im.ndjson) ::shutdown(im.ndjson->native_handle(), SHUT_RDWR);
        for (int fd : im.open_fds) ::shutdown(fd, SHUT_RDWR);
    }
    for (std::thread& t : im.accept_threads) t.join();
    im.accept_threads.clear();
    std::unique_lock lock(im.mu);
    im.cv.wait(lock, [&] { return im.live == 0; });
    boost::system::error_code ignored;
    if (im.http) im.http->close(ignored);
    if (im.ndjson) im.ndjson->close(ignored);
    im.cv.notify_all();
}

void Server::wait() {
    Impl& im = *impl_;
    std::unique_lock lock(im.mu);
    im.cv.wait(lock, [&] { return im.stopping; });
}

void Server::Impl::serve_http(Server& s, tcp::socket& sock) {
    beast::flat_buffer buffer;
    for (;;) {
        http::request<http::string_body> req;
        boost::system::error_code ec;
        http::read(sock, buffer, req, ec);
        if (ec) return;

        const std::string target(req.target());
        if (websocket::is_upgrade(req)) {
            if (target.substr(0, target.find('?')) != "/stream") {
                http::write(sock, text_response(req, http::status::not_found, "no such endpoint\n", "text/plain"), ec);
                return;
            }
            serve_websocket(s, sock, req);
            return;
        }

        if (req.method() != http::verb::get && req.method() != http::verb::head) {
            http::write(sock, text_response(req, http::status::method_not_allowed, "GET only\n", "text/plain"), ec);
        } else if (target == "/healthz") {
            http::write(sock,
                        text_response(req, http::status::ok, dump(health_json(s.model_, s.info_, s.active_.load())),
                                      "application/json"),
                        ec);
        } else {
            std::optional<std::filesystem::path> file;
            if (s.cfg_.static_dir) file = static_path(*s.cfg_.static_dir, target);
            std::error_code fs_ec;
            if (!file || !std::filesystem::is_regular_file(*file, fs_ec)) {
                http::write(sock, text_response(req, http::status::not_found, "not found\n", "text/plain"), ec);
            } else {
                std::ifstream in(*file, std::ios::binary);
                std::ostringstream body;
                body << in.rdbuf();
                auto res = text_response(req, http::status::ok, body.str(), mime_type(*file));
                if (req.method() == http::verb::head) res.body().clear();
                http::write(sock, res, ec);
            }
        }
        if (ec || !req.keep_alive()) return;
    }
}

void Server::Impl::serve_websocket(Server& s, tcp::socket& sock, const http::request<http::string_body>& req) {
    websocket::stream<tcp::socket&> ws(sock);
    ws.accept(req);
    ++s.active_;
    struct Release {
        std::atomic<std::size_t>& n;
        ~Release() { --n; }
    } release{s.active_};

    Session session(s.model_, s.cfg_.decoder, s.lexicon_, "ws-" + std::to_string(s.next_session_++));
    for (;;) {
        beast::flat_buffer buffer;
        boost::system::error_code ec;
        ws.read(buffer, ec);
        if (ec) return;
        std::optional<nlohmann::json> reply;
        if (!ws.got_text()) {
            reply = error_message("binary messages are not supported");
        } else {
            reply = session.handle_text(beast::buffers_to_string(buffer.data()));
        }
        if (reply) {
            ws.text(true);
            ws.write(asio::buffer(dump(*reply)), ec);
            if (ec) return;
        }
    }
}

void Server::Impl::serve_ndjson(Server& s, tcp::socket& sock) {
    ++s.active_;
    struct Release {
        std::atomic<std::size_t>& n;
        ~Release() { --n; }
    } release{s.active_};

    Session session(s.model_, s.cfg_.decoder, s.lexicon_, "tcp-" + std::to_string(s.next_session_++));
    asio::streambuf buf;
    for (;;) {
        boost::system::error_code ec;
        asio::read_until(sock, buf, '\n', ec);
        if (ec) return;
        std::istream in(&buf);
        std::string line;
        std::getline(in, line);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (const auto reply = session.handle_text(line)) {
            asio::write(sock, asio::buffer(dump(*reply) + "\n"), ec);
            if (ec) return;
        }
    }
}

}  // namespace slr
