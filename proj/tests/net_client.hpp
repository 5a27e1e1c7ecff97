#pragma once

// Minimal synchronous clients for the service: HTTP GET, WebSocket and NDJSON.

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/read_until.hpp>
#include <boost/asio/streambuf.hpp>
#include <boost/asio/write.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <istream>
#include <string>

#include "json.hpp"

namespace slr::test {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct HttpReply {
    unsigned status = 0;
    std::string content_type;
    std::string body;
};

inline HttpReply http_get(std::uint16_t port, const std::string& target, http::verb verb = http::verb::get) {
    asio::io_context io;
    tcp::socket sock(io);
    sock.connect({asio::ip::make_address("127.0.0.1"), port});
    http::request<http::empty_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(sock, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(sock, buf, res);
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_both, ec);
    return {res.result_int(), std::string(res[http::field::content_type]), res.body()};
}

class WsClient {
public:
    explicit WsClient(std::uint16_t port, const std::string& target = "/stream") : ws_(io_) {
        ws_.next_layer().connect({asio::ip::make_address("127.0.0.1"), port});
        ws_.handshake("127.0.0.1", target);
    }
    ~WsClient() {
        beast::error_code ec;
        ws_.close(websocket::close_code::normal, ec);
    }

    void send(const nlohmann::json& j) {
        ws_.text(true);
        ws_.write(asio::buffer(j.dump()));
    }
    void send_binary(const std::string& bytes) {
        ws_.binary(true);
        ws_.write(asio::buffer(bytes));
    }
    void send_text(const std::string& s) {
        ws_.text(true);
        ws_.write(asio::buffer(s));
    }
    nlohmann::json receive() {
        beast::flat_buffer buf;
        ws_.read(buf);
        return nlohmann::json::parse(beast::buffers_to_string(buf.data()));
    }

private:
    asio::io_context io_;
    websocket::stream<tcp::socket> ws_;
};

class NdjsonClient {
public:
    explicit NdjsonClient(std::uint16_t port) : sock_(io_) {
        sock_.connect({asio::ip::make_address("127.0.0.1"), port});
    }
    void send_line(const std::string& line) { asio::write(sock_, asio::buffer(line + "\n")); }
    void send(const nlohmann::json& j) { send_line(j.dump()); }
    nlohmann::json receive() {
        asio::read_until(sock_, buf_, '\n');
        std::istream in(&buf_);
        std::string line;
        std::getline(in, line);
        return nlohmann::json::parse(line);
    }

private:
    asio::io_context io_;
    tcp::socket sock_;
    asio::streambuf buf_;
};

}  // namespace slr::test
