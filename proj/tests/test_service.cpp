#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "fixture.hpp"
#include "net_client.hpp"
#include "slr/cli.hpp"
#include "slr/config.hpp"
#include "slr/record_io.hpp"
#include "slr/server.hpp"
#include "slr/session.hpp"

using namespace slr;
using namespace slr::test;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("slr_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json hello(const Fps& fps) { return {{"type", "hello"}, {"fps", fps.str()}}; }

/// Replays a video through a session and returns the flush reply.
json replay(Session& s, const VideoSequence& v, std::vector<int>* streamed = nullptr) {
    s.handle(hello(v.fps));
    for (const FrameRecord& f : v.frames) {
        const auto r = s.handle(frame_to_json(f));
        if (r && streamed) {
            for (int id : r->at("emitted_ids")) streamed->push_back(id);
        }
    }
    return *s.handle(json{{"type", "flush"}});
}

struct Cli {
    int code = 0;
    std::string out, err;
};

Cli cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Cli r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

CollocationLexicon fixture_lexicon() {
    CollocationLexicon lex;
    lex.add({1, 2}, 90);
    lex.set_gloss(90, "ONE_TWO");
    return lex;
}

}  // namespace

TEST_CASE("session handshake and first frames") {
    const Model& m = fixture_model();
    Session s(m, DecoderConfig{}, nullptr, "s1");
    const json ready = *s.handle_text(R"({"type":"hello","fps":30})");
    CHECK(ready.at("type") == "ready");
    CHECK(ready.at("session") == "s1");
    CHECK(ready.at("target_fps") == 5.0);
    CHECK(ready.at("window") == 3);
    CHECK(ready.at("class_count") == 5);
    CHECK(s.fps() == Fps(30));
    CHECK(s.handle_text(R"({"type":"hello","fps":"30000/1001"})")->at("type") == "ready");
    CHECK(s.fps() == Fps(30000, 1001));

    s.handle(hello(Fps(5)));
    const VideoSequence v = fixture_stream(1);
    CHECK_FALSE(s.handle(frame_to_json(v.frames[0])).has_value());
    // Landmark-free frames count toward timing.
    CHECK_FALSE(s.handle_text(R"({"type":"frame","t_ms":200,"left":null,"right":null,"pose":null})").has_value());
    const auto third = s.handle(json{{"type", "frame"}});
    REQUIRE(third.has_value());
    CHECK(third->at("type") == "prediction");
}

TEST_CASE("malformed messages get an error and the session stays open") {
    const Model& m = fixture_model();
    Session s(m, DecoderConfig{}, nullptr, "s");
    s.handle(hello(Fps(5)));
    const json bad_hand = {{"type", "frame"}, {"left", json::array({{0, 0, 0}})}};
    const std::vector<json> replies = {
        *s.handle_text("not json"),
        *s.handle_text("[1,2]"),
        *s.handle_text(R"({"type":"dance"})"),
        *s.handle_text(R"({"fps":3})"),
        *s.handle(bad_hand),
        *s.handle_text(R"({"type":"frame","pose":[[0,0]]})"),
        *s.handle_text(R"({"type":"frame","t_ms":"soon"})"),
        *s.handle_text(R"({"type":"hello","fps":0})"),
        *s.handle_text(R"({"type":"hello","fps":true})"),
    };
    for (const json& r : replies) CHECK(r.at("type") == "error");
    CHECK(replies[4].at("message").get<std::string>().find("21") != std::string::npos);

    Session timed(m, DecoderConfig{}, nullptr, "t");
    timed.handle_text(R"({"type":"hello"})");
    CHECK(timed.handle_text(R"({"type":"frame"})")->at("message").get<std::string>().find("t_ms") !=
          std::string::npos);

    s.handle(hello(Fps(5)));
    const VideoSequence v = fixture_stream(2);
    int predictions = 0;
    for (std::size_t i = 0; i < 5; ++i) predictions += s.handle(frame_to_json(v.frames[i])).has_value();
    CHECK(predictions == 3);
}

TEST_CASE("predictions list the top classes in descending order") {
    const Model& m = fixture_model();
    Session s(m, DecoderConfig{}, nullptr, "s");
    const VideoSequence v = fixture_stream(3);
    s.handle(hello(v.fps));
    std::size_t seen = 0;
    for (const FrameRecord& f : v.frames) {
        const auto r = s.handle(frame_to_json(f));
        CHECK(s.buffered() <= 2 * m.pipeline.window);
        if (!r) continue;
        ++seen;
        const json& top = r->at("top");
        REQUIRE(top.size() == kTopK);
        for (std::size_t i = 0; i < top.size(); ++i) {
            const double p = top[i].at("p");
            CHECK(p <= 1.0);
            CHECK(p >= 0.0);
            if (i) CHECK(p <= top[i - 1].at("p").get<double>());
            CHECK(top[i].at("gloss").is_string());
        }
        CHECK(r->at("emitted").size() == r->at("emitted_ids").size());
    }
    CHECK(seen > 10);
}

TEST_CASE("session transcript equals offline decoding") {
    const Model& m = fixture_model();
    const CollocationLexicon lex = fixture_lexicon();
    std::size_t tokens = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const VideoSequence v = fixture_stream(100 + seed, 5);
        for (const CollocationLexicon* l : {static_cast<const CollocationLexicon*>(nullptr), &lex}) {
            Session s(m, DecoderConfig{}, l, "s");
            std::vector<int> streamed;
            const json done = replay(s, v, &streamed);
            for (int id : done.at("emitted_ids")) streamed.push_back(id);
            const std::vector<int> offline = decode_video(m, v, DecoderConfig{}, l);
            CHECK(done.at("transcript_ids").get<std::vector<int>>() == offline);
            CHECK(streamed == offline);
            CHECK(done.at("transcript").size() == offline.size());
            tokens += offline.size();
        }
    }
    // The trained model does recognise the recorded signs.
    CHECK(tokens >= 30);

    // Flush resets: replaying again gives the same result.
    Session s(m, DecoderConfig{}, nullptr, "s");
    const VideoSequence v = fixture_stream(7);
    const json a = replay(s, v);
    const json b = replay(s, v);
    CHECK(a.at("transcript_ids") == b.at("transcript_ids"));
}

TEST_CASE("interleaved sessions are isolated") {
    const Model& m = fixture_model();
    const VideoSequence va = fixture_stream(11), vb = fixture_stream(12);
    Session alone_a(m, DecoderConfig{}, nullptr, "a"), alone_b(m, DecoderConfig{}, nullptr, "b");
    const json ra = replay(alone_a, va), rb = replay(alone_b, vb);

    Session a(m, DecoderConfig{}, nullptr, "a"), b(m, DecoderConfig{}, nullptr, "b");
    a.handle(hello(va.fps));
    b.handle(hello(vb.fps));
    const std::size_t n = std::max(va.size(), vb.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i < va.size()) a.handle(frame_to_json(va.frames[i]));
        if (i < vb.size()) b.handle(frame_to_json(vb.frames[i]));
    }
    CHECK(*a.handle(json{{"type", "flush"}}) == ra);
    CHECK(*b.handle(json{{"type", "flush"}}) == rb);
}

TEST_CASE("timestamp-driven sessions") {
    const Model& m = fixture_model();
    Session s(m, DecoderConfig{}, nullptr, "s");
    s.handle_text(R"({"type":"hello"})");
    const VideoSequence v = fixture_stream(13);
    std::size_t predictions = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto r = s.handle(frame_to_json(v.frames[i], 1000.0 * static_cast<double>(i) / 30.0));
        if (r) {
            CHECK(r->at("t_ms").is_number());
            ++predictions;
        }
    }
    // 30 fps down to 5 fps, less the first window.
    const double expect = static_cast<double>(v.size()) / 6.0 - 2.0;
    CHECK(static_cast<double>(predictions) >= expect - 1.0);
    CHECK(static_cast<double>(predictions) <= expect + 1.0);
    const auto back = s.handle(frame_to_json(v.frames[0], 0.0));
    CHECK(back->at("type") == "error");
}

TEST_CASE("config documents") {
    const AppConfig defaults;
    CHECK(defaults.training.learning_rate == 1e-4);
    CHECK(defaults.training.weight_decay == 1e-5);
    CHECK(defaults.training.epochs == 40);
    CHECK(defaults.training.batch_size == 64);
    CHECK(defaults.pipeline.window == 3);

    AppConfig c;
    c.training.epochs = 7;
    c.pipeline.window = 4;
    c.augment.copies = 2;
    c.decoder.min_run = 2;
    c.model.head_dims = {100};
    const AppConfig back = AppConfig::from_json(c.to_json());
    CHECK(back.training.epochs == 7);
    CHECK(back.pipeline.window == 4);
    CHECK(back.augment.copies == 2);
    CHECK(back.decoder.min_run == 2);
    CHECK(back.model.head_dims == std::vector<int>{100});

    const AppConfig partial = AppConfig::from_json(json::parse(R"({"training": {"epochs": 3}})"));
    CHECK(partial.training.epochs == 3);
    CHECK(partial.training.learning_rate == 1e-4);
    CHECK(AppConfig::from_json(json::object()).decoder.min_run == 3);

    CHECK_THROWS_AS(AppConfig::from_json(json::parse(R"({"trainign": {}})")), Error);
    CHECK_THROWS_AS(AppConfig::from_json(json::parse(R"({"training": 5})")), Error);
    CHECK_THROWS_AS(AppConfig::from_json(json::parse(R"({"training": {"epochs": 0}})")), Error);

    const fs::path dir = temp_dir("config");
    std::ofstream(dir / "c.json") << c.to_json().dump();
    CHECK(AppConfig::load(dir / "c.json").training.epochs == 7);
    std::ofstream(dir / "bad.json") << "{";
    CHECK_THROWS_AS(AppConfig::load(dir / "bad.json"), Error);
    CHECK_THROWS_AS(AppConfig::load(dir / "missing.json"), Error);
}

TEST_CASE("static paths") {
    const fs::path root = "/srv/www";
    CHECK(static_path(root, "/") == root / "index.html");
    CHECK(static_path(root, "/app.js") == root / "app.js");
    CHECK(static_path(root, "/css/site.css?v=2") == root / "css/site.css");
    CHECK_FALSE(static_path(root, "/../etc/passwd").has_value());
    CHECK_FALSE(static_path(root, "/a/../../b").has_value());
    CHECK_FALSE(static_path(root, "/a\\b").has_value());
    CHECK_FALSE(static_path(root, "relative").has_value());
    CHECK(mime_type("index.html").find("text/html") == 0);
    CHECK(mime_type("app.js").find("javascript") != std::string::npos);
    CHECK(mime_type("x.json") == "application/json");
}

TEST_CASE("server endpoints") {
    const Model& m = fixture_model();
    const fs::path www = temp_dir("www");
    std::ofstream(www / "index.html") << "<html>hi</html>";
    std::ofstream(www / "app.js") << "console.log(1)";

    const CollocationLexicon lex = fixture_lexicon();
    ServerConfig cfg;
    cfg.port = 0;
    cfg.ndjson_port = 0;
    cfg.static_dir = www;
    Server server(m, ModelInfo{"fixture.slrm", 1234}, &lex, cfg);
    server.start();
    REQUIRE(server.port() != 0);
    REQUIRE(server.ndjson_port().has_value());

    SUBCASE("healthz") {
        const HttpReply r = http_get(server.port(), "/healthz");
        CHECK(r.status == 200);
        CHECK(r.content_type == "application/json");
        const json h = json::parse(r.body);
        CHECK(h.at("status") == "ok");
        CHECK(h.at("class_count") == 5);
        CHECK(h.at("model_file_bytes") == 1234);
        CHECK(h.at("version") == kServiceVersion);
        CHECK(h.at("feature_size") == 947);
        CHECK(h.at("parameters") == m.net.parameter_count());
    }
    SUBCASE("static files") {
        HttpReply r = http_get(server.port(), "/");
        CHECK(r.status == 200);
        CHECK(r.body == "<html>hi</html>");
        CHECK(r.content_type.find("text/html") == 0);
        r = http_get(server.port(), "/app.js");
        CHECK(r.body == "console.log(1)");
        CHECK(http_get(server.port(), "/missing.css").status == 404);
        CHECK(http_get(server.port(), "/../secret").status == 404);
        CHECK(http_get(server.port(), "/healthz", http::verb::post).status == 405);
    }
    SUBCASE("websocket stream") {
        const VideoSequence v = fixture_stream(21, 5);
        const std::vector<int> offline = decode_video(m, v, cfg.decoder, &lex);
        WsClient ws(server.port());
        ws.send(hello(v.fps));
        CHECK(ws.receive().at("type") == "ready");
        CHECK(server.active_sessions() == 1);
        // The reply order follows the request order, so count the expected predictions.
        WindowStream counter(m.pipeline);
        counter.set_source_fps(v.fps);
        std::vector<int> streamed;
        for (const FrameRecord& f : v.frames) {
            ws.send(frame_to_json(f));
            if (counter.push(f).empty()) continue;
            const json r = ws.receive();
            REQUIRE(r.at("type") == "prediction");
            for (int id : r.at("emitted_ids")) streamed.push_back(id);
        }
        ws.send_binary("\x01\x02");
        CHECK(ws.receive().at("type") == "error");
        ws.send_text("{");
        CHECK(ws.receive().at("type") == "error");
        ws.send(json{{"type", "flush"}});
        const json done = ws.receive();
        CHECK(done.at("type") == "flushed");
        for (int id : done.at("emitted_ids")) streamed.push_back(id);
        CHECK(streamed == offline);
        CHECK(done.at("transcript_ids").get<std::vector<int>>() == offline);
    }
    SUBCASE("concurrent websocket sessions") {
        const VideoSequence va = fixture_stream(31), vb = fixture_stream(32);
        std::vector<int> ra, rb;
        auto run = [&](const VideoSequence& v, std::vector<int>& out) {
            WsClient ws(server.port());
            ws.send(hello(v.fps));
            ws.receive();
            for (const FrameRecord& f : v.frames) ws.send(frame_to_json(f));
            ws.send(json{{"type", "flush"}});
            for (;;) {
                const json r = ws.receive();
                if (r.at("type") == "flushed") {
                    out = r.at("transcript_ids").get<std::vector<int>>();
                    break;
                }
            }
        };
        std::thread ta(run, std::cref(va), std::ref(ra));
        std::thread tb(run, std::cref(vb), std::ref(rb));
        ta.join();
        tb.join();
        CHECK(ra == decode_video(m, va, cfg.decoder, &lex));
        CHECK(rb == decode_video(m, vb, cfg.decoder, &lex));
    }
    SUBCASE("websocket only on /stream") {
        CHECK_THROWS(WsClient(server.port(), "/other"));
    }
    SUBCASE("ndjson") {
        const VideoSequence v = fixture_stream(41);
        NdjsonClient c(*server.ndjson_port());
        c.send(hello(v.fps));
        CHECK(c.receive().at("type") == "ready");
        c.send_line("garbage");
        CHECK(c.receive().at("type") == "error");
        for (const FrameRecord& f : v.frames) c.send(frame_to_json(f));
        c.send(json{{"type", "flush"}});
        json r;
        do {
            r = c.receive();
        } while (r.at("type") == "prediction");
        CHECK(r.at("type") == "flushed");
        CHECK(r.at("transcript_ids").get<std::vector<int>>() == decode_video(m, v, cfg.decoder, &lex));
    }
    server.stop();
    CHECK(server.active_sessions() == 0);
}

TEST_CASE("server stops with open connections") {
    const Model& m = fixture_model();
    ServerConfig cfg;
    cfg.port = 0;
    Server server(m, ModelInfo{}, nullptr, cfg);
    server.start();
    WsClient idle(server.port());
    server.stop();
    CHECK(server.active_sessions() == 0);
}

TEST_CASE("command line end to end") {
    const fs::path dir = temp_dir("cli");
    const std::string data = (dir / "data").string(), model = (dir / "m.slrm").string();

    Cli r = cli({"synth", "--classes", "5", "--per-class", "20", "--out", data, "--seed", "2"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(fs::path(data) / "signs.json"));

    r = cli({"train", "--data", data, "--out", model, "--seed", "1", "--epochs", "8", "--quiet"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::file_size(model) > 0);
    CHECK(r.out.find("wrote") != std::string::npos);

    r = cli({"eval", "--model", model, "--data", data, "--metric", "isr"});
    REQUIRE(r.code == 0);
    std::istringstream line(r.out);
    std::string name;
    double value = -1;
    line >> name >> value;
    CHECK(name == "isr");
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);

    r = cli({"eval", "--model", model, "--data", data, "--metric", "sfsr", "--json"});
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("metric") == "sfsr");
    CHECK(report.at("confusion").size() == 6);

    r = cli({"bench", "--model", model, "--iters", "200"});
    REQUIRE(r.code == 0);
    for (const char* key : {"iterations 200", "median_ms ", "p95_ms ", "p99_ms "}) {
        CHECK(r.out.find(key) != std::string::npos);
    }

    const std::string features = (dir / "features.csv").string();
    r = cli({"encode", "--data", data, "--out", features, "--model", model});
    REQUIRE(r.code == 0);
    std::ifstream in(features);
    std::string header;
    std::getline(in, header);
    CHECK(split_csv_line(header).size() == 949);
    CHECK(header.rfind("f0,f1,", 0) == 0);

    r = cli({"decode", "--model", model, "--data", data, "--json"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).size() == 100);

    const fs::path empty = temp_dir("cli_empty");
    r = cli({"eval", "--model", model, "--data", empty.string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("empty dataset") != std::string::npos);

    CHECK(cli({"eval", "--model", model, "--data", data, "--bogus"}).code != 0);
    CHECK(cli({"eval", "--model", (dir / "none.slrm").string(), "--data", data}).code != 0);
    CHECK(cli({"serve", "--model", model, "--target-fps", "30"}).code != 0);
    CHECK(cli({"frobnicate"}).code != 0);
    CHECK(cli({}).code != 0);
}
