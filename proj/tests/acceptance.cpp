// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "net_client.hpp"
#include "slr/cli.hpp"
#include "slr/decoder.hpp"
#include "slr/evaluation.hpp"
#include "slr/features.hpp"
#include "slr/model.hpp"
#include "slr/preprocess.hpp"
#include "slr/record_io.hpp"
#include "slr/server.hpp"
#include "slr/session.hpp"
#include "slr/synthetic.hpp"
#include "support.hpp"

using namespace slr;
using namespace slr::test;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

int run(const std::vector<std::string>& args, std::string* out = nullptr) {
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    if (out) *out = o.str();
    if (code != 0) std::cerr << e.str();
    return code;
}

fs::path work_dir() {
    const fs::path d = fs::temp_directory_path() / "slr_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

FrameRecord transform(const FrameRecord& f, const Rigid& r) {
    FrameRecord o = f;
    if (o.left) o.left = r.apply(*o.left);
    if (o.right) o.right = r.apply(*o.right);
    if (o.pose) o.pose = r.apply(*o.pose);
    return o;
}

Outcome feature_layout() {
    std::mt19937_64 rng(1);
    std::size_t bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const FeatureVector v = encode_window(fill_missing(random_window(rng, 3, 0.7)));
        bool ok = v.size() == 947;
        for (std::size_t s = 0; s < kSegmentCount; ++s) {
            const auto seg = v.segment(static_cast<Segment>(s));
            ok = ok && static_cast<std::size_t>(seg.data() - v.values().data()) == kSegmentOffsets[s] &&
                 seg.size() == kSegmentOffsets[s + 1] - kSegmentOffsets[s];
        }
        for (double x : v.values()) ok = ok && std::isfinite(x);
        bad += !ok;
    }
    return {bad == 0, "1000 windows, " + std::to_string(bad) + " malformed"};
}

Outcome encoder_invariance() {
    std::mt19937_64 rng(2);
    double hand = 0.0, loc = 0.0, move = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const HandLandmarks h = random_hand(rng);
        const Rigid r = random_rigid(rng);
        const auto a = handshape(h), b = handshape(r.apply(h));
        for (std::size_t k = 0; k < a.size(); ++k) hand = std::max(hand, rel_err(a[k], b[k]));
    }
    for (int t = 0; t < 1000; ++t) {
        const FrameRecord f = random_frame(rng, 1.0);
        Rigid r = random_rigid(rng);
        r.r[0] = r.r[4] = r.r[8] = 1.0;
        r.r[1] = r.r[2] = r.r[3] = r.r[5] = r.r[6] = r.r[7] = 0.0;
        const FrameRecord g = transform(f, r);
        const auto a = location_hand(f.right, body_frame(f.pose)), b = location_hand(g.right, body_frame(g.pose));
        for (std::size_t k = 0; k < a.size(); ++k) loc = std::max(loc, rel_err(a[k], b[k]));
        const auto pa = location_pose(f.pose, body_frame(f.pose)), pb = location_pose(g.pose, body_frame(g.pose));
        for (std::size_t k = 0; k < pa.size(); ++k) loc = std::max(loc, rel_err(pa[k], pb[k]));

        LandmarkWindow w;
        w.frames.assign(3, f);
        const auto m = movement(w, body_frame(f.pose), body_frame(f.pose));
        for (double x : m) move = std::max(move, std::abs(x));
    }
    const bool pass = hand < 1e-9 && loc < 1e-9 && move == 0.0;
    return {pass, "handshape rel " + fmt(hand, 3) + ", location rel " + fmt(loc, 3) + ", movement on constant windows " +
                      fmt(move, 3)};
}

std::vector<double> flatten(const Network<double>& n) {
    std::vector<double> out;
    for (const DenseLayer<double>* l : n.layers()) {
        out.insert(out.end(), l->weight.begin(), l->weight.end());
        out.insert(out.end(), l->bias.begin(), l->bias.end());
    }
    return out;
}

Outcome gradient_check() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(3);
    Network<double> net = Network<double>::initialise(ModelConfig::uniform(5, {8, 4}, {16}, 0.0, 3));
    for (DenseLayer<double>* l : net.layers()) {
        for (double& b : l->bias) b = uniform(rng, -0.1, 0.1);
    }
    const std::size_t batch = 4;
    std::vector<double> x(batch * kFeatureSize);
    for (double& v : x) v = uniform(rng, -1, 1);
    const std::vector<int> y = {0, 2, 4, 1};
    auto loss = [&] {
        const auto p = net.forward(x, batch, false, nullptr, kernels::Backend::Serial);
        double s = 0.0;
        for (std::size_t i = 0; i < batch; ++i) s += cross_entropy(std::span<const double>(p).subspan(i * 5, 5), y[i]);
        return s / batch;
    };
    const auto g = flatten(gradients(net, std::span<const double>(x), std::span<const int>(y), false, 0,
                                     kernels::Backend::Serial));
    std::vector<double*> params;
    for (DenseLayer<double>* l : net.layers()) {
        for (double& w : l->weight) params.push_back(&w);
        for (double& b : l->bias) params.push_back(&b);
    }
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = *params[k];
        *params[k] = saved + h;
        const double up = loss();
        *params[k] = saved - h;
        const double down = loss();
        *params[k] = saved;
        const double num = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(num - g[k]) / std::max({std::abs(num), std::abs(g[k]), 1e-6}));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-5 && secs < 60.0, std::to_string(params.size()) + " parameters, max rel err " + fmt(worst, 3) +
                                             ", " + fmt(secs, 3) + " s"};
}

Outcome loss_sanity() {
    std::mt19937_64 rng(4);
    bool pass = true;
    std::string detail;
    for (int c : {2, 10, 343}) {
        Network<float> net = Network<float>::initialise(ModelConfig::uniform(c, {8}, {16}, 0.0, 1));
        std::fill(net.output().weight.begin(), net.output().weight.end(), 0.0f);
        std::fill(net.output().bias.begin(), net.output().bias.end(), 0.0f);
        std::vector<float> x(kFeatureSize);
        for (float& v : x) v = static_cast<float>(uniform(rng, -1, 1));
        const auto p = net.forward(x, 1);
        const double l = cross_entropy(p, c - 1), ref = std::log(static_cast<double>(c));
        pass = pass && std::abs(l - ref) < 0.01 * ref;
        detail += "C=" + std::to_string(c) + " loss " + fmt(l, 6) + " ln " + fmt(ref, 6) + "; ";
    }
    return {pass, detail};
}

Outcome synthetic_end_to_end(const fs::path& dir) {
    const auto t0 = Clock::now();
    const std::string data = (dir / "synth").string(), model = (dir / "model.slrm").string();
    if (run({"synth", "--classes", "20", "--per-class", "60", "--out", data, "--test-fraction", "0.2", "--seed",
             "0"}) != 0) {
        return {false, "synth failed"};
    }
    if (run({"train", "--data", data + "/train", "--out", model, "--quiet"}) != 0) return {false, "train failed"};
    std::string isr_out, sfsr_out;
    if (run({"eval", "--model", model, "--data", data + "/test", "--metric", "isr"}, &isr_out) != 0 ||
        run({"eval", "--model", model, "--data", data + "/test", "--metric", "sfsr"}, &sfsr_out) != 0) {
        return {false, "eval failed"};
    }
    auto value = [](const std::string& s) {
        std::istringstream in(s);
        std::string name;
        double v = -1;
        in >> name >> v;
        return v;
    };
    const double isr_v = value(isr_out), sfsr_v = value(sfsr_out), secs = seconds_since(t0);
    return {isr_v >= 0.95 && sfsr_v >= 0.90 && secs < 600,
            "held-out ISR " + fmt(isr_v) + ", SFSR " + fmt(sfsr_v) + ", " + fmt(secs, 3) + " s"};
}

Outcome size_budget(const fs::path& dir) {
    Model m;
    m.net = Network<float>::initialise(ModelConfig::defaults(343));
    const std::size_t bytes = save_model(m, dir / "default343.slrm");
    return {bytes < 10'000'000 && fs::file_size(dir / "default343.slrm") == bytes,
            std::to_string(m.net.parameter_count()) + " parameters, " + std::to_string(bytes) + " bytes"};
}

Outcome latency_budget() {
    Model m;
    m.net = Network<float>::initialise(ModelConfig::defaults(343));
    const LatencyStats s = latency_bench(m, 1000);
    return {s.iterations >= 1000 && s.median_ms < 10.0,
            std::to_string(s.iterations) + " iterations, median " + fmt(s.median_ms) + " ms, p95 " + fmt(s.p95_ms) +
                " ms, p99 " + fmt(s.p99_ms) + " ms"};
}

std::vector<int> collapse_oracle(const std::vector<int>& e) {
    std::vector<int> out;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if ((i == 0 || e[i] != e[i - 1]) && e[i] != 0) out.push_back(e[i]);
    }
    return out;
}

Outcome decoder_oracle() {
    DecoderConfig cfg;
    cfg.min_run = 1;
    cfg.confidence_threshold = 1e-9;
    std::size_t cases = 0, mismatches = 0;
    for (int len = 0; len <= 6; ++len) {
        const int total = static_cast<int>(std::pow(3, len));
        for (int code = 0; code < total; ++code) {
            std::vector<int> seq;
            for (int i = 0, c = code; i < len; ++i, c /= 3) seq.push_back(c % 3);
            StreamDecoder d(cfg);
            std::vector<int> online;
            for (int cls : seq) {
                std::vector<float> p(3, 0.05f);
                p[static_cast<std::size_t>(cls)] = 0.9f;
                if (auto t = d.step(p)) online.push_back(*t);
            }
            ++cases;
            mismatches += online != collapse_oracle(seq) || online != collapse(seq);
        }
    }
    return {mismatches == 0, std::to_string(cases) + " sequences, " + std::to_string(mismatches) + " mismatches"};
}

std::vector<int> merge_oracle(const std::vector<int>& t, const std::vector<std::pair<std::vector<int>, int>>& lex) {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < t.size()) {
        std::size_t best_len = 0;
        int best = 0;
        for (const auto& [key, merged] : lex) {
            if (key.size() > best_len && i + key.size() <= t.size() &&
                std::equal(key.begin(), key.end(), t.begin() + static_cast<long>(i))) {
                best_len = key.size();
                best = merged;
            }
        }
        if (best_len) {
            out.push_back(best);
            i += best_len;
        } else {
            out.push_back(t[i++]);
        }
    }
    return out;
}

Outcome ngrammer() {
    CollocationLexicon lex;
    lex.add({1, 2}, 3);  // CAR PERSON -> DRIVER
    SignRegistry reg;
    reg.add({1, "CAR", "car", Handedness::Two, true, {}});
    reg.add({2, "PERSON", "person", Handedness::Two, true, {}});
    reg.add({3, "DRIVER", "driver", Handedness::Two, true, {}});
    const auto merged = ngram_merge(std::vector<int>{1, 2}, lex);
    const bool driver = merged.size() == 1 && reg.gloss(merged[0]) == "DRIVER";

    std::mt19937_64 rng(9);
    std::size_t failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        CollocationLexicon l;
        std::vector<std::pair<std::vector<int>, int>> entries;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < n; ++k) {
            std::vector<int> key(2 + rng() % 3);
            for (int& v : key) v = 1 + static_cast<int>(rng() % 4);
            if (l.entries().count(key)) continue;
            l.add(key, 100 + k);
            entries.emplace_back(key, 100 + k);
        }
        std::vector<int> tokens(rng() % 25);
        for (int& t : tokens) t = 1 + static_cast<int>(rng() % 4);
        const auto once = ngram_merge(tokens, l);
        failures += once != merge_oracle(tokens, entries) || ngram_merge(once, l) != once;
    }
    return {driver && failures == 0, std::string("CAR PERSON -> ") + (driver ? "DRIVER" : "?") + ", " +
                                         std::to_string(failures) + " of 1000 randomized trials failed"};
}

Outcome resampler() {
    std::mt19937_64 rng(10);
    const VideoSequence v30 = random_video(rng, 37, Fps(30), 1, "v", 0.8);
    const VideoSequence same = resample(v30, Fps(30));
    bool identity = same.frames.size() == v30.frames.size();
    for (std::size_t i = 0; identity && i < same.frames.size(); ++i) identity = same.frames[i] == v30.frames[i];
    const VideoSequence v24 = random_video(rng, 24, Fps(24));
    const std::size_t n5 = resample(v24, Fps(5)).frames.size();
    return {identity && n5 == 5, std::string("identity ") + (identity ? "exact" : "differs") + ", 24 frames at 24 fps -> " +
                                     std::to_string(n5) + " at 5 fps"};
}

Outcome online_offline(const fs::path& dir) {
    const std::string data = (dir / "synth").string();
    const fs::path model_path = dir / "model.slrm";
    if (!fs::exists(model_path)) return {false, "no trained model"};
    const Model model = load_model(model_path);

    // Ten continuous recordings of the trained signs, written as a dataset.
    SynthConfig cfg;
    cfg.class_count = 20;
    cfg.samples_per_class = 60;
    const auto templates = synth_templates(cfg);
    const SignRegistry registry = load_dataset(data + "/test").registry;
    std::mt19937_64 rng(11);
    Dataset streams{{}, registry};
    for (int i = 0; i < 10; ++i) {
        std::vector<int> ids;
        const int n = 3 + static_cast<int>(rng() % 4);
        for (int k = 0; k < n; ++k) ids.push_back(1 + static_cast<int>(rng() % templates.size()));
        streams.videos.push_back(render_stream(templates, ids, "rec" + std::to_string(i), cfg, 6, rng));
    }
    const fs::path rec_dir = dir / "recordings";
    save_dataset(streams, rec_dir);
    std::string decoded;
    if (run({"decode", "--model", model_path.string(), "--data", rec_dir.string(), "--json"}, &decoded) != 0) {
        return {false, "decode failed"};
    }
    const json batch = json::parse(decoded);

    ServerConfig sc;
    sc.port = 0;
    Server server(model, ModelInfo{model_path.string(), fs::file_size(model_path)}, nullptr, sc);
    server.start();
    std::size_t matches = 0, tokens = 0;
    for (const VideoSequence& v : load_dataset(rec_dir).videos) {
        WsClient ws(server.port());
        ws.send({{"type", "hello"}, {"fps", v.fps.str()}});
        ws.receive();
        for (const FrameRecord& f : v.frames) ws.send(frame_to_json(f));
        ws.send({{"type", "flush"}});
        json r;
        do {
            r = ws.receive();
        } while (r.at("type") == "prediction");
        const auto online = r.at("transcript_ids").get<std::vector<int>>();
        const auto offline = batch.at(v.video_id).get<std::vector<int>>();
        matches += online == offline;
        tokens += offline.size();
    }
    server.stop();
    return {matches == 10, std::to_string(matches) + " of 10 recordings token-identical (" + std::to_string(tokens) +
                               " tokens)"};
}

}  // namespace

int main() {
    const fs::path dir = work_dir();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"feature layout", feature_layout},
        {"encoder invariance", encoder_invariance},
        {"gradient check", gradient_check},
        {"loss sanity", loss_sanity},
        {"synthetic end-to-end", [&] { return synthetic_end_to_end(dir); }},
        {"size budget", [&] { return size_budget(dir); }},
        {"latency budget", latency_budget},
        {"decoder oracle", decoder_oracle},
        {"n-gram merging", ngrammer},
        {"resampler", resampler},
        {"online/offline equivalence", [&] { return online_offline(dir); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
