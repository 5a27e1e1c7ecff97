#include "slr/cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "slr/config.hpp"
#include "slr/evaluation.hpp"
#include "slr/model.hpp"
#include "slr/pipeline.hpp"
#include "slr/record_io.hpp"
#include "slr/server.hpp"
#include "slr/synthetic.hpp"
#include "slr/trainer.hpp"

namespace slr {

namespace {

namespace fs = std::filesystem;

struct TrainArgs {
    std::string data, config, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    bool quiet = false;
};

struct EvalArgs {
    std::string model, data, metric = "isr";
    bool json = false;
    bool majority = false;
};

struct EncodeArgs {
    std::string data, out, config, model;
};

struct ServeArgs {
    std::string model, host = "127.0.0.1", lexicon, config, static_dir;
    std::uint16_t port = 8080;
    std::optional<std::uint16_t> ndjson_port;
    std::optional<std::string> target_fps;
};

struct BenchArgs {
    std::string model;
    std::size_t iters = 1000;
};

struct SynthArgs {
    int classes = 20, per_class = 60, label_a = 0;
    std::string out, fps = "30";
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
};

struct DecodeArgs {
    std::string model, data, lexicon, config;
    bool json = false;
};

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

AppConfig load_config(const std::string& path) { return path.empty() ? AppConfig{} : AppConfig::load(path); }

int cmd_train(const TrainArgs& a, std::ostream& out) {
    AppConfig cfg = load_config(a.config);
    if (a.seed) {
        cfg.training.seed = *a.seed;
        cfg.model.seed = *a.seed;
        cfg.augment.cfg.seed = *a.seed;
    }
    if (a.epochs) cfg.training.epochs = *a.epochs;
    const Dataset data = load_dataset(a.data);
    TrainingReport report;
    const auto on_epoch = [&](const EpochStats& s) {
        if (a.quiet) return;
        out << "epoch " << s.epoch << " train_loss " << std::setprecision(5) << s.train_loss << " val_loss "
            << s.val_loss << " val_sfsr " << s.val_sfsr << '\n';
    };
    const Model model = train_model(data, cfg.pipeline, cfg.augment, cfg.model, cfg.training, &report, on_epoch);
    const std::size_t bytes = save_model(model, a.out);
    out << "trained on " << report.train_videos << " videos (" << report.train_windows << " windows), validated on "
        << report.val_videos << " videos (" << report.val_windows << " windows), dropped " << report.dropped_videos
        << '\n';
    out << "best epoch " << report.result.best_epoch << ", " << model.class_count() << " classes, "
        << model.net.parameter_count() << " parameters, wrote " << bytes << " bytes to " << a.out << '\n';
    return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Model model = load_model(a.model);
    const Dataset data = load_dataset(a.data);
    if (data.videos.empty()) throw Error("empty dataset");
    const WindowSet set = encode_videos(data.videos, model.pipeline);
    if (set.empty()) throw Error("empty dataset: no video is long enough for a window");
    const IsrAggregation agg = a.majority ? IsrAggregation::MajorityVote : IsrAggregation::MeanSoftmax;
    if (a.json) {
        nlohmann::json j = evaluate(model, set, agg).to_json();
        j["metric"] = a.metric;
        j["value"] = a.metric == "sfsr" ? j["sfsr"] : j["isr"];
        out << j.dump(2) << '\n';
    } else {
        const double v = a.metric == "sfsr" ? sfsr(model, set) : isr(model, set, agg);
        out << a.metric << ' ' << std::setprecision(6) << v << '\n';
    }
    return 0;
}

int cmd_encode(const EncodeArgs& a, std::ostream& out) {
    PipelineConfig pipeline = load_config(a.config).pipeline;
    if (!a.model.empty()) pipeline = load_model(a.model).pipeline;
    const Dataset data = load_dataset(a.data);
    const WindowSet set = encode_videos(data.videos, pipeline);
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw Error("cannot write " + a.out);
    for (std::size_t k = 0; k < kFeatureSize; ++k) f << 'f' << k << ',';
    f << "video_id,sign_id\n";
    std::string line;
    for (std::size_t i = 0; i < set.size(); ++i) {
        line.clear();
        for (double v : set.features[i].values()) {
            line += format_double(v);
            line += ',';
        }
        const std::string id = csv_cell(set.video_ids[set.video_of[i]]);
        f << line << id << ',' << set.labels[i] << '\n';
    }
    out << "encoded " << set.size() << " windows from " << set.video_count() << " videos into " << a.out << '\n';
    return 0;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    const Model model = load_model(a.model);
    if (a.target_fps) {
        const Fps want = Fps::parse(*a.target_fps);
        if (!(want == model.pipeline.target_fps)) {
            throw Error("model was trained at " + model.pipeline.target_fps.str() + " fps, not " + want.str());
        }
    }
    std::optional<CollocationLexicon> lexicon;
    const AppConfig cfg = load_config(a.config);
    if (!a.lexicon.empty()) lexicon = load_lexicon(a.lexicon, cfg.decoder.blank_id);

    ServerConfig sc;
    sc.host = a.host;
    sc.port = a.port;
    sc.ndjson_port = a.ndjson_port;
    if (!a.static_dir.empty()) sc.static_dir = a.static_dir;
    sc.decoder = cfg.decoder;

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Server server(model, {a.model, static_cast<std::size_t>(fs::file_size(a.model))}, lexicon ? &*lexicon : nullptr,
                  sc);
    server.start();
    out << "listening on http://" << a.host << ':' << server.port() << " (WebSocket /stream, /healthz)";
    if (server.ndjson_port()) out << ", ndjson tcp port " << *server.ndjson_port();
    out << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    out << "shutting down" << std::endl;
    server.stop();
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
    return 0;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    const Model model = load_model(a.model);
    const LatencyStats s = latency_bench(model, a.iters);
    out << std::fixed << std::setprecision(4);
    out << "iterations " << s.iterations << '\n';
    out << "mean_ms " << s.mean_ms << '\n';
    out << "median_ms " << s.median_ms << '\n';
    out << "p95_ms " << s.p95_ms << '\n';
    out << "p99_ms " << s.p99_ms << '\n';
    return 0;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SynthConfig cfg;
    cfg.class_count = a.classes;
    cfg.samples_per_class = a.per_class;
    cfg.seed = a.seed;
    cfg.fps = Fps::parse(a.fps);
    cfg.label_a_frames = a.label_a;
    const Dataset ds = gen_synthetic(cfg);
    if (a.test_fraction > 0.0) {
        VideoSplit split = stratified_split(ds.videos, a.test_fraction, a.seed ^ 0x5eedULL);
        save_dataset({split.kept, ds.registry}, fs::path(a.out) / "train");
        save_dataset({split.held_out, ds.registry}, fs::path(a.out) / "test");
        out << "wrote " << split.kept.size() << " training and " << split.held_out.size() << " test videos to "
            << a.out << '\n';
    } else {
        save_dataset(ds, a.out);
        out << "wrote " << ds.videos.size() << " videos to " << a.out << '\n';
    }
    return 0;
}

int cmd_decode(const DecodeArgs& a, std::ostream& out) {
    const Model model = load_model(a.model);
    const AppConfig cfg = load_config(a.config);
    std::optional<CollocationLexicon> lexicon;
    if (!a.lexicon.empty()) lexicon = load_lexicon(a.lexicon, cfg.decoder.blank_id);
    const Dataset data = load_dataset(a.data);
    nlohmann::json doc = nlohmann::json::object();
    for (const VideoSequence& v : data.videos) {
        const std::vector<int> ids = decode_video(model, v, cfg.decoder, lexicon ? &*lexicon : nullptr);
        if (a.json) {
            doc[v.video_id] = ids;
            continue;
        }
        out << v.video_id << ':';
        for (int id : ids) {
            const std::string* g = (lexicon && !model.registry.contains(id)) ? lexicon->gloss(id) : nullptr;
            out << ' ' << (g ? *g : model.registry.gloss(id));
        }
        out << '\n';
    }
    if (a.json) out << doc.dump() << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Skeleton-based sign recognition: synthesise, train, evaluate, serve."};
    app.name("slr");
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train a model on a record dataset");
    train->add_option("--data", ta.data, "Dataset directory or CSV")->required()->check(CLI::ExistingPath);
    train->add_option("--config", ta.config, "JSON config file")->check(CLI::ExistingFile);
    train->add_option("--out", ta.out, "Output model file")->required();
    train->add_option("--seed", ta.seed, "Seed for initialisation, shuffling and augmentation");
    train->add_option("--epochs", ta.epochs, "Override training.epochs");
    train->add_flag("--quiet", ta.quiet, "No per-epoch output");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Score a model on a labelled dataset");
    eval->add_option("--model", ea.model)->required()->check(CLI::ExistingFile);
    eval->add_option("--data", ea.data)->required()->check(CLI::ExistingPath);
    eval->add_option("--metric", ea.metric)->check(CLI::IsMember({"sfsr", "isr"}));
    eval->add_flag("--json", ea.json, "Full report as JSON");
    eval->add_flag("--majority", ea.majority, "Majority vote instead of mean softmax for isr");

    EncodeArgs na;
    auto* encode = app.add_subcommand("encode", "Write the 947-value window features as CSV");
    encode->add_option("--data", na.data)->required()->check(CLI::ExistingPath);
    encode->add_option("--out", na.out)->required();
    encode->add_option("--config", na.config, "Pipeline settings")->check(CLI::ExistingFile);
    encode->add_option("--model", na.model, "Use this model's pipeline settings")->check(CLI::ExistingFile);

    ServeArgs sa;
    auto* serve = app.add_subcommand("serve", "Run the WebSocket inference service");
    serve->add_option("--model", sa.model)->required()->check(CLI::ExistingFile);
    serve->add_option("--port", sa.port);
    serve->add_option("--host", sa.host);
    serve->add_option("--target-fps", sa.target_fps, "Must match the model's training fps");
    serve->add_option("--lexicon", sa.lexicon, "Collocation lexicon JSON")->check(CLI::ExistingFile);
    serve->add_option("--config", sa.config, "Decoder settings")->check(CLI::ExistingFile);
    serve->add_option("--ndjson-port", sa.ndjson_port, "Also accept newline-delimited JSON over TCP");
    serve->add_option("--static", sa.static_dir, "Directory of static web assets")->check(CLI::ExistingDirectory);

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Single-threaded encode+forward latency");
    bench->add_option("--model", ba.model)->required()->check(CLI::ExistingFile);
    bench->add_option("--iters", ba.iters)->check(CLI::PositiveNumber);

    SynthArgs ya;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic record dataset");
    synth->add_option("--classes", ya.classes)->check(CLI::Range(2, 100000));
    synth->add_option("--per-class", ya.per_class)->check(CLI::PositiveNumber);
    synth->add_option("--out", ya.out)->required();
    synth->add_option("--seed", ya.seed);
    synth->add_option("--fps", ya.fps);
    synth->add_option("--test-fraction", ya.test_fraction, "Write train/ and test/ splits")
        ->check(CLI::Range(0.0, 0.99));
    synth->add_option("--label-a-frames", ya.label_a, "Non-sign frames around each sign")->check(CLI::NonNegativeNumber);

    DecodeArgs da;
    auto* decode = app.add_subcommand("decode", "Offline stream decoding of each video");
    decode->add_option("--model", da.model)->required()->check(CLI::ExistingFile);
    decode->add_option("--data", da.data)->required()->check(CLI::ExistingPath);
    decode->add_option("--lexicon", da.lexicon)->check(CLI::ExistingFile);
    decode->add_option("--config", da.config, "Decoder settings")->check(CLI::ExistingFile);
    decode->add_flag("--json", da.json, "Emit {video_id: [sign ids]}");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*train) return cmd_train(ta, out);
        if (*eval) return cmd_eval(ea, out);
        if (*encode) return cmd_encode(na, out);
        if (*serve) return cmd_serve(sa, out);
        if (*bench) return cmd_bench(ba, out);
        if (*synth) return cmd_synth(ya, out);
        if (*decode) return cmd_decode(da, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace slr
