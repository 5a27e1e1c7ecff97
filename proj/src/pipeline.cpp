#include "slr/pipeline.hpp"

namespace slr {

std::vector<LandmarkWindow> prepare_windows(const VideoSequence& video, const PipelineConfig& cfg,
                                            std::size_t stride) {
    const VideoSequence resampled = resample(video, cfg.target_fps, cfg.interpolation);
    std::vector<LandmarkWindow> windows = make_windows(resampled, cfg.window, stride);
    for (LandmarkWindow& w : windows) w = fill_missing(std::move(w));
    return windows;
}

std::vector<FeatureVector> encode_windows(std::span<const LandmarkWindow> windows) {
    std::vector<FeatureVector> out(windows.size());
    const auto n = static_cast<std::ptrdiff_t>(windows.size());
#pragma omp parallel for schedule(static) if (n > 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = encode_window(windows[i]);
    return out;
}

WindowSet encode_videos(std::span<const VideoSequence> videos, const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<LandmarkWindow>> per_video(videos.size());
    const auto n = static_cast<std::ptrdiff_t>(videos.size());
    // Exceptions may not cross the parallel region; collect the first one.
    std::vector<std::string> errors(videos.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            per_video[i] = prepare_windows(videos[i], cfg, cfg.stride);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const std::string& e : errors) {
        if (!e.empty()) throw Error(e);
    }

    WindowSet set;
    std::vector<LandmarkWindow> flat;
    for (std::size_t v = 0; v < videos.size(); ++v) {
        set.video_ids.push_back(videos[v].video_id);
        set.video_labels.push_back(videos[v].sign_id);
        set.windows_per_video.push_back(per_video[v].size());
        for (LandmarkWindow& w : per_video[v]) {
            set.labels.push_back(w.label());
            set.video_of.push_back(v);
            flat.push_back(std::move(w));
        }
    }
    set.features = encode_windows(flat);
    return set;
}

WindowStream::WindowStream(const PipelineConfig& cfg)
    : window_(cfg.window), resampler_(cfg.target_fps, cfg.interpolation) {
    cfg.validate();
}

std::vector<LandmarkWindow> WindowStream::push(const FrameRecord& frame, std::optional<double> timestamp_s) {
    std::vector<LandmarkWindow> out;
    for (FrameRecord& f : resampler_.push(frame, timestamp_s)) {
        buffer_.push_back(std::move(f));
        if (buffer_.size() > window_) buffer_.erase(buffer_.begin());
        ++emitted_;
        if (buffer_.size() == window_) {
            LandmarkWindow w;
            w.video_id = frame.video_id;
            w.start = emitted_ - window_;
            w.frames = buffer_;
            out.push_back(fill_missing(std::move(w)));
        }
    }
    return out;
}

void WindowStream::reset() {
    resampler_.reset();
    buffer_.clear();
    emitted_ = 0;
}

std::vector<int> decode_video(const Model& model, const VideoSequence& video, const DecoderConfig& decoder,
                              const CollocationLexicon* lexicon) {
    WindowStream stream(model.pipeline);
    stream.set_source_fps(video.fps);
    StreamDecoder dec(decoder, lexicon);
    for (const FrameRecord& f : video.frames) {
        for (const LandmarkWindow& w : stream.push(f)) {
            const std::vector<float> probs = model.predict(encode_window(w));
            dec.step(probs);
        }
    }
    return dec.flush();
}

}  // namespace slr
