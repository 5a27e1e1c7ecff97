#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slr/decoder.hpp"
#include "slr/features.hpp"
#include "slr/model.hpp"
#include "slr/preprocess.hpp"

namespace slr {

/// Encoded windows of a set of videos, in video order.
struct WindowSet {
    std::vector<FeatureVector> features;
    std::vector<int> labels;
    std::vector<std::size_t> video_of;  // index into video_ids for each window
    std::vector<std::string> video_ids;
    std::vector<int> video_labels;
    std::vector<std::size_t> windows_per_video;

    std::size_t size() const { return features.size(); }
    std::size_t video_count() const { return video_ids.size(); }
    bool empty() const { return features.empty(); }
};

/// resample -> make_windows -> fill_missing.
std::vector<LandmarkWindow> prepare_windows(const VideoSequence& video, const PipelineConfig& cfg,
                                            std::size_t stride);

/// Encodes windows in parallel; output order matches input order.
std::vector<FeatureVector> encode_windows(std::span<const LandmarkWindow> windows);

/// Videos too short to yield a window are kept with zero windows.
WindowSet encode_videos(std::span<const VideoSequence> videos, const PipelineConfig& cfg);

/// Incremental resampling plus a rolling buffer of the last W frames; yields
/// a filled window for every resampled frame once the buffer is full. Shared by
/// live sessions and offline decoding.
class WindowStream {
public:
    explicit WindowStream(const PipelineConfig& cfg);

    void set_source_fps(std::optional<Fps> fps) { resampler_.set_source_fps(fps); }
    const std::optional<Fps>& source_fps() const { return resampler_.source_fps(); }

    std::vector<LandmarkWindow> push(const FrameRecord& frame, std::optional<double> timestamp_s = {});
    std::size_t buffered() const { return buffer_.size(); }
    void reset();

private:
    std::size_t window_;
    StreamResampler resampler_;
    std::vector<FrameRecord> buffer_;
    std::size_t emitted_ = 0;
};

/// Offline equivalent of a live session: every resampled frame that closes a
/// window is classified and fed to the stream decoder; the decoder is flushed
/// at the end. Returns the merged token ids.
std::vector<int> decode_video(const Model& model, const VideoSequence& video, const DecoderConfig& decoder,
                              const CollocationLexicon* lexicon);

}  // namespace slr
