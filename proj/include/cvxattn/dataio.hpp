#pragma once

// Gesture datasets: preprocessing (segmentation, drift removal, smoothing,
// z-score), a synthetic capacitive gesture generator, and CSV storage.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cvxattn/numkernel.hpp"

namespace cvxattn {

/// Continuous multi-channel capture: samples is channels x N.
struct RawStream {
    double sample_rate = 250.0;
    Mat samples;
};

/// One segmented gesture, channels x frames.
struct GestureSample {
    Mat x;
    std::size_t label = 0;
    std::string source;
};

struct Dataset {
    std::vector<GestureSample> samples;
    std::vector<std::string> class_names;
    double sample_rate = 250.0;
    std::size_t channels = 0;
    std::size_t frames = 0;
    /// Preprocessing stages already applied, in order.
    std::vector<std::string> pipeline;

    std::size_t size() const { return samples.size(); }
    std::size_t classes() const { return class_names.size(); }
    std::vector<std::size_t> class_counts() const;
    Dataset subset(const std::vector<std::size_t>& indices) const;
};

std::vector<std::string> default_class_names();

/// Number of frames covering `ms` milliseconds (at least 1).
std::size_t frames_for_ms(double ms, double sample_rate);

// --- segmentation -----------------------------------------------------------

struct SegmentParams {
    double window_ms = 200.0;
    double onset_factor = 2.5;
    double offset_factor = 1.5;
    double quiet_ms = 100.0;
    std::size_t post_buffer_frames = 5;
};

/// Half-open frame range [start, end).
struct FrameSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

/// Trailing rolling variance (mean over channels) compared against the
/// variance of the stream's first window.
std::vector<FrameSpan> segment(const RawStream& stream, const SegmentParams& params = {});

// --- signal conditioning ----------------------------------------------------

/// Subtract the trailing rolling mean per channel; early frames use the
/// available prefix.
Mat remove_drift(const Mat& x, std::size_t window_frames);

/// Centered 3-frame moving average; edge frames average the two available.
Mat smooth(const Mat& x);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    /// Channels whose stddev was clamped to 1.
    std::vector<std::size_t> clamped;

    std::size_t channels() const { return mean.size(); }
};

/// Per-channel statistics over every frame of the given samples.
NormStats zscore_fit(const std::vector<GestureSample>& train);
Mat zscore_apply(const Mat& x, const NormStats& stats);

/// Stage names recorded in Dataset::pipeline.
inline constexpr const char* kStageSegment = "segment";
inline constexpr const char* kStageDrift = "drift";
inline constexpr const char* kStageWavelet = "wavelet-noop";
inline constexpr const char* kStageSmooth = "smooth";

struct ProcessedStream {
    Mat samples;                   // drift-compensated, smoothed
    std::vector<FrameSpan> spans;
    std::vector<std::string> pipeline;
};

/// segment -> drift removal -> (wavelet slot, no-op) -> smoothing.
ProcessedStream preprocess_stream(const RawStream& stream, const SegmentParams& params = {});

/// `frames`-long window of `samples` centred on the highest-energy frame of
/// `span`, shifted to stay inside the stream.
Mat crop_gesture(const Mat& samples, const FrameSpan& span, std::size_t frames);

/// Drift removal and smoothing applied per gesture. Rejects datasets whose
/// pipeline already records either stage.
void preprocess_dataset(Dataset& data, double drift_window_ms = 200.0);

// --- synthetic data ---------------------------------------------------------

enum class GestureKind { tap, swipe };

GestureKind gesture_kind_from_string(const std::string& name);
const char* to_string(GestureKind kind);

/// Electrodes sit at the corners of a unit square (channels 0..3: NW, NE, SW,
/// SE); class anchors sit at the mid-edges (north, south, east, west). When
/// `differential_channels` is set two extra channels carry east-minus-west and
/// north-minus-south capacitance, giving six values per frame.
struct SynthConfig {
    GestureKind kind = GestureKind::tap;
    std::size_t samples_per_class = 100;
    double noise_stddev = 0.05;
    double amplitude = 1.0;
    double drift_rate = 0.0;     // per frame, in amplitude units
    std::uint64_t seed = 0;
    std::size_t frames = 0;      // 0: 10 for tap, 30 for swipe
    bool differential_channels = true;
    double position_jitter = 0.02;
    double pressure_jitter = 0.05;
    double pulse_width = 0.5;    // tap pulse stddev as a fraction of the window
    double speed_jitter = 0.1;   // swipe time-warp exponent spread (log scale)
    double falloff = 0.25;       // electrode coupling exp(-(d^2 - 0.25) / falloff)
    bool quantize_12bit = false;
    double sample_rate = 250.0;

    std::size_t resolved_frames() const;
    std::size_t channels() const { return differential_channels ? 6 : 4; }
    void validate() const;
};

Dataset synth_generate(const SynthConfig& config);

struct SynthStream {
    RawStream stream;
    std::vector<std::size_t> peaks;   // ground-truth peak frame per gesture
    std::vector<std::size_t> labels;
};

/// Gestures embedded in a quiet noisy stream, `gap_ms` of rest between them
/// and a leading rest of the same length.
SynthStream synth_stream(const SynthConfig& config, std::size_t gestures, double gap_ms);

/// Stream route: synth_stream -> preprocess_stream -> crop, labelled from
/// ground truth. Spans that miss every injected peak are dropped.
Dataset synth_generate_via_stream(const SynthConfig& config, double gap_ms = 1000.0);

// --- CSV --------------------------------------------------------------------

/// Columns: gesture_id,class,frame,ch0..ch{C-1}. Writes `<path>.meta.json`
/// next to the CSV with sample rate, shape, class names and pipeline.
void save_csv(const Dataset& data, const std::string& path);

/// Reads the sidecar when present; otherwise uses default class names.
Dataset load_csv(const std::string& path);

std::string sidecar_path(const std::string& csv_path);

} // namespace cvxattn
