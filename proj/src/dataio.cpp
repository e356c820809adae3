#include "cvxattn/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cvxattn {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(classes(), 0);
    for (const auto& s : samples) {
        if (s.label >= counts.size()) throw std::invalid_argument("Dataset: label out of range");
        ++counts[s.label];
    }
    return counts;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.class_names = class_names;
    out.sample_rate = sample_rate;
    out.channels = channels;
    out.frames = frames;
    out.pipeline = pipeline;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(samples.at(i));
    return out;
}

std::vector<std::string> default_class_names() { return {"north", "south", "east", "west"}; }

std::size_t frames_for_ms(double ms, double sample_rate) {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("sample_rate must be > 0");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0)));
}

// ---------------------------------------------------------------------------
// Segmentation

namespace {

// Mean over channels of the population variance of frames [first, last).
double window_variance(const Mat& x, std::size_t first, std::size_t last) {
    const double n = static_cast<double>(last - first);
    double total = 0.0;
    for (std::size_t c = 0; c < x.rows(); ++c) {
        double mean = 0.0;
        for (std::size_t t = first; t < last; ++t) mean += x(c, t);
        mean /= n;
        double var = 0.0;
        for (std::size_t t = first; t < last; ++t) var += (x(c, t) - mean) * (x(c, t) - mean);
        total += var / n;
    }
    return total / static_cast<double>(x.rows());
}

} // namespace

std::vector<FrameSpan> segment(const RawStream& stream, const SegmentParams& params) {
    const Mat& x = stream.samples;
    const std::size_t window = frames_for_ms(params.window_ms, stream.sample_rate);
    const std::size_t quiet = frames_for_ms(params.quiet_ms, stream.sample_rate);
    const std::size_t n = x.cols();
    if (x.rows() == 0 || n < window)
        throw std::invalid_argument("segment: stream has " + std::to_string(n) +
                                    " frames, shorter than the baseline window of " +
                                    std::to_string(window));
    require_finite(x.data(), "segment");

    const double baseline = window_variance(x, 0, window);
    const double onset_level = params.onset_factor * baseline;
    const double offset_level = params.offset_factor * baseline;

    std::vector<FrameSpan> spans;
    bool active = false;
    std::size_t onset = 0;
    std::size_t quiet_run = 0;
    std::size_t quiet_start = 0;
    for (std::size_t t = window; t < n; ++t) {
        const double var = window_variance(x, t + 1 - window, t + 1);
        if (!active) {
            if (var > onset_level) {
                active = true;
                onset = t;
                quiet_run = 0;
            }
            continue;
        }
        if (var <= offset_level) {
            if (quiet_run == 0) quiet_start = t;
            if (++quiet_run >= quiet) {
                spans.push_back({onset, std::min(n, quiet_start + params.post_buffer_frames)});
                active = false;
            }
        } else {
            quiet_run = 0;
        }
    }
    if (active) spans.push_back({onset, n});
    return spans;
}

// ---------------------------------------------------------------------------
// Conditioning

Mat remove_drift(const Mat& x, std::size_t window_frames) {
    if (window_frames == 0) throw std::invalid_argument("remove_drift: window must be >= 1 frame");
    Mat out(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.rows(); ++c) {
        double sum = 0.0;
        for (std::size_t t = 0; t < x.cols(); ++t) {
            sum += x(c, t);
            if (t >= window_frames) sum -= x(c, t - window_frames);
            const std::size_t count = std::min(t + 1, window_frames);
            out(c, t) = x(c, t) - sum / static_cast<double>(count);
        }
    }
    return out;
}

Mat smooth(const Mat& x) {
    if (x.cols() == 0) throw std::invalid_argument("smooth: need at least one frame");
    const std::size_t n = x.cols();
    Mat out(x.rows(), n);
    for (std::size_t c = 0; c < x.rows(); ++c) {
        if (n == 1) {
            out(c, 0) = x(c, 0);
            continue;
        }
        out(c, 0) = 0.5 * (x(c, 0) + x(c, 1));
        out(c, n - 1) = 0.5 * (x(c, n - 2) + x(c, n - 1));
        for (std::size_t t = 1; t + 1 < n; ++t)
            out(c, t) = (x(c, t - 1) + x(c, t) + x(c, t + 1)) / 3.0;
    }
    return out;
}

NormStats zscore_fit(const std::vector<GestureSample>& train) {
    if (train.size() < 2) throw std::invalid_argument("zscore_fit: need at least 2 samples");
    const std::size_t channels = train.front().x.rows();
    NormStats stats;
    stats.mean.assign(channels, 0.0);
    stats.stddev.assign(channels, 0.0);
    double count = 0.0;
    for (const auto& s : train) {
        if (s.x.rows() != channels) throw std::invalid_argument("zscore_fit: channel count differs");
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t t = 0; t < s.x.cols(); ++t) stats.mean[c] += s.x(c, t);
        count += static_cast<double>(s.x.cols());
    }
    for (auto& m : stats.mean) m /= count;
    for (const auto& s : train)
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t t = 0; t < s.x.cols(); ++t) {
                const double d = s.x(c, t) - stats.mean[c];
                stats.stddev[c] += d * d;
            }
    for (std::size_t c = 0; c < channels; ++c) {
        stats.stddev[c] = std::sqrt(stats.stddev[c] / count);
        if (!(stats.stddev[c] >= 1e-8)) {
            std::cerr << "warning: channel " << c << " is constant on the training set; stddev clamped to 1\n";
            stats.stddev[c] = 1.0;
            stats.clamped.push_back(c);
        }
    }
    return stats;
}

Mat zscore_apply(const Mat& x, const NormStats& stats) {
    if (x.rows() != stats.channels())
        throw std::invalid_argument("zscore_apply: sample has " + std::to_string(x.rows()) +
                                    " channels, stats have " + std::to_string(stats.channels()));
    Mat out = x;
    for (std::size_t c = 0; c < x.rows(); ++c)
        for (std::size_t t = 0; t < x.cols(); ++t)
            out(c, t) = (x(c, t) - stats.mean[c]) / stats.stddev[c];
    return out;
}

ProcessedStream preprocess_stream(const RawStream& stream, const SegmentParams& params) {
    ProcessedStream out;
    out.spans = segment(stream, params);
    out.samples = remove_drift(stream.samples, frames_for_ms(params.window_ms, stream.sample_rate));
    // Wavelet denoising slot: identity on synthetic data.
    out.samples = smooth(out.samples);
    out.pipeline = {kStageSegment, kStageDrift, kStageWavelet, kStageSmooth};
    return out;
}

Mat crop_gesture(const Mat& samples, const FrameSpan& span, std::size_t frames) {
    if (frames == 0 || frames > samples.cols())
        throw std::invalid_argument("crop_gesture: window does not fit the stream");
    if (span.start >= span.end || span.end > samples.cols())
        throw std::invalid_argument("crop_gesture: span outside the stream");
    std::size_t peak = span.start;
    double best = -1.0;
    for (std::size_t t = span.start; t < span.end; ++t) {
        double e = 0.0;
        for (std::size_t c = 0; c < samples.rows(); ++c) e += samples(c, t) * samples(c, t);
        if (e > best) {
            best = e;
            peak = t;
        }
    }
    std::size_t start = peak >= frames / 2 ? peak - frames / 2 : 0;
    start = std::min(start, samples.cols() - frames);
    Mat out(samples.rows(), frames);
    for (std::size_t c = 0; c < samples.rows(); ++c)
        for (std::size_t t = 0; t < frames; ++t) out(c, t) = samples(c, start + t);
    return out;
}

void preprocess_dataset(Dataset& data, double drift_window_ms) {
    for (const auto& stage : data.pipeline)
        if (stage == kStageDrift || stage == kStageSmooth)
            throw std::invalid_argument("preprocess_dataset: stage '" + stage + "' already applied");
    const std::size_t window = frames_for_ms(drift_window_ms, data.sample_rate);
    for (auto& s : data.samples) s.x = smooth(remove_drift(s.x, window));
    data.pipeline.push_back(kStageDrift);
    data.pipeline.push_back(kStageWavelet);
    data.pipeline.push_back(kStageSmooth);
}

// ---------------------------------------------------------------------------
// Synthetic gestures

GestureKind gesture_kind_from_string(const std::string& name) {
    if (name == "tap") return GestureKind::tap;
    if (name == "swipe") return GestureKind::swipe;
    throw std::invalid_argument("unknown gesture kind '" + name + "' (valid kinds: tap, swipe)");
}

const char* to_string(GestureKind kind) { return kind == GestureKind::tap ? "tap" : "swipe"; }

std::size_t SynthConfig::resolved_frames() const {
    if (frames != 0) return frames;
    return kind == GestureKind::tap ? 10 : 30;
}

void SynthConfig::validate() const {
    if (samples_per_class == 0) throw std::invalid_argument("SynthConfig: samples_per_class must be >= 1");
    if (!(noise_stddev >= 0.0)) throw std::invalid_argument("SynthConfig: noise_stddev must be >= 0");
    if (!(amplitude > 0.0)) throw std::invalid_argument("SynthConfig: amplitude must be > 0");
    if (!(sample_rate > 0.0)) throw std::invalid_argument("SynthConfig: sample_rate must be > 0");
    if (resolved_frames() < 2) throw std::invalid_argument("SynthConfig: need at least 2 frames");
}

namespace {

struct Point {
    double x;
    double y;
};

// NW, NE, SW, SE.
constexpr Point kElectrodes[4] = {{0.0, 1.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 0.0}};
// north, south, east, west.
constexpr Point kAnchors[4] = {{0.5, 1.0}, {0.5, 0.0}, {1.0, 0.5}, {0.0, 0.5}};
constexpr std::size_t kOpposite[4] = {1, 0, 3, 2};

// 1 at the mid-edge distance (0.5), Gaussian decay with squared distance.
double proximity(Point p, Point e, double falloff) {
    const double d2 = (p.x - e.x) * (p.x - e.x) + (p.y - e.y) * (p.y - e.y);
    return std::exp(-(d2 - 0.25) / falloff);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Noise-free electrode signals, 4 x frames.
Mat clean_gesture(const SynthConfig& cfg, std::size_t label, RngStream& rng) {
    const std::size_t frames = cfg.resolved_frames();
    const double tf = static_cast<double>(frames);
    const double pressure = cfg.amplitude * (1.0 + cfg.pressure_jitter * (2.0 * rng.next_unit() - 1.0));
    const double jx = cfg.position_jitter * (2.0 * rng.next_unit() - 1.0);
    const double jy = cfg.position_jitter * (2.0 * rng.next_unit() - 1.0);
    Mat x(4, frames);

    if (cfg.kind == GestureKind::tap) {
        const Point pos{clamp01(kAnchors[label].x + jx), clamp01(kAnchors[label].y + jy)};
        const std::size_t span = std::max<std::size_t>(1, frames / 10);
        const double shift = static_cast<double>(rng.next_index(2 * span + 1)) - static_cast<double>(span);
        const double centre = tf / 2.0 + shift;
        const double width = tf * cfg.pulse_width;
        for (std::size_t t = 0; t < frames; ++t) {
            const double d = (static_cast<double>(t) - centre) / width;
            const double pulse = pressure * std::exp(-0.5 * d * d);
            for (std::size_t e = 0; e < 4; ++e) x(e, t) = pulse * proximity(pos, kElectrodes[e], cfg.falloff);
        }
        return x;
    }

    // Swipe: finger travels from the opposite edge to the class edge.
    const Point from = kAnchors[kOpposite[label]];
    const Point to = kAnchors[label];
    const double warp = std::exp(cfg.speed_jitter * (2.0 * rng.next_unit() - 1.0));
    for (std::size_t t = 0; t < frames; ++t) {
        const double phase = (static_cast<double>(t) + 0.5) / tf;
        const double u = std::pow(phase, warp);
        const Point pos{clamp01(from.x + u * (to.x - from.x) + (from.x == to.x ? jx : 0.0)),
                        clamp01(from.y + u * (to.y - from.y) + (from.y == to.y ? jy : 0.0))};
        const double envelope = std::sqrt(std::sin(std::numbers::pi * phase));
        for (std::size_t e = 0; e < 4; ++e) x(e, t) = pressure * envelope * proximity(pos, kElectrodes[e], cfg.falloff);
    }
    return x;
}

// Adds noise, drift, derived channels and quantization to electrode signals.
Mat finish_gesture(const SynthConfig& cfg, const Mat& clean, RngStream& rng, std::size_t time_offset = 0) {
    const std::size_t frames = clean.cols();
    Mat e = clean;
    for (std::size_t c = 0; c < 4; ++c) {
        const double slope = cfg.drift_rate * (0.5 + 0.5 * rng.next_unit());
        for (std::size_t t = 0; t < frames; ++t) {
            if (cfg.noise_stddev > 0.0) e(c, t) += cfg.noise_stddev * rng.next_gauss();
            e(c, t) += slope * static_cast<double>(t + time_offset);
        }
    }
    Mat out(cfg.channels(), frames);
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t t = 0; t < frames; ++t) out(c, t) = e(c, t);
    if (cfg.differential_channels) {
        for (std::size_t t = 0; t < frames; ++t) {
            out(4, t) = 0.5 * (e(1, t) + e(3, t) - e(0, t) - e(2, t));
            out(5, t) = 0.5 * (e(0, t) + e(1, t) - e(2, t) - e(3, t));
        }
    }
    if (cfg.quantize_12bit) {
        const double step = 2.0 * cfg.amplitude / 4096.0;
        for (auto& v : out.data()) v = std::round(v / step) * step;
    }
    return out;
}

Dataset empty_dataset(const SynthConfig& cfg) {
    Dataset data;
    data.class_names = default_class_names();
    data.sample_rate = cfg.sample_rate;
    data.channels = cfg.channels();
    data.frames = cfg.resolved_frames();
    return data;
}

} // namespace

Dataset synth_generate(const SynthConfig& config) {
    config.validate();
    Dataset data = empty_dataset(config);
    RngStream rng(config.seed);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < config.samples_per_class; ++i) {
            GestureSample s;
            s.x = finish_gesture(config, clean_gesture(config, k, rng), rng);
            s.label = k;
            s.source = std::string(to_string(config.kind)) + "-" + data.class_names[k] + "-" + std::to_string(i);
            data.samples.push_back(std::move(s));
        }
    return data;
}

SynthStream synth_stream(const SynthConfig& config, std::size_t gestures, double gap_ms) {
    config.validate();
    const std::size_t frames = config.resolved_frames();
    const std::size_t gap = frames_for_ms(gap_ms, config.sample_rate);
    const std::size_t total = gap + gestures * (frames + gap);
    RngStream rng(config.seed);

    Mat electrodes(4, total);
    SynthStream out;
    for (std::size_t g = 0; g < gestures; ++g) {
        const std::size_t label = g % 4;
        const Mat clean = clean_gesture(config, label, rng);
        const std::size_t offset = gap + g * (frames + gap);
        std::size_t peak = 0;
        double best = -1.0;
        for (std::size_t t = 0; t < frames; ++t) {
            double energy = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                electrodes(c, offset + t) = clean(c, t);
                energy += clean(c, t) * clean(c, t);
            }
            if (energy > best) {
                best = energy;
                peak = t;
            }
        }
        out.peaks.push_back(offset + peak);
        out.labels.push_back(label);
    }
    out.stream.sample_rate = config.sample_rate;
    out.stream.samples = finish_gesture(config, electrodes, rng);
    return out;
}

Dataset synth_generate_via_stream(const SynthConfig& config, double gap_ms) {
    const SynthStream synth = synth_stream(config, 4 * config.samples_per_class, gap_ms);
    const ProcessedStream processed = preprocess_stream(synth.stream);
    Dataset data = empty_dataset(config);
    data.pipeline = processed.pipeline;
    std::size_t next_peak = 0;
    for (const auto& span : processed.spans) {
        while (next_peak < synth.peaks.size() && synth.peaks[next_peak] < span.start) ++next_peak;
        if (next_peak >= synth.peaks.size() || synth.peaks[next_peak] >= span.end) continue;
        GestureSample s;
        s.x = crop_gesture(processed.samples, span, data.frames);
        s.label = synth.labels[next_peak];
        s.source = "stream-" + std::to_string(next_peak);
        data.samples.push_back(std::move(s));
        ++next_peak;
    }
    return data;
}

// ---------------------------------------------------------------------------
// CSV

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "gesture_id,class,frame";
    for (std::size_t c = 0; c < data.channels; ++c) out << ",ch" << c;
    out << '\n';
    char buf[40];
    for (std::size_t g = 0; g < data.samples.size(); ++g) {
        const auto& s = data.samples[g];
        if (s.x.rows() != data.channels || s.x.cols() != data.frames)
            throw std::invalid_argument("save_csv: gesture " + std::to_string(g) + " has the wrong shape");
        const std::string id = s.source.empty() ? "g" + std::to_string(g) : s.source;
        for (std::size_t t = 0; t < data.frames; ++t) {
            out << id << ',' << data.class_names.at(s.label) << ',' << t;
            for (std::size_t c = 0; c < data.channels; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", s.x(c, t));
                out << ',' << buf;
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");

    nlohmann::ordered_json meta;
    meta["sample_rate"] = data.sample_rate;
    meta["channels"] = data.channels;
    meta["frames"] = data.frames;
    meta["class_names"] = data.class_names;
    meta["pipeline"] = data.pipeline;
    std::ofstream side(sidecar_path(path), std::ios::binary);
    if (!side) throw std::runtime_error("cannot open '" + sidecar_path(path) + "' for writing");
    side << meta.dump(2) << '\n';
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& msg) {
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": " + msg);
}

} // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");

    Dataset data;
    data.class_names = default_class_names();
    std::size_t expected_frames = 0;
    {
        std::ifstream side(sidecar_path(path));
        if (side) {
            const auto meta = nlohmann::json::parse(side);
            data.sample_rate = meta.value("sample_rate", 250.0);
            data.class_names = meta.value("class_names", default_class_names());
            data.pipeline = meta.value("pipeline", std::vector<std::string>{});
            expected_frames = meta.value("frames", std::size_t{0});
        }
    }
    std::map<std::string, std::size_t> class_index;
    for (std::size_t k = 0; k < data.class_names.size(); ++k) class_index[data.class_names[k]] = k;

    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) csv_error(path, 1, "empty file, missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() < 4 || header[0] != "gesture_id" || header[1] != "class" || header[2] != "frame")
        csv_error(path, 1, "missing columns: expected gesture_id,class,frame,ch0,...");
    const std::size_t channels = header.size() - 3;
    for (std::size_t c = 0; c < channels; ++c)
        if (header[3 + c] != "ch" + std::to_string(c))
            csv_error(path, 1, "missing column ch" + std::to_string(c));
    data.channels = channels;

    std::string current_id;
    std::vector<std::vector<double>> frames_buf;
    std::size_t current_label = 0;
    std::map<std::string, bool> seen;

    auto flush = [&](std::size_t at_line) {
        if (current_id.empty()) return;
        if (expected_frames == 0) expected_frames = frames_buf.size();
        if (frames_buf.size() != expected_frames)
            csv_error(path, at_line, "gesture '" + current_id + "' has " + std::to_string(frames_buf.size()) +
                                         " frames, expected " + std::to_string(expected_frames));
        GestureSample s;
        s.x = Mat(channels, frames_buf.size());
        for (std::size_t t = 0; t < frames_buf.size(); ++t)
            for (std::size_t c = 0; c < channels; ++c) s.x(c, t) = frames_buf[t][c];
        s.label = current_label;
        s.source = current_id;
        data.samples.push_back(std::move(s));
        seen[current_id] = true;
        frames_buf.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            csv_error(path, lineno, "ragged row: " + std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(header.size()));
        const std::string& id = fields[0];
        if (id.empty()) csv_error(path, lineno, "empty gesture_id");
        const auto cls = class_index.find(fields[1]);
        if (cls == class_index.end()) csv_error(path, lineno, "unknown class label '" + fields[1] + "'");

        if (id != current_id) {
            flush(lineno);
            if (seen.count(id)) csv_error(path, lineno, "gesture '" + id + "' rows are not contiguous");
            current_id = id;
            current_label = cls->second;
        } else if (cls->second != current_label) {
            csv_error(path, lineno, "gesture '" + id + "' changes class mid-gesture");
        }

        std::size_t frame = 0;
        try {
            std::size_t used = 0;
            frame = std::stoul(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("frame");
        } catch (const std::exception&) {
            csv_error(path, lineno, "bad frame index '" + fields[2] + "'");
        }
        if (frame != frames_buf.size())
            csv_error(path, lineno, "gesture '" + id + "': frame index " + std::to_string(frame) +
                                        " breaks contiguity (expected " + std::to_string(frames_buf.size()) + ")");
        std::vector<double> values(channels);
        for (std::size_t c = 0; c < channels; ++c) {
            try {
                std::size_t used = 0;
                values[c] = std::stod(fields[3 + c], &used);
                if (used != fields[3 + c].size()) throw std::invalid_argument("value");
            } catch (const std::exception&) {
                csv_error(path, lineno, "bad value '" + fields[3 + c] + "' in column ch" + std::to_string(c));
            }
            if (!std::isfinite(values[c])) csv_error(path, lineno, "non-finite value in column ch" + std::to_string(c));
        }
        frames_buf.push_back(std::move(values));
    }
    flush(lineno);
    data.frames = expected_frames;
    return data;
}

} // namespace cvxattn
