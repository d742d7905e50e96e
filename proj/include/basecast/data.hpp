#ifndef BASECAST_DATA_HPP
#define BASECAST_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "basecast/tensor.hpp"

namespace basecast {

/**
 * A multivariate series as loaded from disk: values are (T x C) row-major,
 * one row per time step. Rows with unparseable or missing cells are
 * rejected at load time, never patched.
 */
struct RawSeries {
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps; // one per row, as read
    std::vector<double> values;          // rows * channels

    int64_t rows() const { return channel_names.empty() ? 0 : static_cast<int64_t>(values.size()) / channels(); }
    int channels() const { return static_cast<int>(channel_names.size()); }
    double at(int64_t t, int c) const { return values[t * channels() + c]; }
};

/// First column is a timestamp, remaining columns are numeric channels,
/// one header row.
RawSeries load_csv(const std::string& path);

/// Contiguous block of rows; start is an absolute index into the series.
struct SeriesSegment {
    int64_t start = 0;
    int64_t length = 0;
};

struct ChronoSplit {
    SeriesSegment train, val, test;
};

/**
 * Chronological, non-overlapping split. Train and val lengths are
 * floor(ratio * T); test takes the remainder. Every segment must fit at
 * least one window of input_len + output_len rows. Windows never straddle
 * segment boundaries because they are generated per segment.
 */
ChronoSplit chrono_split(const RawSeries& series, double r_train, double r_val,
                         double r_test, int input_len, int output_len);

/// Per-channel z-score statistics, fit on the train segment only.
/// Population standard deviation; zero-variance channels are rejected.
class Normalizer {
public:
    static Normalizer fit(const RawSeries& series, const SeriesSegment& train);

    double apply(double v, int c) const { return (v - mean_[c]) / stddev_[c]; }
    double invert(double v, int c) const { return v * stddev_[c] + mean_[c]; }
    int channels() const { return static_cast<int>(mean_.size()); }

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return stddev_; }

    static Normalizer from_stats(std::vector<double> mean, std::vector<double> stddev);

private:
    std::vector<double> mean_, stddev_;
};

/// One training/evaluation window. x and y are adjacent in time, y strictly
/// after x; tau is the normalized timestamp of the first history row against
/// the full series length.
struct WindowBatch {
    Tensor x;    // (C, I) normalized
    Tensor y;    // (C, O) normalized
    double tau = 0.0;
    int64_t t = 0; // absolute index of the first history row
};

/// Window start offsets (absolute) within a segment: start, start+stride, ...
std::vector<int64_t> window_offsets(const SeriesSegment& segment, int input_len,
                                    int output_len, int stride);

/// Materialize the window at absolute offset t. total_len is the full raw
/// series length, which keeps tau comparable across splits.
WindowBatch make_window(const RawSeries& series, const Normalizer& norm, int64_t t,
                        int input_len, int output_len, int64_t total_len);

/// One sinusoid shared across channels, with per-channel amplitude/phase.
struct ToneSpec {
    double period = 24.0;
    std::vector<double> amplitude; // per channel
    std::vector<double> phase;     // per channel
};

struct SynthSpec {
    int channels = 8;
    int64_t length = 4000;
    std::vector<ToneSpec> tones;
    double noise_sigma = 0.1;
    uint64_t seed = 1;
};

/// Tones at the given periods with seeded per-channel amplitudes in
/// [0.5, 1.5] and phases in [0, 2pi).
SynthSpec default_synth_spec(int channels, int64_t length,
                             const std::vector<double>& periods, double noise_sigma,
                             uint64_t seed);

/// channel[t] = sum_k amp_k * sin(2 pi t / period_k + phase_k) + sigma*N(0,1).
RawSeries synth_generate(const SynthSpec& spec);

} // namespace basecast

#endif // BASECAST_DATA_HPP
