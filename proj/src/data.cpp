#include "basecast/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "basecast/basis.hpp"

namespace basecast {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    size_t pos = 0;
    while (true) {
        size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(pos));
            break;
        }
        cells.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
        cells.back().pop_back();
    return cells;
}

double parse_cell(const std::string& cell, int64_t line_no, size_t col) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw DataError("unparseable cell '" + cell + "' at line " +
                        std::to_string(line_no) + ", column " + std::to_string(col + 1));
    return v;
}

} // namespace

RawSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    auto header = split_line(line);
    if (header.size() < 2)
        throw DataError("'" + path + "' needs a timestamp column plus at least one channel");

    RawSeries series;
    series.channel_names.assign(header.begin() + 1, header.end());
    const size_t width = header.size();

    int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != width)
            throw DataError("ragged row at line " + std::to_string(line_no) + ": got " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(width));
        for (size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty())
                throw DataError("missing value at line " + std::to_string(line_no) +
                                ", column " + std::to_string(c + 1));
            series.values.push_back(parse_cell(cells[c], line_no, c));
        }
        series.timestamps.push_back(cells[0]);
    }
    if (series.values.empty())
        throw DataError("'" + path + "' has a header but no data rows");
    return series;
}

ChronoSplit chrono_split(const RawSeries& series, double r_train, double r_val,
                         double r_test, int input_len, int output_len) {
    if (r_train <= 0 || r_val <= 0 || r_test <= 0)
        throw ConfigError("split ratios must all be positive");
    if (std::abs(r_train + r_val + r_test - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");

    const int64_t total = series.rows();
    const int64_t n_train = static_cast<int64_t>(std::floor(r_train * total));
    const int64_t n_val = static_cast<int64_t>(std::floor(r_val * total));
    const int64_t n_test = total - n_train - n_val;

    const int64_t needed = static_cast<int64_t>(input_len) + output_len;
    auto check = [&](const char* name, int64_t len) {
        if (len < needed)
            throw ConfigError(std::string(name) + " segment has " + std::to_string(len) +
                              " rows; at least " + std::to_string(needed) +
                              " (input_len + output_len) are required");
    };
    check("train", n_train);
    check("val", n_val);
    check("test", n_test);

    ChronoSplit split;
    split.train = {0, n_train};
    split.val = {n_train, n_val};
    split.test = {n_train + n_val, n_test};
    return split;
}

Normalizer Normalizer::fit(const RawSeries& series, const SeriesSegment& train) {
    if (train.length <= 0) throw DataError("normalizer: empty train segment");
    const int channels = series.channels();
    std::vector<double> mean(channels, 0.0), stddev(channels, 0.0);
    for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int64_t t = train.start; t < train.start + train.length; ++t)
            acc += series.at(t, c);
        mean[c] = acc / static_cast<double>(train.length);
        double var = 0.0;
        for (int64_t t = train.start; t < train.start + train.length; ++t) {
            const double d = series.at(t, c) - mean[c];
            var += d * d;
        }
        var /= static_cast<double>(train.length); // population variance
        if (var == 0.0)
            throw DataError("channel '" + series.channel_names[c] +
                            "' has zero variance on the train split");
        stddev[c] = std::sqrt(var);
    }
    return from_stats(std::move(mean), std::move(stddev));
}

Normalizer Normalizer::from_stats(std::vector<double> mean, std::vector<double> stddev) {
    Normalizer n;
    n.mean_ = std::move(mean);
    n.stddev_ = std::move(stddev);
    return n;
}

std::vector<int64_t> window_offsets(const SeriesSegment& segment, int input_len,
                                    int output_len, int stride) {
    std::vector<int64_t> offsets;
    const int64_t span = static_cast<int64_t>(input_len) + output_len;
    for (int64_t t = segment.start; t + span <= segment.start + segment.length;
         t += stride)
        offsets.push_back(t);
    return offsets;
}

WindowBatch make_window(const RawSeries& series, const Normalizer& norm, int64_t t,
                        int input_len, int output_len, int64_t total_len) {
    const int channels = series.channels();
    std::vector<double> x(static_cast<size_t>(channels) * input_len);
    std::vector<double> y(static_cast<size_t>(channels) * output_len);
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < input_len; ++i)
            x[static_cast<size_t>(c) * input_len + i] = norm.apply(series.at(t + i, c), c);
        for (int o = 0; o < output_len; ++o)
            y[static_cast<size_t>(c) * output_len + o] =
                norm.apply(series.at(t + input_len + o, c), c);
    }
    WindowBatch w;
    w.x = Tensor::from_data({channels, input_len}, std::move(x));
    w.y = Tensor::from_data({channels, output_len}, std::move(y));
    w.t = t;
    w.tau = normalize_timestamp(t, total_len);
    return w;
}

SynthSpec default_synth_spec(int channels, int64_t length,
                             const std::vector<double>& periods, double noise_sigma,
                             uint64_t seed) {
    SynthSpec spec;
    spec.channels = channels;
    spec.length = length;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    Rng rng = Rng(seed).fork(7);
    for (double p : periods) {
        ToneSpec tone;
        tone.period = p;
        tone.amplitude.resize(channels);
        tone.phase.resize(channels);
        for (int c = 0; c < channels; ++c) {
            tone.amplitude[c] = rng.uniform(0.5, 1.5);
            tone.phase[c] = rng.uniform(0.0, kTwoPi);
        }
        spec.tones.push_back(std::move(tone));
    }
    return spec;
}

RawSeries synth_generate(const SynthSpec& spec) {
    for (const auto& tone : spec.tones) {
        if (tone.period < 2.0)
            throw ConfigError("synthetic tone periods must be >= 2, got " +
                              std::to_string(tone.period));
        if (static_cast<int>(tone.amplitude.size()) != spec.channels ||
            static_cast<int>(tone.phase.size()) != spec.channels)
            throw ConfigError("synthetic tone needs one amplitude and phase per channel");
    }
    RawSeries series;
    series.channel_names.reserve(spec.channels);
    for (int c = 0; c < spec.channels; ++c)
        series.channel_names.push_back("ch" + std::to_string(c));
    series.timestamps.reserve(spec.length);
    series.values.resize(static_cast<size_t>(spec.length) * spec.channels);

    Rng noise = Rng(spec.seed).fork(8);
    for (int64_t t = 0; t < spec.length; ++t) {
        series.timestamps.push_back(std::to_string(t));
        for (int c = 0; c < spec.channels; ++c) {
            double v = 0.0;
            for (const auto& tone : spec.tones)
                v += tone.amplitude[c] *
                     std::sin(kTwoPi * static_cast<double>(t) / tone.period +
                              tone.phase[c]);
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise.normal();
            series.values[static_cast<size_t>(t) * spec.channels + c] = v;
        }
    }
    return series;
}

} // namespace basecast
