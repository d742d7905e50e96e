// basecast command-line interface: train, eval, predict, ablate, and artifact
// export for the learned-basis forecaster.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "basecast/checkpoint.hpp"
#include "basecast/losses.hpp"
#include "basecast/textio.hpp"
#include "basecast/trainer.hpp"

namespace fs = std::filesystem;
using namespace basecast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1; // aborted runs, IO failures
constexpr int kExitConfig = 2; // invalid configuration or usage

// ---- flag plumbing ----

// One entry per configurable knob: CLI value storage plus the option handle,
// so explicit flags can override --config file values.
struct ConfigFlags {
    std::string config_path;
    int channels = 0;
    int input_len = 0, output_len = 0;
    int num_bases = 0, heads = 0, bcab_layers = 0, coef_dim = 0;
    int bottleneck = 0, basis_hidden = 0;
    std::string activation, basis_kind;
    double epsilon = 0, w_pred = 0, w_align = 0, w_smooth = 0;
    double lr = 0;
    int epochs = 0, patience = 0, batch = 0;
    int stride = 0, eval_stride = 0;
    uint64_t seed = 0;
    std::string split_ratios;

    CLI::Option *o_channels = nullptr, *o_input = nullptr, *o_output = nullptr;
    CLI::Option *o_bases = nullptr, *o_heads = nullptr, *o_layers = nullptr;
    CLI::Option *o_dc = nullptr, *o_bottleneck = nullptr, *o_basis_hidden = nullptr;
    CLI::Option *o_activation = nullptr, *o_basis_kind = nullptr;
    CLI::Option *o_epsilon = nullptr, *o_wp = nullptr, *o_wa = nullptr, *o_ws = nullptr;
    CLI::Option *o_lr = nullptr, *o_epochs = nullptr, *o_patience = nullptr;
    CLI::Option *o_batch = nullptr, *o_stride = nullptr, *o_eval_stride = nullptr;
    CLI::Option *o_seed = nullptr, *o_split = nullptr;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file with flat keys");
    f.o_channels = cmd->add_option("--channels", f.channels, "number of series (C)");
    f.o_input = cmd->add_option("--I", f.input_len, "history length (I)");
    f.o_output = cmd->add_option("--O", f.output_len, "horizon length (O)");
    f.o_bases = cmd->add_option("--N", f.num_bases, "number of basis vectors (N)");
    f.o_heads = cmd->add_option("--H", f.heads, "coefficient heads (H), must divide O");
    f.o_layers = cmd->add_option("--M", f.bcab_layers, "stacked cross-attention layers (M)");
    f.o_dc = cmd->add_option("--Dc", f.coef_dim, "per-head width in the coef stack");
    f.o_bottleneck = cmd->add_option("--bottleneck", f.bottleneck,
                                     "forecast MLP bottleneck width");
    f.o_basis_hidden =
        cmd->add_option("--basis-hidden", f.basis_hidden, "basis network hidden width");
    f.o_activation =
        cmd->add_option("--activation", f.activation, "relu|gelu|linear");
    f.o_basis_kind = cmd->add_option("--basis-kind", f.basis_kind,
                                     "learnable|fixed-sine-grid|random-sine|none");
    f.o_epsilon = cmd->add_option("--epsilon", f.epsilon, "alignment temperature");
    f.o_wp = cmd->add_option("--w-pred", f.w_pred, "prediction loss weight");
    f.o_wa = cmd->add_option("--w-align", f.w_align, "alignment loss weight");
    f.o_ws = cmd->add_option("--w-smooth", f.w_smooth, "smoothness loss weight");
    f.o_lr = cmd->add_option("--lr", f.lr, "learning rate");
    f.o_epochs = cmd->add_option("--epochs", f.epochs, "max training epochs");
    f.o_patience = cmd->add_option("--patience", f.patience, "early-stopping patience");
    f.o_batch = cmd->add_option("--batch", f.batch, "batch size");
    f.o_stride = cmd->add_option("--stride", f.stride, "train window stride");
    f.o_eval_stride = cmd->add_option("--eval-stride", f.eval_stride,
                                      "evaluation window stride");
    f.o_seed = cmd->add_option("--seed", f.seed, "seed for all randomness");
    f.o_split = cmd->add_option("--split", f.split_ratios,
                                "train,val,test ratios, e.g. 0.7,0.1,0.2");
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(std::string("cannot parse ") + what + " value '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
    return out;
}

ModelConfig resolve_config(const ConfigFlags& f) {
    ModelConfig cfg;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw ConfigError("cannot open config file '" + f.config_path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        cfg = ModelConfig::from_json(buf.str());
    }
    if (f.o_channels->count()) cfg.channels = f.channels;
    if (f.o_input->count()) cfg.input_len = f.input_len;
    if (f.o_output->count()) cfg.output_len = f.output_len;
    if (f.o_bases->count()) cfg.num_bases = f.num_bases;
    if (f.o_heads->count()) cfg.heads = f.heads;
    if (f.o_layers->count()) cfg.bcab_layers = f.bcab_layers;
    if (f.o_dc->count()) cfg.coef_dim = f.coef_dim;
    if (f.o_bottleneck->count()) cfg.bottleneck = f.bottleneck;
    if (f.o_basis_hidden->count()) cfg.basis_hidden = f.basis_hidden;
    if (f.o_activation->count()) cfg.activation = activation_from_string(f.activation);
    if (f.o_basis_kind->count()) cfg.basis_kind = basis_kind_from_string(f.basis_kind);
    if (f.o_epsilon->count()) cfg.epsilon = f.epsilon;
    if (f.o_wp->count()) cfg.w_pred = f.w_pred;
    if (f.o_wa->count()) cfg.w_align = f.w_align;
    if (f.o_ws->count()) cfg.w_smooth = f.w_smooth;
    if (f.o_lr->count()) cfg.lr = f.lr;
    if (f.o_epochs->count()) cfg.epochs = f.epochs;
    if (f.o_patience->count()) cfg.patience = f.patience;
    if (f.o_batch->count()) cfg.batch_size = f.batch;
    if (f.o_stride->count()) cfg.train_stride = f.stride;
    if (f.o_eval_stride->count()) cfg.eval_stride = f.eval_stride;
    if (f.o_seed->count()) cfg.seed = f.seed;
    if (f.o_split->count()) {
        auto ratios = parse_double_list(f.split_ratios, "--split");
        if (ratios.size() != 3)
            throw ConfigError("--split needs exactly three ratios, got " +
                              std::to_string(ratios.size()));
        cfg.split_train = ratios[0];
        cfg.split_val = ratios[1];
        cfg.split_test = ratios[2];
    }
    return cfg;
}

// ---- data plumbing ----

struct DataFlags {
    std::string data; // path or "synth"
    int synth_channels = 8;
    int64_t synth_length = 4000;
    std::string synth_periods = "24,48,96";
    double synth_noise = 0.1;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
    cmd->add_option("--data", d.data, "CSV path, or 'synth' for generated data")
        ->required();
    cmd->add_option("--synth-channels", d.synth_channels, "synthetic channel count");
    cmd->add_option("--synth-length", d.synth_length, "synthetic series length");
    cmd->add_option("--synth-periods", d.synth_periods,
                    "synthetic tone periods, comma separated");
    cmd->add_option("--synth-noise", d.synth_noise, "synthetic noise sigma");
}

RawSeries load_data(const DataFlags& d, uint64_t seed) {
    if (d.data == "synth") {
        auto periods = parse_double_list(d.synth_periods, "--synth-periods");
        SynthSpec spec = default_synth_spec(d.synth_channels, d.synth_length, periods,
                                            d.synth_noise, seed);
        return synth_generate(spec);
    }
    return load_csv(d.data);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

SeriesSegment pick_segment(const Dataset& data, const std::string& name) {
    if (name == "train") return data.split.train;
    if (name == "val") return data.split.val;
    if (name == "test") return data.split.test;
    throw ConfigError("unknown split '" + name + "' (expected train|val|test)");
}

// ---- svg export ----

std::string basis_svg(const Tensor& z, int input_len) {
    const int rows = z.dim(0), cols = z.dim(1);
    const int panel_h = 80, pad = 10, width = 880;
    const int height = rows * (panel_h + pad) + pad;
    double lo = z.values()[0], hi = z.values()[0];
    for (double v : z.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width + 2 * pad
       << "' height='" << height << "'>\n";
    for (int r = 0; r < rows; ++r) {
        const int top = pad + r * (panel_h + pad);
        os << "<rect x='" << pad << "' y='" << top << "' width='" << width
           << "' height='" << panel_h << "' fill='white' stroke='#ccc'/>\n";
        const double split_x = pad + width * static_cast<double>(input_len) / cols;
        os << "<line x1='" << split_x << "' y1='" << top << "' x2='" << split_x
           << "' y2='" << top + panel_h << "' stroke='#d66' stroke-dasharray='4'/>\n";
        os << "<polyline fill='none' stroke='#36c' stroke-width='1' points='";
        for (int t = 0; t < cols; ++t) {
            const double x = pad + width * static_cast<double>(t) / (cols - 1);
            const double y = top + panel_h - panel_h * (z.at(r, t) - lo) / (hi - lo);
            os << x << "," << y << " ";
        }
        os << "'/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// ---- commands ----

int cmd_train(const ConfigFlags& cf, const DataFlags& df, const std::string& out_dir) {
    ModelConfig cfg = resolve_config(cf);
    RawSeries series = load_data(df, cfg.seed);
    if (!cf.o_channels->count()) cfg.channels = series.channels();

    auto errors = cfg.validate();
    if (!errors.empty()) {
        std::cerr << "configuration has " << errors.size() << " problem"
                  << (errors.size() == 1 ? "" : "s") << ":\n";
        for (const auto& e : errors) std::cerr << "  - " << e << "\n";
        return kExitConfig;
    }

    Dataset data = prepare_dataset(std::move(series), cfg);
    Model model(cfg);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "config.json", cfg.to_json() + "\n");

    TrainReport report = train(model, data, &std::cerr);
    write_file(fs::path(out_dir) / "report.csv", report.to_csv(cfg));
    write_file(fs::path(out_dir) / "timing.csv", report.timing_csv());
    save_checkpoint(model, data.norm, (fs::path(out_dir) / "model.ckpt").string());

    EvalMetrics test = evaluate(model, data, data.split.test);
    std::cout << "stop_reason=" << report.stop_reason << " best_epoch="
              << report.best_epoch << "\n";
    std::cout << "test_mse=" << format_double(test.mse)
              << " test_mae=" << format_double(test.mae) << "\n";
    return report.stop_reason == "nan-abort" ? kExitRuntime : kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const DataFlags& df,
             const std::string& split_name, const std::string& out_dir,
             uint64_t data_seed) {
    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    RawSeries series = load_data(df, data_seed ? data_seed : ckpt.config.seed);
    if (series.channels() != ckpt.config.channels)
        throw ConfigError("checkpoint expects " + std::to_string(ckpt.config.channels) +
                          " channels but the data has " +
                          std::to_string(series.channels()));

    Dataset data;
    data.total_len = series.rows();
    data.split = chrono_split(series, ckpt.config.split_train, ckpt.config.split_val,
                              ckpt.config.split_test, ckpt.config.input_len,
                              ckpt.config.output_len);
    data.norm = ckpt.norm; // normalization travels with the checkpoint
    data.series = std::move(series);

    SeriesSegment segment = pick_segment(data, split_name);
    EvalMetrics m = evaluate(*ckpt.model, data, segment);
    EvalMetrics naive = persistence_metrics(data, segment, ckpt.config.input_len,
                                            ckpt.config.output_len,
                                            ckpt.config.eval_stride);
    std::cout << "split=" << split_name << " windows=" << m.windows << "\n";
    std::cout << "mse=" << format_double(m.mse) << " mae=" << format_double(m.mae)
              << "\n";
    std::cout << "persistence_mse=" << format_double(naive.mse)
              << " persistence_mae=" << format_double(naive.mae) << "\n";

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::string csv = "split,windows,mse,mae,persistence_mse,persistence_mae\n";
        csv += split_name + "," + std::to_string(m.windows) + "," +
               format_double(m.mse) + "," + format_double(m.mae) + "," +
               format_double(naive.mse) + "," + format_double(naive.mae) + "\n";
        write_file(fs::path(out_dir) / "metrics.csv", csv);
    }
    return kExitOk;
}

int cmd_predict(const std::string& ckpt_path, const std::string& history_path,
                double tau, const std::string& out_dir) {
    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    const ModelConfig& cfg = ckpt.config;
    RawSeries hist = load_csv(history_path);
    if (hist.channels() != cfg.channels || hist.rows() != cfg.input_len)
        throw ConfigError("history must have exactly " + std::to_string(cfg.input_len) +
                          " rows and " + std::to_string(cfg.channels) +
                          " channels; got " + std::to_string(hist.rows()) + " rows, " +
                          std::to_string(hist.channels()) + " channels");

    // normalize with the checkpoint statistics, channels as rows
    std::vector<double> x(static_cast<size_t>(cfg.channels) * cfg.input_len);
    for (int c = 0; c < cfg.channels; ++c)
        for (int i = 0; i < cfg.input_len; ++i)
            x[static_cast<size_t>(c) * cfg.input_len + i] =
                ckpt.norm.apply(hist.at(i, c), c);
    Tensor xt = Tensor::from_data({cfg.channels, cfg.input_len}, std::move(x));
    Tensor pred = ckpt.model->forecast(xt, tau);

    std::string csv = "# tau=" + format_double(tau) + "\n";
    csv += "channel";
    for (int o = 0; o < cfg.output_len; ++o) csv += ",t" + std::to_string(o);
    csv += "\n";
    for (int c = 0; c < cfg.channels; ++c) {
        csv += hist.channel_names[c];
        for (int o = 0; o < cfg.output_len; ++o) {
            csv += ',';
            append_double(csv, ckpt.norm.invert(
                                   pred.values()[static_cast<size_t>(c) * cfg.output_len + o], c));
        }
        csv += '\n';
    }
    fs::create_directories(fs::path(out_dir) / "predictions");
    write_file(fs::path(out_dir) / "predictions" / "forecast.csv", csv);
    std::cout << csv;
    return kExitOk;
}

std::vector<AblationVariant> build_grid(const ModelConfig& base,
                                        const std::vector<std::string>& grids) {
    std::vector<AblationVariant> variants;
    for (const auto& spec : grids) {
        const size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("grid spec '" + spec + "' must look like key=v1,v2,...");
        const std::string key = spec.substr(0, eq);
        std::stringstream ss(spec.substr(eq + 1));
        std::string value;
        while (std::getline(ss, value, ',')) {
            ModelConfig cfg = base;
            if (key == "N")
                cfg.num_bases = std::stoi(value);
            else if (key == "H")
                cfg.heads = std::stoi(value);
            else if (key == "M")
                cfg.bcab_layers = std::stoi(value);
            else if (key == "Dc")
                cfg.coef_dim = std::stoi(value);
            else if (key == "bottleneck")
                cfg.bottleneck = std::stoi(value);
            else if (key == "epsilon")
                cfg.epsilon = std::stod(value);
            else if (key == "basis-kind")
                cfg.basis_kind = basis_kind_from_string(value);
            else if (key == "loss-arm") {
                if (value == "none") {
                    cfg.w_align = 0;
                    cfg.w_smooth = 0;
                } else if (value == "infonce") {
                    cfg.w_align = 1;
                    cfg.w_smooth = 0;
                } else if (value == "smooth") {
                    cfg.w_align = 0;
                    cfg.w_smooth = 1;
                } else if (value == "infonce+smooth") {
                    cfg.w_align = 1;
                    cfg.w_smooth = 1;
                } else {
                    throw ConfigError("unknown loss arm '" + value + "'");
                }
            } else {
                throw ConfigError("unknown grid key '" + key + "'");
            }
            variants.push_back({key + "=" + value, cfg});
        }
    }
    if (variants.empty()) throw ConfigError("ablation grid is empty");
    return variants;
}

int cmd_ablate(const ConfigFlags& cf, const DataFlags& df,
               const std::vector<std::string>& grids, const std::string& seeds_text,
               const std::string& out_dir) {
    ModelConfig base = resolve_config(cf);

    std::vector<uint64_t> seeds;
    if (seeds_text.empty()) {
        seeds = {base.seed, base.seed + 1, base.seed + 2};
    } else {
        for (double v : parse_double_list(seeds_text, "--seeds"))
            seeds.push_back(static_cast<uint64_t>(v));
    }

    // channels must be known up front for validation; synth data defines them
    RawSeries probe_data = load_data(df, seeds[0]);
    if (!cf.o_channels->count()) base.channels = probe_data.channels();

    auto variants = build_grid(base, grids);

    auto errors = base.validate();
    if (!errors.empty()) {
        std::cerr << "base configuration has problems:\n";
        for (const auto& e : errors) std::cerr << "  - " << e << "\n";
        return kExitConfig;
    }

    auto provider = [&](uint64_t seed) { return load_data(df, seed); };
    auto results = run_ablation(variants, seeds, provider, &std::cerr);

    std::string csv = ablation_csv(results);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "ablation.csv", csv);
    std::cout << csv;
    return kExitOk;
}

int cmd_export_basis(const std::string& ckpt_path, double tau, bool svg,
                     const std::string& out_dir) {
    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    Tensor z = ckpt.model->basis_source().generate(tau);
    fs::create_directories(fs::path(out_dir) / "basis-export");
    std::ostringstream os;
    write_basis_csv(z, ckpt.config.input_len, os);
    write_file(fs::path(out_dir) / "basis-export" / "basis.csv", os.str());
    if (svg)
        write_file(fs::path(out_dir) / "basis-export" / "basis.svg",
                   basis_svg(z, ckpt.config.input_len));
    std::cout << "exported " << z.dim(0) << " basis rows over " << z.dim(1)
              << " steps\n";
    return kExitOk;
}

int cmd_export_attention(const std::string& ckpt_path, const DataFlags& df,
                         const std::string& split_name, int window_index,
                         const std::string& view_name, const std::string& out_dir,
                         uint64_t data_seed) {
    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    const ModelConfig& cfg = ckpt.config;
    RawSeries series = load_data(df, data_seed ? data_seed : cfg.seed);
    if (series.channels() != cfg.channels)
        throw ConfigError("checkpoint expects " + std::to_string(cfg.channels) +
                          " channels but the data has " +
                          std::to_string(series.channels()));
    Dataset data;
    data.total_len = series.rows();
    data.split = chrono_split(series, cfg.split_train, cfg.split_val, cfg.split_test,
                              cfg.input_len, cfg.output_len);
    data.norm = ckpt.norm;
    data.series = std::move(series);

    SeriesSegment segment = pick_segment(data, split_name);
    auto offsets = window_offsets(segment, cfg.input_len, cfg.output_len, 1);
    if (window_index < 0 || window_index >= static_cast<int>(offsets.size()))
        throw ConfigError("window index " + std::to_string(window_index) +
                          " out of range (split has " + std::to_string(offsets.size()) +
                          " windows)");
    WindowBatch w = make_window(data.series, data.norm, offsets[window_index],
                                cfg.input_len, cfg.output_len, data.total_len);

    // series-over-basis attention of the last stacked layer
    AttentionProbe probe;
    if (view_name == "history") {
        (void)ckpt.model->forecast(w.x, w.tau, &probe);
    } else if (view_name == "future") {
        (void)ckpt.model->training_forward(w.x, w.y, w.tau, nullptr, &probe);
    } else {
        throw ConfigError("unknown view '" + view_name + "' (expected history|future)");
    }

    std::string csv = "head,series";
    for (int j = 0; j < probe.cols; ++j) csv += ",b" + std::to_string(j);
    csv += "\n";
    for (int h = 0; h < probe.heads; ++h)
        for (int i = 0; i < probe.rows; ++i) {
            csv += std::to_string(h) + "," + std::to_string(i);
            for (int j = 0; j < probe.cols; ++j) {
                csv += ',';
                append_double(csv, probe.weights[(static_cast<size_t>(h) * probe.rows + i) *
                                                     probe.cols +
                                                 j]);
            }
            csv += '\n';
        }
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "attention.csv", csv);
    std::cout << csv;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"basecast: learned-basis time series forecasting"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model and write artifacts");
    ConfigFlags train_cf;
    DataFlags train_df;
    std::string train_out = "runs/latest";
    add_config_flags(train_cmd, train_cf);
    add_data_flags(train_cmd, train_df);
    train_cmd->add_option("--out", train_out, "output directory");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    std::string eval_ckpt, eval_split = "test", eval_out;
    uint64_t eval_seed = 0;
    DataFlags eval_df;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    add_data_flags(eval_cmd, eval_df);
    eval_cmd->add_option("--split", eval_split, "train|val|test");
    eval_cmd->add_option("--out", eval_out, "optional output directory for metrics.csv");
    eval_cmd->add_option("--data-seed", eval_seed,
                         "seed for synthetic data regeneration (defaults to checkpoint seed)");

    // predict
    auto* predict_cmd =
        app.add_subcommand("predict", "forecast from a history CSV");
    std::string pred_ckpt, pred_history, pred_out = "runs/latest";
    double pred_tau = 0.0;
    predict_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint path")->required();
    predict_cmd->add_option("--history", pred_history, "CSV with exactly I rows")
        ->required();
    predict_cmd->add_option("--tau", pred_tau, "normalized window timestamp in [0,1)");
    predict_cmd->add_option("--out", pred_out, "output directory");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "train a grid of variants");
    ConfigFlags ablate_cf;
    DataFlags ablate_df;
    std::vector<std::string> ablate_grids;
    std::string ablate_seeds, ablate_out = "runs/ablation";
    add_config_flags(ablate_cmd, ablate_cf);
    add_data_flags(ablate_cmd, ablate_df);
    ablate_cmd->add_option("--grid", ablate_grids, "axis spec key=v1,v2,... (repeatable)")
        ->required();
    ablate_cmd->add_option("--seeds", ablate_seeds, "comma-separated seeds");
    ablate_cmd->add_option("--out", ablate_out, "output directory");

    // export-basis
    auto* basis_cmd = app.add_subcommand("export-basis", "dump the basis as CSV");
    std::string basis_ckpt, basis_out = "runs/latest";
    double basis_tau = 0.0;
    bool basis_svg_flag = false;
    basis_cmd->add_option("--checkpoint", basis_ckpt, "checkpoint path")->required();
    basis_cmd->add_option("--tau", basis_tau, "normalized window timestamp");
    basis_cmd->add_flag("--svg", basis_svg_flag, "also write a line-plot SVG");
    basis_cmd->add_option("--out", basis_out, "output directory");

    // export-attention
    auto* attn_cmd = app.add_subcommand("export-attention",
                                        "dump last-layer attention weights as CSV");
    std::string attn_ckpt, attn_split = "test", attn_view = "history", attn_out = "runs/latest";
    int attn_window = 0;
    uint64_t attn_seed = 0;
    DataFlags attn_df;
    attn_cmd->add_option("--checkpoint", attn_ckpt, "checkpoint path")->required();
    add_data_flags(attn_cmd, attn_df);
    attn_cmd->add_option("--split", attn_split, "train|val|test");
    attn_cmd->add_option("--window", attn_window, "window index within the split");
    attn_cmd->add_option("--view", attn_view, "history|future");
    attn_cmd->add_option("--out", attn_out, "output directory");
    attn_cmd->add_option("--data-seed", attn_seed, "seed for synthetic data");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_cf, train_df, train_out);
        if (eval_cmd->parsed())
            return cmd_eval(eval_ckpt, eval_df, eval_split, eval_out, eval_seed);
        if (predict_cmd->parsed())
            return cmd_predict(pred_ckpt, pred_history, pred_tau, pred_out);
        if (ablate_cmd->parsed())
            return cmd_ablate(ablate_cf, ablate_df, ablate_grids, ablate_seeds,
                              ablate_out);
        if (basis_cmd->parsed())
            return cmd_export_basis(basis_ckpt, basis_tau, basis_svg_flag, basis_out);
        if (attn_cmd->parsed())
            return cmd_export_attention(attn_ckpt, attn_df, attn_split, attn_window,
                                        attn_view, attn_out, attn_seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
