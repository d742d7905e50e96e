#include "basecast/config.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "basecast/error.hpp"

namespace basecast {

using nlohmann::json;

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "gelu") return Activation::Gelu;
    if (s == "linear") return Activation::Linear;
    throw ConfigError("unknown activation '" + s + "' (expected relu|gelu|linear)");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Gelu: return "gelu";
        case Activation::Linear: return "linear";
    }
    return "relu";
}

BasisKind basis_kind_from_string(const std::string& s) {
    if (s == "learnable") return BasisKind::Learnable;
    if (s == "fixed-sine-grid") return BasisKind::FixedSineGrid;
    if (s == "random-sine") return BasisKind::RandomSine;
    if (s == "none") return BasisKind::None;
    throw ConfigError("unknown basis kind '" + s +
                      "' (expected learnable|fixed-sine-grid|random-sine|none)");
}

std::string to_string(BasisKind k) {
    switch (k) {
        case BasisKind::Learnable: return "learnable";
        case BasisKind::FixedSineGrid: return "fixed-sine-grid";
        case BasisKind::RandomSine: return "random-sine";
        case BasisKind::None: return "none";
    }
    return "learnable";
}

std::vector<std::string> ModelConfig::validate() const {
    std::vector<std::string> errors;
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    require(channels >= 1, "channels must be >= 1");
    require(input_len >= 1, "input_len (I) must be >= 1");
    require(output_len >= 1, "output_len (O) must be >= 1");
    require(input_len + output_len >= 3,
            "input_len + output_len must be >= 3 for the curvature penalty");
    require(num_bases >= 1, "num_bases (N) must be >= 1");
    require(heads >= 1, "heads (H) must be >= 1");
    if (heads >= 1 && output_len >= 1)
        require(output_len % heads == 0, "H must divide O (heads " + std::to_string(heads) +
                                             ", output_len " + std::to_string(output_len) + ")");
    require(bcab_layers >= 1, "bcab_layers (M) must be >= 1");
    require(coef_dim >= 1, "coef_dim (D_c) must be >= 1");
    require(bottleneck >= 1, "bottleneck must be >= 1");
    require(bottleneck <= output_len, "bottleneck must be <= output_len");
    require(basis_hidden >= 1, "basis_hidden must be >= 1");
    if (basis_kind == BasisKind::FixedSineGrid)
        require(num_bases % 2 == 0, "fixed-sine-grid needs an even num_bases (N)");
    require(epsilon > 0.0, "epsilon (alignment temperature) must be > 0");
    require(w_pred >= 0.0 && w_align >= 0.0 && w_smooth >= 0.0,
            "loss weights must be nonnegative");
    require(lr >= 0.0, "lr must be >= 0");
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
    require(adam_eps > 0.0, "adam_eps must be > 0");
    require(weight_decay >= 0.0, "weight_decay must be >= 0");
    require(epochs >= 1, "epochs must be >= 1");
    require(patience >= 1, "patience must be >= 1");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(split_train > 0.0 && split_val > 0.0 && split_test > 0.0,
            "split ratios must all be positive");
    require(std::abs(split_train + split_val + split_test - 1.0) < 1e-9,
            "split ratios must sum to 1");
    require(train_stride >= 1 && eval_stride >= 1, "strides must be >= 1");
    return errors;
}

void ModelConfig::validate_or_throw() const {
    auto errors = validate();
    if (errors.empty()) return;
    std::ostringstream os;
    os << "invalid configuration (" << errors.size() << " problem"
       << (errors.size() == 1 ? "" : "s") << "):";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
}

namespace {

json to_json_obj(const ModelConfig& c) {
    return json{{"channels", c.channels},
                {"input_len", c.input_len},
                {"output_len", c.output_len},
                {"num_bases", c.num_bases},
                {"heads", c.heads},
                {"bcab_layers", c.bcab_layers},
                {"coef_dim", c.coef_dim},
                {"bottleneck", c.bottleneck},
                {"basis_hidden", c.basis_hidden},
                {"activation", to_string(c.activation)},
                {"basis_kind", to_string(c.basis_kind)},
                {"epsilon", c.epsilon},
                {"w_pred", c.w_pred},
                {"w_align", c.w_align},
                {"w_smooth", c.w_smooth},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"weight_decay", c.weight_decay},
                {"epochs", c.epochs},
                {"patience", c.patience},
                {"batch_size", c.batch_size},
                {"split_train", c.split_train},
                {"split_val", c.split_val},
                {"split_test", c.split_test},
                {"train_stride", c.train_stride},
                {"eval_stride", c.eval_stride},
                {"seed", c.seed}};
}

} // namespace

std::string ModelConfig::to_json() const { return to_json_obj(*this).dump(2); }

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object with flat keys");

    ModelConfig c;
    json known = to_json_obj(c);
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
        known[key] = value;
    }
    try {
        c.channels = known["channels"].get<int>();
        c.input_len = known["input_len"].get<int>();
        c.output_len = known["output_len"].get<int>();
        c.num_bases = known["num_bases"].get<int>();
        c.heads = known["heads"].get<int>();
        c.bcab_layers = known["bcab_layers"].get<int>();
        c.coef_dim = known["coef_dim"].get<int>();
        c.bottleneck = known["bottleneck"].get<int>();
        c.basis_hidden = known["basis_hidden"].get<int>();
        c.activation = activation_from_string(known["activation"].get<std::string>());
        c.basis_kind = basis_kind_from_string(known["basis_kind"].get<std::string>());
        c.epsilon = known["epsilon"].get<double>();
        c.w_pred = known["w_pred"].get<double>();
        c.w_align = known["w_align"].get<double>();
        c.w_smooth = known["w_smooth"].get<double>();
        c.lr = known["lr"].get<double>();
        c.beta1 = known["beta1"].get<double>();
        c.beta2 = known["beta2"].get<double>();
        c.adam_eps = known["adam_eps"].get<double>();
        c.weight_decay = known["weight_decay"].get<double>();
        c.epochs = known["epochs"].get<int>();
        c.patience = known["patience"].get<int>();
        c.batch_size = known["batch_size"].get<int>();
        c.split_train = known["split_train"].get<double>();
        c.split_val = known["split_val"].get<double>();
        c.split_test = known["split_test"].get<double>();
        c.train_stride = known["train_stride"].get<int>();
        c.eval_stride = known["eval_stride"].get<int>();
        c.seed = known["seed"].get<uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value type: ") + e.what());
    }
    return c;
}

std::string ModelConfig::first_difference(const ModelConfig& a, const ModelConfig& b) {
    json ja = to_json_obj(a);
    json jb = to_json_obj(b);
    for (const auto& [key, value] : ja.items())
        if (jb[key] != value) return key;
    return "";
}

} // namespace basecast
