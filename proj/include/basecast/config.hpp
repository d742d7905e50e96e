#ifndef BASECAST_CONFIG_HPP
#define BASECAST_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace basecast {

enum class Activation { Relu, Gelu, Linear };
enum class BasisKind { Learnable, FixedSineGrid, RandomSine, None };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);
BasisKind basis_kind_from_string(const std::string& s);
std::string to_string(BasisKind k);

/**
 * Every architecture and training hyperparameter in one place.
 *
 * Serialized as a flat JSON object; the same schema is accepted from
 * --config files, echoed into run directories, and embedded in checkpoints.
 */
struct ModelConfig {
    // data geometry
    int channels = 7;        // C, usually taken from the dataset
    int input_len = 96;      // I
    int output_len = 96;     // O

    // architecture
    int num_bases = 10;      // N
    int heads = 16;          // H, must divide output_len
    int bcab_layers = 2;     // M
    int coef_dim = 100;      // D_c, per-head width in the coef stack
    int bottleneck = 48;     // hidden width of the forecast MLPs
    int basis_hidden = 512;  // hidden width of the basis network
    Activation activation = Activation::Relu;
    BasisKind basis_kind = BasisKind::Learnable;

    // losses
    double epsilon = 1.0;    // alignment temperature
    double w_pred = 1.0;
    double w_align = 1.0;
    double w_smooth = 1.0;

    // optimizer
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;

    // training loop
    int epochs = 30;
    int patience = 3;
    int batch_size = 32;
    double split_train = 0.7;
    double split_val = 0.1;
    double split_test = 0.2;
    int train_stride = 1;
    int eval_stride = 1;
    uint64_t seed = 1;

    /// All violated constraints at once; empty means valid.
    std::vector<std::string> validate() const;
    /// validate() and throw ConfigError with every message if nonempty.
    void validate_or_throw() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);

    bool operator==(const ModelConfig&) const = default;

    /// Name of the first field that differs, or empty when equal.
    static std::string first_difference(const ModelConfig& a, const ModelConfig& b);
};

} // namespace basecast

#endif // BASECAST_CONFIG_HPP
