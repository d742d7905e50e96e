#ifndef BASECAST_BASIS_HPP
#define BASECAST_BASIS_HPP

#include <memory>
#include <ostream>
#include <utility>

#include "basecast/config.hpp"
#include "basecast/tensor.hpp"

namespace basecast {

/// tau = t / total_len, in [0, 1). Throws on t outside [0, total_len).
double normalize_timestamp(int64_t t, int64_t total_len);

/// Split z (N x (I+O)) at column I into (z_x: N x I, z_y: N x O).
std::pair<Tensor, Tensor> split_basis(const Tensor& z, int input_len);

/// Apply the configured nonlinearity (Linear passes through).
Tensor activate(const Tensor& x, Activation act);

/**
 * Produces the shared basis for a window, N rows spanning the full
 * history+future horizon. Learnable sources are pure functions of
 * (tau, parameters); fixed sources ignore tau.
 */
class BasisSource {
public:
    virtual ~BasisSource() = default;
    virtual Tensor generate(double tau) const = 0;
    /// Trainable leaves; empty for fixed sources.
    virtual ParamList parameters() = 0;
};

/**
 * Four affine layers on the scalar timestamp. Layer 1 lifts tau to the
 * hidden width; the output of layer 2 gets a skip connection from its own
 * input (layer 1's output); layer 4 is linear and reshaped to N x (I+O).
 */
class BasisNet : public BasisSource {
public:
    BasisNet(int num_bases, int input_len, int output_len, int hidden,
             Activation act, Rng& rng);

    Tensor generate(double tau) const override;
    ParamList parameters() override;

private:
    int num_bases_;
    int span_;
    Activation act_;
    Tensor w1_, b1_, w2_, b2_, w3_, b3_, w4_, b4_;
};

/**
 * N/2 sine rows followed by N/2 cosine rows at frequencies evenly spaced
 * between 1/input_len and 1/2 (periods input_len down to 2), evaluated over
 * the full I+O horizon. Requires an even N.
 */
class SineGridBasis : public BasisSource {
public:
    SineGridBasis(int num_bases, int input_len, int output_len);
    Tensor generate(double tau) const override;
    ParamList parameters() override { return {}; }

private:
    Tensor basis_;
};

/// Rows alternate sine/cosine at seeded frequencies drawn uniformly from
/// [1/(I+O), 1/2].
class RandomSineBasis : public BasisSource {
public:
    RandomSineBasis(int num_bases, int input_len, int output_len, uint64_t seed);
    Tensor generate(double tau) const override;
    ParamList parameters() override { return {}; }

private:
    Tensor basis_;
};

/// All-zero basis; disables the basis pathway entirely (diagnostics arm).
class ZeroBasis : public BasisSource {
public:
    ZeroBasis(int num_bases, int input_len, int output_len);
    Tensor generate(double tau) const override;
    ParamList parameters() override { return {}; }

private:
    Tensor basis_;
};

/// Build the source selected by cfg.basis_kind. `rng` seeds learnable
/// initialization; fixed kinds derive their own stream from cfg.seed.
std::unique_ptr<BasisSource> make_basis_source(const ModelConfig& cfg, Rng& rng);

/// N rows, I+O value columns with header t0..t{I+O-1}, plus a trailing
/// io_boundary column holding the history length.
void write_basis_csv(const Tensor& z, int input_len, std::ostream& os);

} // namespace basecast

#endif // BASECAST_BASIS_HPP
