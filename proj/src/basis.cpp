#include "basecast/basis.hpp"

#include <charconv>
#include <cmath>

namespace basecast {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}
} // namespace

double normalize_timestamp(int64_t t, int64_t total_len) {
    if (total_len <= 0) throw Error("normalize_timestamp: total length must be positive");
    if (t < 0 || t >= total_len)
        throw Error("normalize_timestamp: t=" + std::to_string(t) + " outside [0, " +
                    std::to_string(total_len) + ")");
    return static_cast<double>(t) / static_cast<double>(total_len);
}

std::pair<Tensor, Tensor> split_basis(const Tensor& z, int input_len) {
    if (z.ndim() != 2 || z.dim(1) <= input_len)
        throw ShapeError("split_basis: need a 2-D basis with more than " +
                         std::to_string(input_len) + " columns, got " +
                         shape_str(z.shape()));
    Tensor zx = slice(z, 1, 0, input_len);
    Tensor zy = slice(z, 1, input_len, z.dim(1) - input_len);
    return {zx, zy};
}

Tensor activate(const Tensor& x, Activation act) {
    switch (act) {
        case Activation::Relu: return relu(x);
        case Activation::Gelu: return gelu(x);
        case Activation::Linear: return x;
    }
    return x;
}

BasisNet::BasisNet(int num_bases, int input_len, int output_len, int hidden,
                   Activation act, Rng& rng)
    : num_bases_(num_bases), span_(input_len + output_len), act_(act),
      w1_(Tensor::uniform_leaf({1, hidden}, 1, rng)),
      b1_(Tensor::uniform_leaf({hidden}, 1, rng)),
      w2_(Tensor::uniform_leaf({hidden, hidden}, hidden, rng)),
      b2_(Tensor::uniform_leaf({hidden}, hidden, rng)),
      w3_(Tensor::uniform_leaf({hidden, hidden}, hidden, rng)),
      b3_(Tensor::uniform_leaf({hidden}, hidden, rng)),
      w4_(Tensor::uniform_leaf({hidden, num_bases * span_}, hidden, rng)),
      b4_(Tensor::uniform_leaf({num_bases * span_}, hidden, rng)) {}

Tensor BasisNet::generate(double tau) const {
    if (!std::isfinite(tau)) throw Error("generate: tau must be finite");
    Tensor in = Tensor::from_data({1, 1}, {tau});
    Tensor h1 = activate(affine(in, w1_, b1_), act_);
    Tensor h2 = add(activate(affine(h1, w2_, b2_), act_), h1); // skip connection
    Tensor h3 = activate(affine(h2, w3_, b3_), act_);
    Tensor out = affine(h3, w4_, b4_);
    return reshape(out, {num_bases_, span_});
}

ParamList BasisNet::parameters() {
    return {{"basis.l1.w", w1_}, {"basis.l1.b", b1_}, {"basis.l2.w", w2_},
            {"basis.l2.b", b2_}, {"basis.l3.w", w3_}, {"basis.l3.b", b3_},
            {"basis.l4.w", w4_}, {"basis.l4.b", b4_}};
}

SineGridBasis::SineGridBasis(int num_bases, int input_len, int output_len) {
    if (num_bases % 2 != 0)
        throw ConfigError("fixed-sine-grid needs an even number of bases, got " +
                          std::to_string(num_bases));
    const int span = input_len + output_len;
    const int freq_count = num_bases / 2;
    const double f_lo = 1.0 / static_cast<double>(input_len);
    const double f_hi = 0.5;
    std::vector<double> data(static_cast<size_t>(num_bases) * span);
    for (int i = 0; i < freq_count; ++i) {
        const double f = freq_count == 1
                             ? f_lo
                             : f_lo + (f_hi - f_lo) * i / static_cast<double>(freq_count - 1);
        for (int t = 0; t < span; ++t) {
            data[static_cast<size_t>(i) * span + t] = std::sin(kTwoPi * f * t);
            data[static_cast<size_t>(freq_count + i) * span + t] = std::cos(kTwoPi * f * t);
        }
    }
    basis_ = Tensor::from_data({num_bases, span}, std::move(data));
}

Tensor SineGridBasis::generate(double) const { return basis_; }

RandomSineBasis::RandomSineBasis(int num_bases, int input_len, int output_len,
                                 uint64_t seed) {
    const int span = input_len + output_len;
    Rng rng(seed);
    std::vector<double> data(static_cast<size_t>(num_bases) * span);
    for (int r = 0; r < num_bases; ++r) {
        const double f = rng.uniform(1.0 / span, 0.5);
        for (int t = 0; t < span; ++t)
            data[static_cast<size_t>(r) * span + t] =
                (r % 2 == 0) ? std::sin(kTwoPi * f * t) : std::cos(kTwoPi * f * t);
    }
    basis_ = Tensor::from_data({num_bases, span}, std::move(data));
}

Tensor RandomSineBasis::generate(double) const { return basis_; }

ZeroBasis::ZeroBasis(int num_bases, int input_len, int output_len)
    : basis_(Tensor::zeros({num_bases, input_len + output_len})) {}

Tensor ZeroBasis::generate(double) const { return basis_; }

std::unique_ptr<BasisSource> make_basis_source(const ModelConfig& cfg, Rng& rng) {
    switch (cfg.basis_kind) {
        case BasisKind::Learnable:
            return std::make_unique<BasisNet>(cfg.num_bases, cfg.input_len,
                                              cfg.output_len, cfg.basis_hidden,
                                              cfg.activation, rng);
        case BasisKind::FixedSineGrid:
            return std::make_unique<SineGridBasis>(cfg.num_bases, cfg.input_len,
                                                   cfg.output_len);
        case BasisKind::RandomSine:
            return std::make_unique<RandomSineBasis>(cfg.num_bases, cfg.input_len,
                                                     cfg.output_len,
                                                     rng.fork(101).next_u64());
        case BasisKind::None:
            return std::make_unique<ZeroBasis>(cfg.num_bases, cfg.input_len,
                                               cfg.output_len);
    }
    throw ConfigError("unhandled basis kind");
}

void write_basis_csv(const Tensor& z, int input_len, std::ostream& os) {
    const int rows = z.dim(0), cols = z.dim(1);
    std::string line;
    for (int t = 0; t < cols; ++t) {
        line += "t" + std::to_string(t);
        line += ',';
    }
    line += "io_boundary\n";
    os << line;
    for (int i = 0; i < rows; ++i) {
        line.clear();
        for (int t = 0; t < cols; ++t) {
            append_double(line, z.at(i, t));
            line += ',';
        }
        line += std::to_string(input_len);
        line += '\n';
        os << line;
    }
}

} // namespace basecast
