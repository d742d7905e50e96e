#ifndef BASECAST_ERROR_HPP
#define BASECAST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace basecast {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor extents do not line up (matmul inner dims, elementwise shapes, ...).
struct ShapeError : Error {
    using Error::Error;
};

// Invalid model or run configuration (H does not divide O, bad ratios, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Problems with input data files (unparseable cells, ragged rows, ...).
struct DataError : Error {
    using Error::Error;
};

// Checkpoint file cannot be read back (bad magic, version, truncation).
struct CheckpointError : Error {
    using Error::Error;
};

// Non-finite value where the training loop requires finite ones.
struct NumericError : Error {
    using Error::Error;
};

} // namespace basecast

#endif // BASECAST_ERROR_HPP
