#ifndef BASECAST_CHECKPOINT_HPP
#define BASECAST_CHECKPOINT_HPP

#include <memory>
#include <string>

#include "basecast/data.hpp"
#include "basecast/model.hpp"

namespace basecast {

/**
 * Versioned binary checkpoint: magic, format version, the full ModelConfig
 * as JSON, then named parameter blocks (including the train normalizer
 * statistics) with raw little-endian doubles. Loading reproduces every
 * value bit for bit.
 */
void save_checkpoint(Model& model, const Normalizer& norm, const std::string& path);

struct LoadedCheckpoint {
    ModelConfig config;
    Normalizer norm;
    std::unique_ptr<Model> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Throws ConfigError naming the first differing key when the stored config
/// does not match the expected one.
void require_matching_config(const ModelConfig& stored, const ModelConfig& expected);

} // namespace basecast

#endif // BASECAST_CHECKPOINT_HPP
