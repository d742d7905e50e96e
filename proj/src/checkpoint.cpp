#include "basecast/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace basecast {

namespace {

constexpr char kMagic[4] = {'B', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw CheckpointError("checkpoint truncated");
    return v;
}

uint64_t read_u64(std::istream& is) {
    uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8))
        throw CheckpointError("checkpoint truncated");
    return v;
}

void write_block(std::ostream& os, const std::string& name, const Shape& shape,
                 const std::vector<double>& data) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_u32(os, static_cast<uint32_t>(d));
    write_u64(os, data.size());
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
}

struct Block {
    Shape shape;
    std::vector<double> data;
};

Block read_block_body(std::istream& is) {
    Block b;
    const uint32_t ndim = read_u32(is);
    if (ndim > 8) throw CheckpointError("checkpoint block has implausible rank");
    for (uint32_t i = 0; i < ndim; ++i) b.shape.push_back(static_cast<int>(read_u32(is)));
    const uint64_t count = read_u64(is);
    b.data.resize(count);
    if (!is.read(reinterpret_cast<char*>(b.data.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
        throw CheckpointError("checkpoint truncated inside a parameter block");
    return b;
}

} // namespace

void save_checkpoint(Model& model, const Normalizer& norm, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot write '" + path + "'");
    os.write(kMagic, 4);
    write_u32(os, kVersion);

    const std::string config_json = model.config().to_json();
    write_u64(os, config_json.size());
    os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));

    const auto& params = model.parameters();
    write_u32(os, static_cast<uint32_t>(params.size() + 2));
    for (const auto& p : params)
        write_block(os, p.name, p.tensor.shape(), p.tensor.values());
    write_block(os, "__normalizer.mean", {norm.channels()}, norm.mean());
    write_block(os, "__normalizer.std", {norm.channels()}, norm.stddev());
    if (!os) throw CheckpointError("write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open '" + path + "'");

    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
    const uint32_t version = read_u32(is);
    if (version != kVersion)
        throw CheckpointError("checkpoint format version " + std::to_string(version) +
                              " is not supported (expected " + std::to_string(kVersion) +
                              ")");

    const uint64_t json_len = read_u64(is);
    std::string config_json(json_len, '\0');
    if (!is.read(config_json.data(), static_cast<std::streamsize>(json_len)))
        throw CheckpointError("checkpoint truncated in the config section");

    LoadedCheckpoint out;
    out.config = ModelConfig::from_json(config_json);

    const uint32_t n_blocks = read_u32(is);
    std::map<std::string, Block> blocks;
    for (uint32_t i = 0; i < n_blocks; ++i) {
        const uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw CheckpointError("checkpoint truncated in a block name");
        blocks.emplace(std::move(name), read_block_body(is));
    }

    auto mean_it = blocks.find("__normalizer.mean");
    auto std_it = blocks.find("__normalizer.std");
    if (mean_it == blocks.end() || std_it == blocks.end())
        throw CheckpointError("checkpoint is missing the normalizer statistics");
    out.norm = Normalizer::from_stats(mean_it->second.data, std_it->second.data);

    out.model = std::make_unique<Model>(out.config);
    for (auto& p : out.model->parameters()) {
        auto it = blocks.find(p.name);
        if (it == blocks.end())
            throw CheckpointError("checkpoint is missing parameter '" + p.name + "'");
        if (it->second.shape != p.tensor.shape())
            throw CheckpointError("parameter '" + p.name + "' has shape " +
                                  shape_str(it->second.shape) + " but the model expects " +
                                  shape_str(p.tensor.shape()));
        p.tensor.mutable_values() = it->second.data;
    }
    return out;
}

void require_matching_config(const ModelConfig& stored, const ModelConfig& expected) {
    if (stored == expected) return;
    throw ConfigError("checkpoint config differs at key '" +
                      ModelConfig::first_difference(stored, expected) + "'");
}

} // namespace basecast
