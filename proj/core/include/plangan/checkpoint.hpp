#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plangan/nn.hpp"

namespace plangan {

// Checkpoints are directories: a JSON manifest plus one parameter blob per
// model. Blob files are written to a temp name and renamed, manifest last.

std::string fnv1a64_hex(const std::string& bytes);
std::string fnv1a64_file(const std::string& path);

void save_params_blob(const ParamStore& ps, const std::string& path);
// loads by name; every stored tensor must exist with the same shape
void load_params_blob(ParamStore& ps, const std::string& path);
// raw name->tensor pairs in stored order
std::vector<std::pair<std::string, Tensor>> read_params_raw(const std::string& path);

struct CheckpointInfo {
    long step = 0;
    std::string component;    // "gan" or "gte_encoder"
    std::string config_json;  // echo of the resolved configuration
    std::vector<std::string> blobs;
};

void save_checkpoint(const std::string& dir, long step, const std::string& component,
                     const std::string& config_json,
                     const std::vector<std::pair<std::string, const ParamStore*>>& models);

CheckpointInfo read_checkpoint_info(const std::string& dir);

// digest-checked blob load into an existing model
void load_checkpoint_model(const std::string& dir, const std::string& blob_name, ParamStore& ps);

}  // namespace plangan
