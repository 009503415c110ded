#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "acvae/data.hpp"
#include "acvae/model.hpp"

namespace acvae {

// Preprocessing statistics captured at training time so a checkpoint can
// score new rows without refitting anything.
struct PreprocessParams {
    RobustScalerParams scaler;
    BinEdges age_bins;
    BinEdges icv_bins;
    double hc_train_fraction = 0.8;
    std::uint64_t split_seed = 0;
};

struct Checkpoint {
    ModelConfig config;
    std::optional<Model> model;  // parameters
    PreprocessParams preprocess;
};

// Versioned JSON document: config, named parameter tensors, preprocessing
// statistics. Doubles are stored so that a load reproduces forward outputs
// bit-exactly.
void save_checkpoint(Model& model, const PreprocessParams& preprocess, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace acvae
