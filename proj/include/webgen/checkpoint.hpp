#pragma once

#include <map>
#include <string>

#include "webgen/argen.hpp"
#include "webgen/dataset.hpp"
#include "webgen/diffusion.hpp"
#include "webgen/nn/tensor.hpp"

namespace webgen {

enum class ModelKind { SparseDiffusion, FullDiffusion, Argen };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Self-describing snapshot of a trained model: hyperparameters as JSON text,
// the normalization fitted on its training data, and named parameter blobs
// stored as little-endian float32.
struct ModelCheckpoint {
    ModelKind kind = ModelKind::SparseDiffusion;
    std::string hyper_json;
    NormalizationParams scaling;
    std::map<std::string, nn::Tensor> blobs;
    long step_count = 0;
};

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

ModelCheckpoint checkpoint_of(const DiffusionModel& model, const NormalizationParams& scaling,
                              const std::string& config_hash);
ModelCheckpoint checkpoint_of(const ArgenModel& model, const NormalizationParams& scaling,
                              const std::string& config_hash);

// Reconstructs a model from its checkpoint; throws on kind mismatch.
DiffusionModel diffusion_from_checkpoint(const ModelCheckpoint& ckpt);
ArgenModel argen_from_checkpoint(const ModelCheckpoint& ckpt);

}  // namespace webgen
