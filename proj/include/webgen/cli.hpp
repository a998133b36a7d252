#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "webgen/checkpoint.hpp"
#include "webgen/dataset.hpp"
#include "webgen/eval.hpp"

namespace webgen {

inline constexpr const char* kToolVersion = "0.1.0";

// Stable 64-bit FNV-1a, hex-encoded; used as the config hash embedded in
// artifacts and manifests.
std::string fnv1a_hex(const std::string& data);

// CLI entry point (subcommands: ingest synth dataset stats train sample eval
// assemble mesh). Returns a process exit status.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args without argv[0]

// ---------------------------------------------------------------------------
// Training driver, shared by the `train` subcommand and the acceptance suite.
// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string model = "argen";  // sparse-diffusion | full-diffusion | argen
    std::string preset = "desk";  // desk | paper
    int steps = 2000;
    int batch = 16;
    double lr = 2e-4;
    uint64_t seed = 1;
    bool constant_graph = false;  // replicate the first sample across the set
    int limit = 0;                // keep only the first N samples when > 0
    int log_every = 200;          // 0 silences progress lines
};

struct TrainResult {
    double initial_loss = 0.0;  // evaluation pass before any update
    double final_loss = 0.0;    // same evaluation pass after training
    ModelCheckpoint checkpoint;
};

TrainResult train_model(const Dataset& data, const TrainOptions& opt,
                        const std::string& config_hash);

// Decoded graph from a checkpointed model for one normalized conditioning
// vector. Diffusion sampling consumes the seed; the transformer is greedy.
Graph generate_from_checkpoint(const ModelCheckpoint& ckpt, const std::array<double, 7>& cond_norm,
                               uint64_t seed);

EvalReport evaluate_checkpoint(const ModelCheckpoint& ckpt,
                               const std::vector<std::array<double, 7>>& targets_norm,
                               uint64_t seed);

}  // namespace webgen
