#include "webgen/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace webgen {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian");

namespace {

constexpr char kMagic[8] = {'W', 'G', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_f64(std::ofstream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_string(std::ofstream& out, const std::string& s) {
    write_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double read_f64(std::ifstream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::string read_string(std::ifstream& in) {
    uint32_t len = read_u32(in);
    if (!in || len > (1u << 26)) throw Error("checkpoint: corrupt string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::SparseDiffusion: return "sparse-diffusion";
        case ModelKind::FullDiffusion: return "full-diffusion";
        case ModelKind::Argen: return "argen";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "sparse-diffusion") return ModelKind::SparseDiffusion;
    if (s == "full-diffusion") return ModelKind::FullDiffusion;
    if (s == "argen") return ModelKind::Argen;
    throw Error("unknown model kind: " + s);
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_checkpoint: cannot open " + path);
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_string(out, to_string(ckpt.kind));
    write_string(out, ckpt.hyper_json);
    write_u32(out, static_cast<uint32_t>(ckpt.step_count));
    write_f64(out, ckpt.scaling.coord_scale);
    for (const auto& [lo, hi] : ckpt.scaling.feature_range) {
        write_f64(out, lo);
        write_f64(out, hi);
    }
    write_u32(out, static_cast<uint32_t>(ckpt.blobs.size()));
    for (const auto& [name, tensor] : ckpt.blobs) {
        write_string(out, name);
        write_u32(out, static_cast<uint32_t>(tensor.shape.size()));
        for (int d : tensor.shape) write_u32(out, static_cast<uint32_t>(d));
        for (double v : tensor.v) {
            float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    if (!out) throw Error("save_checkpoint: write failed for " + path);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw Error("load_checkpoint: bad magic in " + path);
    }
    uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw Error("load_checkpoint: unsupported version " + std::to_string(version));
    }
    ModelCheckpoint ckpt;
    ckpt.kind = model_kind_from_string(read_string(in));
    ckpt.hyper_json = read_string(in);
    ckpt.step_count = read_u32(in);
    ckpt.scaling.coord_scale = read_f64(in);
    for (auto& [lo, hi] : ckpt.scaling.feature_range) {
        lo = read_f64(in);
        hi = read_f64(in);
    }
    uint32_t blob_count = read_u32(in);
    if (!in) throw Error("load_checkpoint: truncated file " + path);
    for (uint32_t b = 0; b < blob_count; ++b) {
        std::string name = read_string(in);
        uint32_t ndim = read_u32(in);
        if (!in || ndim > 8) throw Error("load_checkpoint: corrupt blob header in " + path);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_u32(in));
        nn::Tensor t(shape);
        for (double& v : t.v) {
            float f = 0;
            in.read(reinterpret_cast<char*>(&f), 4);
            v = static_cast<double>(f);
        }
        if (!in) throw Error("load_checkpoint: truncated blob data in " + path);
        ckpt.blobs.emplace(std::move(name), std::move(t));
    }
    return ckpt;
}

namespace {

ModelCheckpoint base_checkpoint(const nn::ParameterStore& store, const NormalizationParams& scaling) {
    ModelCheckpoint ckpt;
    ckpt.scaling = scaling;
    ckpt.step_count = store.step_count();
    for (const auto& [name, p] : store.entries()) ckpt.blobs.emplace(name, p.value);
    return ckpt;
}

nn::ParameterStore store_from_blobs(const std::map<std::string, nn::Tensor>& blobs, long step) {
    nn::ParameterStore store;
    for (const auto& [name, t] : blobs) {
        nn::Param& p = store.create_or_bind(name, t.shape);
        p.value = t;
    }
    store.set_step_count(step);
    return store;
}

}  // namespace

ModelCheckpoint checkpoint_of(const DiffusionModel& model, const NormalizationParams& scaling,
                              const std::string& config_hash) {
    ModelCheckpoint ckpt = base_checkpoint(model.store(), scaling);
    ckpt.kind = model.kind() == DiffusionKind::Sparse ? ModelKind::SparseDiffusion
                                                      : ModelKind::FullDiffusion;
    const UNetConfig& cfg = model.config();
    const NoiseSchedule& sched = model.schedule();
    json hyper{{"kind", to_string(ckpt.kind)},
               {"in_width", cfg.in_width},
               {"length", cfg.length},
               {"channels", cfg.channels},
               {"resnet_blocks", cfg.resnet_blocks},
               {"heads", cfg.heads},
               {"d_cond", cfg.d_cond},
               {"schedule",
                {{"steps", sched.steps()},
                 {"sigma_min", sched.sigmas.front()},
                 {"sigma_max", sched.sigmas.back()}}},
               {"config_hash", config_hash}};
    ckpt.hyper_json = hyper.dump();
    return ckpt;
}

ModelCheckpoint checkpoint_of(const ArgenModel& model, const NormalizationParams& scaling,
                              const std::string& config_hash) {
    ModelCheckpoint ckpt = base_checkpoint(model.store(), scaling);
    ckpt.kind = ModelKind::Argen;
    const ArgenConfig& cfg = model.config();
    json hyper{{"kind", "argen"},
               {"d_model", cfg.d_model},
               {"depth", cfg.depth},
               {"heads", cfg.heads},
               {"head_dim", cfg.head_dim},
               {"ff_mult", cfg.ff_mult},
               {"d_cond", cfg.d_cond},
               {"row_width", cfg.row_width},
               {"max_rows", cfg.max_rows},
               {"config_hash", config_hash}};
    ckpt.hyper_json = hyper.dump();
    return ckpt;
}

DiffusionModel diffusion_from_checkpoint(const ModelCheckpoint& ckpt) {
    if (ckpt.kind != ModelKind::SparseDiffusion && ckpt.kind != ModelKind::FullDiffusion) {
        throw Error("checkpoint kind mismatch: have " + to_string(ckpt.kind) +
                    ", want a diffusion model");
    }
    json hyper = json::parse(ckpt.hyper_json);
    UNetConfig cfg;
    cfg.in_width = hyper.at("in_width").get<int>();
    cfg.length = hyper.at("length").get<int>();
    cfg.channels = hyper.at("channels").get<int>();
    cfg.resnet_blocks = hyper.at("resnet_blocks").get<int>();
    cfg.heads = hyper.at("heads").get<int>();
    cfg.d_cond = hyper.at("d_cond").get<int>();
    NoiseSchedule sched = NoiseSchedule::geometric(hyper.at("schedule").at("steps").get<int>(),
                                                   hyper.at("schedule").at("sigma_min").get<double>(),
                                                   hyper.at("schedule").at("sigma_max").get<double>());
    DiffusionKind kind = ckpt.kind == ModelKind::SparseDiffusion ? DiffusionKind::Sparse
                                                                 : DiffusionKind::Full;
    return DiffusionModel(kind, cfg, sched, store_from_blobs(ckpt.blobs, ckpt.step_count));
}

ArgenModel argen_from_checkpoint(const ModelCheckpoint& ckpt) {
    if (ckpt.kind != ModelKind::Argen) {
        throw Error("checkpoint kind mismatch: have " + to_string(ckpt.kind) + ", want argen");
    }
    json hyper = json::parse(ckpt.hyper_json);
    ArgenConfig cfg;
    cfg.d_model = hyper.at("d_model").get<int>();
    cfg.depth = hyper.at("depth").get<int>();
    cfg.heads = hyper.at("heads").get<int>();
    cfg.head_dim = hyper.at("head_dim").get<int>();
    cfg.ff_mult = hyper.at("ff_mult").get<double>();
    cfg.d_cond = hyper.at("d_cond").get<int>();
    cfg.row_width = hyper.at("row_width").get<int>();
    cfg.max_rows = hyper.at("max_rows").get<int>();
    return ArgenModel(cfg, store_from_blobs(ckpt.blobs, ckpt.step_count));
}

}  // namespace webgen
