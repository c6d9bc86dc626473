#include "lmr/config.hpp"

#include "lmr/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace lmr {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError("config: section '" + section + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key))
            throw ConfigError("config: unknown key '" + section + "." + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

PartScheme scheme_from_json(const json& arr) {
    PartScheme s;
    if (!arr.is_array()) throw ConfigError("config: model.parts must be an array");
    for (const auto& p : arr) {
        check_keys(p, "model.parts[]", {"name", "joints"});
        Part part;
        read(p, "name", part.name);
        read(p, "joints", part.joints);
        s.parts.push_back(std::move(part));
    }
    s.validate();
    return s;
}

json scheme_to_json(const PartScheme& s) {
    json arr = json::array();
    for (const auto& p : s.parts) arr.push_back({{"name", p.name}, {"joints", p.joints}});
    return arr;
}

} // namespace

void ExperimentConfig::validate() const {
    model.scheme.validate();
    if (model.hidden < 1 || model.shape_hidden < 1)
        throw ConfigError("config: model.hidden and model.shape_hidden must be >= 1");
    if (model.refine_iters < 1) throw ConfigError("config: model.refine_iters must be >= 1");
    if (model.body_vertices < kNumJoints)
        throw ConfigError("config: model.body_vertices must be >= 24");
    if (data.feature_dim < 1) throw ConfigError("config: data.feature_dim must be >= 1");
    if (data.noise_sigma < 0.0) throw ConfigError("config: data.noise_sigma must be >= 0");
    dataset_config().validate();
    if (training.epochs < 0) throw ConfigError("config: training.epochs must be >= 0");
    if (training.batch_size < 1) throw ConfigError("config: training.batch_size must be >= 1");
    if (training.learning_rate <= 0.0)
        throw ConfigError("config: training.learning_rate must be positive");
    if (training.clip_norm <= 0.0) throw ConfigError("config: training.clip_norm must be positive");
    if (metrics.fps <= 0.0) throw ConfigError("config: metrics.fps must be positive");
    metrics.weights.validate();
}

EstimatorConfig ExperimentConfig::estimator_config() const {
    EstimatorConfig cfg;
    cfg.variant = model.variant;
    cfg.feature_dim = data.feature_dim;
    cfg.hidden_dim = model.hidden;
    cfg.shape_hidden_dim = model.shape_hidden;
    cfg.refine_iters = model.refine_iters;
    return cfg;
}

DatasetConfig ExperimentConfig::dataset_config() const {
    DatasetConfig cfg;
    cfg.train_count = data.train_count;
    cfg.val_count = data.val_count;
    cfg.train_seed_start = data.train_seed_start;
    cfg.val_seed_start = data.val_seed_start;
    cfg.family.frames = data.frames;
    cfg.family.fps = data.fps;
    cfg.family.segments = data.segments;
    cfg.family.independent_parts = data.independent_parts;
    cfg.family.amp_min = data.amp_min;
    cfg.family.amp_max = data.amp_max;
    cfg.family.freq_min = data.freq_min;
    cfg.family.freq_max = data.freq_max;
    cfg.family.root_amp_scale = data.root_amp_scale;
    cfg.family.shape_scale = data.shape_scale;
    cfg.family.camera_drift = data.camera_drift;
    cfg.features.dim = data.feature_dim;
    cfg.features.seed = data.feature_seed;
    cfg.features.noise_sigma = data.noise_sigma;
    return cfg;
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["model"] = {{"variant", to_string(model.variant)},
                  {"hidden", model.hidden},
                  {"shape_hidden", model.shape_hidden},
                  {"refine_iters", model.refine_iters},
                  {"body_seed", model.body_seed},
                  {"body_vertices", model.body_vertices},
                  {"parts", scheme_to_json(model.scheme)}};
    j["data"] = {{"train_count", data.train_count},
                 {"val_count", data.val_count},
                 {"train_seed_start", data.train_seed_start},
                 {"val_seed_start", data.val_seed_start},
                 {"frames", data.frames},
                 {"fps", data.fps},
                 {"segments", data.segments},
                 {"independent_parts", data.independent_parts},
                 {"amp_min", data.amp_min},
                 {"amp_max", data.amp_max},
                 {"freq_min", data.freq_min},
                 {"freq_max", data.freq_max},
                 {"root_amp_scale", data.root_amp_scale},
                 {"shape_scale", data.shape_scale},
                 {"camera_drift", data.camera_drift},
                 {"feature_dim", data.feature_dim},
                 {"feature_seed", data.feature_seed},
                 {"noise_sigma", data.noise_sigma}};
    j["training"] = {{"epochs", training.epochs},
                     {"batch_size", training.batch_size},
                     {"learning_rate", training.learning_rate},
                     {"init_seed", training.init_seed},
                     {"clip_norm", training.clip_norm},
                     {"supervise_all_iters", training.supervise_all_iters}};
    j["metrics"] = {{"fps", metrics.fps},
                    {"w_smpl", metrics.weights.w_smpl},
                    {"w_3d", metrics.weights.w_3d},
                    {"w_2d", metrics.weights.w_2d}};
    j["paths"] = {{"data_dir", paths.data_dir},
                  {"out_dir", paths.out_dir},
                  {"checkpoint", paths.checkpoint},
                  {"report", paths.report}};
    return j.dump();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON (") + e.what() + ")");
    }
    check_keys(j, "", {"model", "data", "training", "metrics", "paths"});

    ExperimentConfig cfg;
    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, "model",
                   {"variant", "hidden", "shape_hidden", "refine_iters", "body_seed",
                    "body_vertices", "parts"});
        std::string variant = to_string(cfg.model.variant);
        read(m, "variant", variant);
        cfg.model.variant = variant_from_string(variant);
        read(m, "hidden", cfg.model.hidden);
        read(m, "shape_hidden", cfg.model.shape_hidden);
        read(m, "refine_iters", cfg.model.refine_iters);
        read(m, "body_seed", cfg.model.body_seed);
        read(m, "body_vertices", cfg.model.body_vertices);
        if (m.contains("parts")) cfg.model.scheme = scheme_from_json(m["parts"]);
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, "data",
                   {"train_count", "val_count", "train_seed_start", "val_seed_start", "frames",
                    "fps", "segments", "independent_parts", "amp_min", "amp_max", "freq_min",
                    "freq_max", "root_amp_scale", "shape_scale", "camera_drift", "feature_dim",
                    "feature_seed", "noise_sigma"});
        read(d, "train_count", cfg.data.train_count);
        read(d, "val_count", cfg.data.val_count);
        read(d, "train_seed_start", cfg.data.train_seed_start);
        read(d, "val_seed_start", cfg.data.val_seed_start);
        read(d, "frames", cfg.data.frames);
        read(d, "fps", cfg.data.fps);
        read(d, "segments", cfg.data.segments);
        read(d, "independent_parts", cfg.data.independent_parts);
        read(d, "amp_min", cfg.data.amp_min);
        read(d, "amp_max", cfg.data.amp_max);
        read(d, "freq_min", cfg.data.freq_min);
        read(d, "freq_max", cfg.data.freq_max);
        read(d, "root_amp_scale", cfg.data.root_amp_scale);
        read(d, "shape_scale", cfg.data.shape_scale);
        read(d, "camera_drift", cfg.data.camera_drift);
        read(d, "feature_dim", cfg.data.feature_dim);
        read(d, "feature_seed", cfg.data.feature_seed);
        read(d, "noise_sigma", cfg.data.noise_sigma);
        // metrics.fps tracks the data rate unless overridden below
        cfg.metrics.fps = cfg.data.fps;
    }
    if (j.contains("training")) {
        const json& t = j["training"];
        check_keys(t, "training",
                   {"epochs", "batch_size", "learning_rate", "init_seed", "clip_norm",
                    "supervise_all_iters"});
        read(t, "epochs", cfg.training.epochs);
        read(t, "batch_size", cfg.training.batch_size);
        read(t, "learning_rate", cfg.training.learning_rate);
        read(t, "init_seed", cfg.training.init_seed);
        read(t, "clip_norm", cfg.training.clip_norm);
        read(t, "supervise_all_iters", cfg.training.supervise_all_iters);
    }
    if (j.contains("metrics")) {
        const json& m = j["metrics"];
        check_keys(m, "metrics", {"fps", "w_smpl", "w_3d", "w_2d"});
        read(m, "fps", cfg.metrics.fps);
        read(m, "w_smpl", cfg.metrics.weights.w_smpl);
        read(m, "w_3d", cfg.metrics.weights.w_3d);
        read(m, "w_2d", cfg.metrics.weights.w_2d);
    }
    if (j.contains("paths")) {
        const json& p = j["paths"];
        check_keys(p, "paths", {"data_dir", "out_dir", "checkpoint", "report"});
        read(p, "data_dir", cfg.paths.data_dir);
        read(p, "out_dir", cfg.paths.out_dir);
        read(p, "checkpoint", cfg.paths.checkpoint);
        read(p, "report", cfg.paths.report);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace lmr
