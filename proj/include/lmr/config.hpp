#pragma once

#include "lmr/estimator.hpp"
#include "lmr/objectives.hpp"
#include "lmr/synth.hpp"

#include <filesystem>
#include <string>

namespace lmr {

// The single experiment file driving every command. Unknown keys are
// rejected; every run embeds the fully resolved form in its outputs.
struct ExperimentConfig {
    struct Model {
        Variant variant = Variant::lmr;
        std::size_t hidden = 128;
        std::size_t shape_hidden = 64;
        int refine_iters = 3;
        std::uint64_t body_seed = 7;
        std::size_t body_vertices = 400;
        PartScheme scheme = PartScheme::default_scheme();
    } model;

    struct Data {
        int train_count = 200;
        int val_count = 40;
        std::uint64_t train_seed_start = 1000;
        std::uint64_t val_seed_start = 100000;
        int frames = 16;
        double fps = 30.0;
        int segments = 2;
        bool independent_parts = true;
        double amp_min = 0.25, amp_max = 0.7;
        double freq_min = 1.0, freq_max = 4.0;
        double root_amp_scale = 0.4;
        double shape_scale = 1.0;
        bool camera_drift = false;
        std::size_t feature_dim = 64;
        std::uint64_t feature_seed = 42;
        double noise_sigma = 0.05;
    } data;

    struct Training {
        int epochs = 12;
        int batch_size = 8;
        double learning_rate = 1e-3;
        std::uint64_t init_seed = 1;
        double clip_norm = 5.0;
        bool supervise_all_iters = false;
    } training;

    struct Metrics {
        double fps = 30.0;
        LossWeights weights;
    } metrics;

    struct Paths {
        std::string data_dir;
        std::string out_dir;
        std::string checkpoint;
        std::string report;
    } paths;

    void validate() const;

    EstimatorConfig estimator_config() const;
    DatasetConfig dataset_config() const;

    std::string to_json() const; // fully resolved, stable key order
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig from_file(const std::filesystem::path& path);
};

} // namespace lmr
