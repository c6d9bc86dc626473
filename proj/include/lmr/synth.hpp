#pragma once

#include "lmr/body_model.hpp"
#include "lmr/part_scheme.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace lmr {

// Ground-truth motion recipe for one sequence: per-part activity windows with
// sinusoidal joint angles inside them, frozen values outside. Realizes the
// regime-switching structure this project is built to study (one part moving
// vigorously while another holds still, roles swapping mid-sequence).
struct MotionConfig {
    std::uint64_t seed = 0;
    int frames = 16;
    double fps = 30.0;
    // Active frame ranges [begin, end) per part, scheme order.
    std::array<std::vector<std::pair<int, int>>, kNumParts> active{};
    std::array<std::pair<double, double>, kNumParts> amplitude{}; // radians, < pi/2
    std::array<std::pair<double, double>, kNumParts> frequency{}; // Hz
    double shape_scale = 1.0; // beta ~ U(-scale, scale)
    enum class Camera { fixed, drift } camera = Camera::fixed;

    MotionConfig();
    void validate() const;
};

struct FeatureSpec {
    std::size_t dim = 64;
    std::uint64_t seed = 42;
    double noise_sigma = 0.05;
};

struct SequenceBatch {
    std::uint64_t seed = 0;
    std::size_t frames = 0;
    std::size_t feature_dim = 0;
    double fps = 30.0;
    std::vector<double> features;    // T*F
    std::vector<ThetaSet> gt_theta;  // T
    std::vector<double> gt_joints3d; // T*24*3, meters
    std::vector<double> gt_joints2d; // T*24*2
    std::optional<std::vector<double>> gt_vertices; // T*N*3, regenerable

    std::vector<Tensor> feature_tensors() const;
};

std::vector<ThetaSet> gen_motion(const PartScheme& scheme, const MotionConfig& cfg);

// Fills gt_joints3d/gt_joints2d (and vertices on request) from gt_theta; the
// 2D points are exactly the projection of the 3D points under the
// ground-truth camera.
void derive_ground_truth(const BodyModel& model, SequenceBatch& batch, bool with_vertices);

// Phi_t = A theta_t + b + noise with (A, b) fixed by spec.seed and noise
// seeded per sequence.
void gen_features(SequenceBatch& batch, const FeatureSpec& spec);

// Distribution over MotionConfigs. With independent_parts each part draws its
// own on/off schedule, so at any moment some parts move vigorously while
// others hold still and the roles keep swapping; otherwise two fixed groups
// (arms+head vs legs+root) alternate.
struct MotionFamily {
    int frames = 16;
    double fps = 30.0;
    double amp_min = 0.25, amp_max = 0.7;
    double freq_min = 1.0, freq_max = 4.0;
    double root_amp_scale = 0.4; // root/head move less than the limbs
    int segments = 2;
    bool independent_parts = true;
    double shape_scale = 1.0;
    bool camera_drift = false;

    void validate() const;
};

MotionConfig sample_motion_config(const MotionFamily& family, std::uint64_t seq_seed);

SequenceBatch make_sequence(const BodyModel& model, const PartScheme& scheme,
                            const MotionConfig& motion, const FeatureSpec& features,
                            bool with_vertices = false);

struct DatasetConfig {
    int train_count = 200;
    int val_count = 40;
    std::uint64_t train_seed_start = 1000;
    std::uint64_t val_seed_start = 100000;
    MotionFamily family;
    FeatureSpec features;

    void validate() const; // split seed ranges must not overlap
};

struct Dataset {
    std::vector<SequenceBatch> train;
    std::vector<SequenceBatch> val;
};

Dataset make_dataset(const BodyModel& model, const PartScheme& scheme,
                     const DatasetConfig& cfg);

inline constexpr const char* kDataMagic = "lmr-data-v1";

// Directory layout: manifest.json + model.txt + one file per sequence.
void save_dataset(const std::filesystem::path& dir, const BodyModel& model,
                  const Dataset& dataset, const std::string& config_echo_json,
                  bool force = false);

struct LoadedDataset {
    BodyModel model;
    Dataset data;
    std::size_t feature_dim = 0;
    std::size_t frames = 0;
    double fps = 30.0;
    std::string config_echo_json;
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

} // namespace lmr
