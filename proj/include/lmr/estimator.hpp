#pragma once

#include "lmr/blocks.hpp"
#include "lmr/body_model.hpp"
#include "lmr/part_scheme.hpp"

#include <span>
#include <string>
#include <vector>

namespace lmr {

enum class Variant { lmr, single_rnn, lmr_no_root };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct EstimatorConfig {
    Variant variant = Variant::lmr;
    std::size_t feature_dim = 64;
    std::size_t hidden_dim = 128;
    std::size_t shape_hidden_dim = 64;
    int refine_iters = 3; // number of residual refinement passes
};

// One frame's predicted parameters, still attached to the tape.
struct ThetaTensors {
    Tensor pose;  // (72)
    Tensor shape; // (10)
    Tensor cam;   // (3) = [s, tx, ty]

    Tensor flat() const; // (85)
    ThetaSet to_theta_set() const;
};

// Predictions for every frame at every refinement iteration; the last
// iteration is the model output.
struct FramePrediction {
    std::vector<std::vector<ThetaTensors>> iters; // [iteration][frame]
    // Residual head outputs per iteration and pose stage (root first), kept
    // so the additive-update structure can be checked from outside.
    std::vector<std::vector<std::vector<Tensor>>> pose_deltas; // [iteration][stage][frame]

    std::size_t frame_count() const { return iters.empty() ? 0 : iters[0].size(); }
    std::size_t iter_count() const { return iters.size(); }
    const std::vector<ThetaTensors>& final_frames() const { return iters.back(); }
};

// Six conditional part recurrences + shape module + camera recurrence,
// applied iteratively with residual updates. The two ablation variants share
// the shape and camera stages: single_rnn collapses the six part recurrences
// into one 72-wide one, lmr_no_root cuts the root conditioning of parts 2-6.
class LmrEstimator {
public:
    // Registers freshly initialized parameters in `store`.
    static LmrEstimator create(ParamStore& store, const EstimatorConfig& cfg,
                               const PartScheme& scheme, std::uint64_t init_seed);
    // Binds to parameters already present in `store` (checkpoint restore).
    static LmrEstimator attach(const ParamStore& store, const EstimatorConfig& cfg,
                               const PartScheme& scheme);

    FramePrediction forward(std::span<const Tensor> features) const;

    std::size_t pose_rnn_count() const { return pose_cells_.size(); }
    std::size_t pose_stage_input_dim(std::size_t stage) const;
    const EstimatorConfig& config() const { return cfg_; }
    const PartScheme& scheme() const { return scheme_; }

    // Initialization constants (not trainable).
    std::vector<double> theta_mean = std::vector<double>(kPoseDim, 0.0);
    std::vector<double> beta_mean = std::vector<double>(kShapeDim, 0.0);
    std::vector<double> cam_init{1.0, 0.0, 0.0};

private:
    LmrEstimator(EstimatorConfig cfg, PartScheme scheme);
    template <typename MakeCell, typename MakeHead, typename MakeAffine>
    void build_impl(MakeCell&& make_cell, MakeHead&& make_head, MakeAffine&& make_affine);

    EstimatorConfig cfg_;
    PartScheme scheme_;
    std::vector<GruCell> pose_cells_; // 6 for lmr/lmr_no_root, 1 for single_rnn
    std::vector<AffineLayer> pose_heads_;
    AffineLayer shape_fc1_, shape_fc2_;
    GruCell camera_cell_;
    AffineLayer camera_head_;
};

} // namespace lmr
