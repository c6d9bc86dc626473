#include "lmr/estimator.hpp"

#include "lmr/errors.hpp"

namespace lmr {

std::string to_string(Variant v) {
    switch (v) {
    case Variant::lmr: return "lmr";
    case Variant::single_rnn: return "single_rnn";
    case Variant::lmr_no_root: return "lmr_no_root";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "lmr") return Variant::lmr;
    if (s == "single_rnn") return Variant::single_rnn;
    if (s == "lmr_no_root") return Variant::lmr_no_root;
    throw ConfigError("unknown variant '" + s + "' (expected lmr, single_rnn, lmr_no_root)");
}

Tensor ThetaTensors::flat() const { return concat({pose, shape, cam}); }

ThetaSet ThetaTensors::to_theta_set() const {
    ThetaSet t;
    t.pose = pose.values();
    t.shape = shape.values();
    t.cam_scale = cam.at(0);
    t.cam_trans = {cam.at(1), cam.at(2)};
    return t;
}

LmrEstimator::LmrEstimator(EstimatorConfig cfg, PartScheme scheme)
    : cfg_(std::move(cfg)), scheme_(std::move(scheme)) {
    scheme_.validate();
    if (cfg_.refine_iters < 1)
        throw ConfigError("estimator: refine_iters must be >= 1");
}

std::size_t LmrEstimator::pose_stage_input_dim(std::size_t stage) const {
    const std::size_t f = cfg_.feature_dim;
    if (cfg_.variant == Variant::single_rnn) return f + kPoseDim + kShapeDim;
    const std::size_t own = scheme_.pose_dim(stage);
    if (stage == 0) return f + own + kShapeDim;
    const std::size_t root = scheme_.pose_dim(0);
    return cfg_.variant == Variant::lmr ? f + own + kShapeDim + root : f + own + kShapeDim;
}

template <typename MakeCell, typename MakeHead, typename MakeAffine>
void LmrEstimator::build_impl(MakeCell&& make_cell, MakeHead&& make_head,
                              MakeAffine&& make_affine) {
    const std::size_t f = cfg_.feature_dim;
    if (cfg_.variant == Variant::single_rnn) {
        pose_cells_.push_back(make_cell("pose_rnn.all", pose_stage_input_dim(0)));
        pose_heads_.push_back(make_head("pose_head.all", kPoseDim));
    } else {
        for (std::size_t p = 0; p < scheme_.part_count(); ++p) {
            const std::string& name = scheme_.parts[p].name;
            pose_cells_.push_back(make_cell("pose_rnn." + name, pose_stage_input_dim(p)));
            pose_heads_.push_back(make_head("pose_head." + name, scheme_.pose_dim(p)));
        }
    }
    const std::size_t shape_in = f + kPoseDim + kShapeDim;
    shape_fc1_ = make_affine("shape_mlp.fc1", shape_in, cfg_.shape_hidden_dim);
    shape_fc2_ = make_affine("shape_mlp.fc2", cfg_.shape_hidden_dim, kShapeDim);
    camera_cell_ = make_cell("camera_rnn", f + kPoseDim + kShapeDim + kCamDim);
    camera_head_ = make_head("camera_head", kCamDim);
}

LmrEstimator LmrEstimator::create(ParamStore& store, const EstimatorConfig& cfg,
                                  const PartScheme& scheme, std::uint64_t init_seed) {
    LmrEstimator est(cfg, scheme);
    Rng rng(init_seed);
    auto make_cell = [&](const std::string& prefix, std::size_t in) {
        return GruCell::create(store, prefix, in, cfg.hidden_dim, rng);
    };
    auto make_head = [&](const std::string& prefix, std::size_t out) {
        return AffineLayer::create(store, prefix, cfg.hidden_dim, out, rng);
    };
    auto make_affine = [&](const std::string& prefix, std::size_t in, std::size_t out) {
        return AffineLayer::create(store, prefix, in, out, rng);
    };
    est.build_impl(make_cell, make_head, make_affine);
    return est;
}

LmrEstimator LmrEstimator::attach(const ParamStore& store, const EstimatorConfig& cfg,
                                  const PartScheme& scheme) {
    LmrEstimator est(cfg, scheme);
    auto make_cell = [&](const std::string& prefix, std::size_t) {
        return GruCell::from_store(store, prefix);
    };
    auto make_head = [&](const std::string& prefix, std::size_t) {
        return AffineLayer::from_store(store, prefix);
    };
    auto make_affine = [&](const std::string& prefix, std::size_t, std::size_t) {
        return AffineLayer::from_store(store, prefix);
    };
    est.build_impl(make_cell, make_head, make_affine);
    return est;
}

FramePrediction LmrEstimator::forward(std::span<const Tensor> features) const {
    const std::size_t frames = features.size();
    if (frames == 0) throw NumericError("estimator: empty feature sequence");
    for (const Tensor& f : features)
        if (f.shape() != Shape{cfg_.feature_dim})
            throw NumericError("estimator: feature dimension mismatch, got " +
                               shape_str(f.shape()) + ", expected (" +
                               std::to_string(cfg_.feature_dim) + ")");

    const Tensor theta_mean_t = Tensor::constant({kPoseDim}, theta_mean);
    const Tensor beta_mean_t = Tensor::constant({kShapeDim}, beta_mean);
    const Tensor cam_init_t = Tensor::constant({kCamDim}, cam_init);
    const Tensor h0 = Tensor::zeros({cfg_.hidden_dim});

    std::vector<Tensor> theta(frames, theta_mean_t);
    std::vector<Tensor> beta(frames, beta_mean_t);

    FramePrediction pred;
    pred.iters.reserve(static_cast<std::size_t>(cfg_.refine_iters));
    pred.pose_deltas.reserve(static_cast<std::size_t>(cfg_.refine_iters));

    for (int v = 0; v < cfg_.refine_iters; ++v) {
        std::vector<std::vector<Tensor>> stage_deltas;

        if (cfg_.variant == Variant::single_rnn) {
            std::vector<Tensor> inputs;
            inputs.reserve(frames);
            for (std::size_t t = 0; t < frames; ++t)
                inputs.push_back(concat({features[t], theta[t], beta[t]}));
            const auto hidden = gru_sequence(pose_cells_[0], inputs, h0);
            std::vector<Tensor> deltas(frames);
            for (std::size_t t = 0; t < frames; ++t) {
                deltas[t] = affine_forward(pose_heads_[0], hidden[t]);
                theta[t] = add(theta[t], deltas[t]);
            }
            stage_deltas.push_back(std::move(deltas));
        } else {
            const std::size_t n_parts = scheme_.part_count();
            std::vector<std::vector<Tensor>> part_pose(n_parts, std::vector<Tensor>(frames));
            for (std::size_t p = 0; p < n_parts; ++p) {
                const auto idx = scheme_.pose_indices(p);
                for (std::size_t t = 0; t < frames; ++t)
                    part_pose[p][t] = gather(theta[t], idx);
            }

            // Root first; its same-iteration output conditions every other part.
            std::vector<Tensor> root_inputs;
            root_inputs.reserve(frames);
            for (std::size_t t = 0; t < frames; ++t)
                root_inputs.push_back(concat({features[t], part_pose[0][t], beta[t]}));
            const auto root_hidden = gru_sequence(pose_cells_[0], root_inputs, h0);
            std::vector<Tensor> root_deltas(frames);
            for (std::size_t t = 0; t < frames; ++t) {
                root_deltas[t] = affine_forward(pose_heads_[0], root_hidden[t]);
                part_pose[0][t] = add(part_pose[0][t], root_deltas[t]);
            }
            stage_deltas.push_back(std::move(root_deltas));

            for (std::size_t p = 1; p < n_parts; ++p) {
                std::vector<Tensor> inputs;
                inputs.reserve(frames);
                for (std::size_t t = 0; t < frames; ++t) {
                    if (cfg_.variant == Variant::lmr)
                        inputs.push_back(
                            concat({features[t], part_pose[p][t], beta[t], part_pose[0][t]}));
                    else
                        inputs.push_back(concat({features[t], part_pose[p][t], beta[t]}));
                }
                const auto hidden = gru_sequence(pose_cells_[p], inputs, h0);
                std::vector<Tensor> deltas(frames);
                for (std::size_t t = 0; t < frames; ++t) {
                    deltas[t] = affine_forward(pose_heads_[p], hidden[t]);
                    part_pose[p][t] = add(part_pose[p][t], deltas[t]);
                }
                stage_deltas.push_back(std::move(deltas));
            }

            std::vector<Tensor> parts_t(n_parts);
            for (std::size_t t = 0; t < frames; ++t) {
                for (std::size_t p = 0; p < n_parts; ++p) parts_t[p] = part_pose[p][t];
                theta[t] = merge_pose(parts_t, scheme_);
            }
        }

        // Shape module: always fed the mean shape, residual over it.
        for (std::size_t t = 0; t < frames; ++t) {
            Tensor x = concat({features[t], theta[t], beta_mean_t});
            Tensor hidden = tanh(affine_forward(shape_fc1_, x));
            beta[t] = add(beta_mean_t, affine_forward(shape_fc2_, hidden));
        }

        // Camera recurrence over the updated pose and shape.
        std::vector<Tensor> cam_inputs;
        cam_inputs.reserve(frames);
        for (std::size_t t = 0; t < frames; ++t)
            cam_inputs.push_back(concat({features[t], theta[t], beta[t], cam_init_t}));
        const auto cam_hidden = gru_sequence(camera_cell_, cam_inputs, h0);

        std::vector<ThetaTensors> frames_out(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            Tensor cam = add(cam_init_t, affine_forward(camera_head_, cam_hidden[t]));
            frames_out[t] = ThetaTensors{theta[t], beta[t], cam};
        }
        pred.iters.push_back(std::move(frames_out));
        pred.pose_deltas.push_back(std::move(stage_deltas));
    }
    return pred;
}

} // namespace lmr
