#pragma once

#include "lmr/body_model.hpp"
#include "lmr/estimator.hpp"
#include "lmr/tensor.hpp"

#include <optional>
#include <span>
#include <vector>

namespace lmr {

struct LossWeights {
    double w_smpl = 1.0;
    double w_3d = 5.0;
    double w_2d = 5.0;

    void validate() const;
};

// Mean over frames of the Euclidean norm of the 85-value parameter residual.
Tensor loss_smpl(std::span<const ThetaTensors> pred, std::span<const ThetaSet> gt);

// Mean per-joint L1 between predicted and reference 3D joints.
// `pred` holds T tensors of shape (24,3); `gt` is T*24*3 values, frame-major.
Tensor loss_3d(std::span<const Tensor> pred, std::span<const double> gt);

// Mean per-joint L1 between projected 2D joints; shapes (24,2) / T*24*2.
Tensor loss_2d(std::span<const Tensor> pred, std::span<const double> gt);

// Weighted sum of whichever components are present; absent ones contribute 0.
Tensor loss_total(const std::optional<Tensor>& smpl, const std::optional<Tensor>& j3d,
                  const std::optional<Tensor>& j2d, const LossWeights& weights);

} // namespace lmr
