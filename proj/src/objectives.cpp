#include "lmr/objectives.hpp"

#include "lmr/errors.hpp"

#include <cmath>

namespace lmr {

void LossWeights::validate() const {
    for (double w : {w_smpl, w_3d, w_2d})
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ConfigError("loss weights must be finite and nonnegative");
}

Tensor loss_smpl(std::span<const ThetaTensors> pred, std::span<const ThetaSet> gt) {
    if (pred.size() != gt.size())
        throw NumericError("loss_smpl: length mismatch, " + std::to_string(pred.size()) +
                           " predictions vs " + std::to_string(gt.size()) + " references");
    if (pred.empty()) throw NumericError("loss_smpl: empty sequence");
    Tensor acc;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        Tensor diff = sub(Tensor::constant({kThetaDim}, gt[t].flat()), pred[t].flat());
        Tensor norm = sqrt(sum(square(diff)));
        acc = acc.defined() ? add(acc, norm) : norm;
    }
    return scale(acc, 1.0 / static_cast<double>(pred.size()));
}

namespace {

Tensor per_joint_l1(std::span<const Tensor> pred, std::span<const double> gt,
                    std::size_t coords, const char* what) {
    if (pred.empty()) throw NumericError(std::string(what) + ": empty sequence");
    const std::size_t per_frame = kNumJoints * coords;
    if (gt.size() != pred.size() * per_frame)
        throw NumericError(std::string(what) + ": shape mismatch, " +
                           std::to_string(gt.size()) + " reference values vs " +
                           std::to_string(pred.size() * per_frame) + " predicted");
    Tensor acc;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].shape() != Shape{kNumJoints, coords})
            throw NumericError(std::string(what) + ": shape mismatch " +
                               shape_str(pred[t].shape()) + " vs (24," +
                               std::to_string(coords) + ")");
        std::vector<double> g(gt.begin() + t * per_frame, gt.begin() + (t + 1) * per_frame);
        Tensor diff = sub(Tensor::constant({kNumJoints, coords}, std::move(g)), pred[t]);
        Tensor l1 = sum(abs(diff)); // sum of per-joint 1-norms over all joints
        acc = acc.defined() ? add(acc, l1) : l1;
    }
    const double inv = 1.0 / (static_cast<double>(pred.size()) * kNumJoints);
    return scale(acc, inv);
}

} // namespace

Tensor loss_3d(std::span<const Tensor> pred, std::span<const double> gt) {
    return per_joint_l1(pred, gt, 3, "loss_3d");
}

Tensor loss_2d(std::span<const Tensor> pred, std::span<const double> gt) {
    return per_joint_l1(pred, gt, 2, "loss_2d");
}

Tensor loss_total(const std::optional<Tensor>& smpl, const std::optional<Tensor>& j3d,
                  const std::optional<Tensor>& j2d, const LossWeights& weights) {
    weights.validate();
    Tensor acc = Tensor::constant(0.0);
    if (smpl) acc = add(acc, scale(*smpl, weights.w_smpl));
    if (j3d) acc = add(acc, scale(*j3d, weights.w_3d));
    if (j2d) acc = add(acc, scale(*j2d, weights.w_2d));
    return acc;
}

} // namespace lmr
