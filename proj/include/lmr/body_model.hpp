#pragma once

#include "lmr/part_scheme.hpp"
#include "lmr/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lmr {

inline constexpr std::size_t kShapeDim = 10;
inline constexpr std::size_t kCamDim = 3;   // scale, tx, ty
inline constexpr std::size_t kThetaDim = kPoseDim + kShapeDim + kCamDim; // 85

// Full per-frame parameter set: pose, shape, weak-perspective camera.
struct ThetaSet {
    std::vector<double> pose;              // 72, axis-angle radians per joint
    std::vector<double> shape;             // 10
    double cam_scale = 1.0;
    std::vector<double> cam_trans{0.0, 0.0};

    ThetaSet() : pose(kPoseDim, 0.0), shape(kShapeDim, 0.0) {}

    std::vector<double> cam() const { return {cam_scale, cam_trans[0], cam_trans[1]}; }
    std::vector<double> flat() const;                       // [pose | shape | s | t], 85
    static ThetaSet from_flat(std::span<const double> v);
};

// Parametric body: template mesh, shape blendshape basis, joint regressor,
// kinematic tree, skinning weights. Immutable after construction; all
// operations below are pure functions of their inputs.
struct BodyModel {
    std::size_t n_vertices = 0;
    Tensor template_vertices; // (N,3) meters
    Tensor shape_basis;       // (3N,10)
    Tensor joint_regressor;   // (24,N), rows nonnegative, sum to 1
    Tensor skinning_weights;  // (N,24), rows nonnegative, sum to 1
    std::array<int, kNumJoints> parent{};
    std::vector<std::array<std::uint32_t, 3>> faces; // export only

    void validate() const;
};

struct MeshResult {
    Tensor vertices; // (N,3) posed, meters
    Tensor joints3d; // (24,3) posed, meters
};

struct JointTransforms {
    std::vector<Tensor> rotation;    // 24 world rotations, (3,3)
    std::vector<Tensor> translation; // 24 world joint positions, (3)
    Tensor posed_joints;             // (24,3)
    Tensor rest_joints;              // (24,3), kept for skinning
};

// Standard 24-joint kinematic tree (pelvis root, parent[i] < i).
const std::array<int, kNumJoints>& kinematic_tree();

// Axis-angle to rotation matrix; total and differentiable. Below the
// small-angle threshold (norm < 1e-8) switches to I + [w]x so gradients stay
// finite at the zero pose.
Tensor rodrigues(const Tensor& axis_angle);

// Deterministic stand-in for a learned body asset: joints on a fixed skeleton
// with seeded jitter, vertices clustered around their dominant joint, and a
// joint regressor built so that regressing the template reproduces the planted
// rest joints. Rejects n_vertices < 24.
BodyModel build_synthetic_model(std::uint64_t seed, std::size_t n_vertices);

Tensor shape_vertices(const BodyModel& model, const Tensor& beta);      // (N,3)
Tensor rest_joints(const BodyModel& model, const Tensor& rest_verts);   // (24,3)
JointTransforms forward_kinematics(const BodyModel& model, const Tensor& pose,
                                   const Tensor& rest_joints);
Tensor skin(const BodyModel& model, const JointTransforms& transforms,
            const Tensor& rest_verts); // (N,3)

// shape -> rest joints -> kinematics -> skinning, differentiable in both.
MeshResult posed_mesh(const BodyModel& model, const Tensor& beta, const Tensor& pose);

// Weak perspective: x = s * X_xy + t per joint; cam = [s, tx, ty].
Tensor project(const Tensor& points3d, const Tensor& cam); // (K,3) -> (K,2)

void export_obj(const MeshResult& mesh, const BodyModel& model,
                const std::filesystem::path& path);

inline constexpr const char* kModelMagic = "lmr-model-v1";
void save_model(const BodyModel& model, const std::filesystem::path& path);
BodyModel load_model(const std::filesystem::path& path);

} // namespace lmr
