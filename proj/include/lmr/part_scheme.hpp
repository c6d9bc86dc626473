#pragma once

#include "lmr/tensor.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace lmr {

inline constexpr std::size_t kNumJoints = 24;
inline constexpr std::size_t kPoseDim = 3 * kNumJoints; // 72
inline constexpr std::size_t kNumParts = 6;

// Six-way decomposition of the 24-joint skeleton. Part 0 is the root region
// and owns the global-rotation joint; every other part is a kinematic chain.
struct Part {
    std::string name;
    std::vector<int> joints;
};

struct PartScheme {
    std::vector<Part> parts;

    static PartScheme default_scheme();

    void validate() const; // partition of {0..23}, sizes (4,2,5,5,4,4), root holds joint 0

    std::size_t part_count() const { return parts.size(); }
    std::size_t joint_count(std::size_t part) const { return parts[part].joints.size(); }
    std::size_t pose_dim(std::size_t part) const { return 3 * parts[part].joints.size(); }

    // Positions of this part's pose coordinates inside the 72-vector.
    std::vector<std::size_t> pose_indices(std::size_t part) const;
    // Maps each position of the full pose vector to its position in the
    // concatenation of the per-part vectors (the inverse of split's gather).
    std::vector<std::size_t> merge_permutation() const;
};

// Gathers the per-part pose vectors in scheme order; differentiable.
std::vector<Tensor> split_pose(const Tensor& pose, const PartScheme& scheme);
// Scatter inverse of split_pose; size errors name the offending part.
Tensor merge_pose(std::span<const Tensor> part_poses, const PartScheme& scheme);

} // namespace lmr
