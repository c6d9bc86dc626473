#include "lmr/part_scheme.hpp"

#include "lmr/errors.hpp"

#include <algorithm>
#include <set>

namespace lmr {

PartScheme PartScheme::default_scheme() {
    // Joint indices follow the standard 24-joint SMPL ordering:
    //  0 pelvis    1 l_hip     2 r_hip     3 spine1   4 l_knee    5 r_knee
    //  6 spine2    7 l_ankle   8 r_ankle   9 spine3  10 l_foot   11 r_foot
    // 12 neck     13 l_collar 14 r_collar 15 head    16 l_shoulder
    // 17 r_shoulder 18 l_elbow 19 r_elbow 20 l_wrist 21 r_wrist
    // 22 l_hand   23 r_hand
    PartScheme s;
    s.parts = {
        {"root", {0, 3, 6, 9}},
        {"head", {12, 15}},
        {"left_arm", {13, 16, 18, 20, 22}},
        {"right_arm", {14, 17, 19, 21, 23}},
        {"left_leg", {1, 4, 7, 10}},
        {"right_leg", {2, 5, 8, 11}},
    };
    return s;
}

void PartScheme::validate() const {
    if (parts.size() != kNumParts)
        throw ConfigError("part scheme: expected 6 parts, got " + std::to_string(parts.size()));
    static const std::array<std::size_t, kNumParts> expected_sizes{4, 2, 5, 5, 4, 4};
    std::set<int> seen;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p].joints.size() != expected_sizes[p])
            throw ConfigError("part scheme: part '" + parts[p].name + "' has " +
                              std::to_string(parts[p].joints.size()) + " joints, expected " +
                              std::to_string(expected_sizes[p]));
        for (int j : parts[p].joints) {
            if (j < 0 || j >= static_cast<int>(kNumJoints))
                throw ConfigError("part scheme: joint index " + std::to_string(j) +
                                  " out of range in part '" + parts[p].name + "'");
            if (!seen.insert(j).second)
                throw ConfigError("part scheme: joint " + std::to_string(j) +
                                  " assigned to more than one part");
        }
    }
    if (seen.size() != kNumJoints)
        throw ConfigError("part scheme: parts do not cover all 24 joints");
    if (std::find(parts[0].joints.begin(), parts[0].joints.end(), 0) == parts[0].joints.end())
        throw ConfigError("part scheme: root part must contain joint 0");
}

std::vector<std::size_t> PartScheme::pose_indices(std::size_t part) const {
    std::vector<std::size_t> idx;
    idx.reserve(3 * parts[part].joints.size());
    for (int j : parts[part].joints)
        for (int c = 0; c < 3; ++c) idx.push_back(static_cast<std::size_t>(3 * j + c));
    return idx;
}

std::vector<std::size_t> PartScheme::merge_permutation() const {
    // concat(split(theta)) is a permutation of theta; invert it.
    std::vector<std::size_t> concat_order;
    concat_order.reserve(kPoseDim);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        auto idx = pose_indices(p);
        concat_order.insert(concat_order.end(), idx.begin(), idx.end());
    }
    std::vector<std::size_t> perm(kPoseDim);
    for (std::size_t pos = 0; pos < concat_order.size(); ++pos) perm[concat_order[pos]] = pos;
    return perm;
}

std::vector<Tensor> split_pose(const Tensor& pose, const PartScheme& scheme) {
    if (pose.shape() != Shape{kPoseDim})
        throw NumericError("split_pose: expected shape (72), got " + shape_str(pose.shape()));
    std::vector<Tensor> out;
    out.reserve(scheme.parts.size());
    for (std::size_t p = 0; p < scheme.parts.size(); ++p)
        out.push_back(gather(pose, scheme.pose_indices(p)));
    return out;
}

Tensor merge_pose(std::span<const Tensor> part_poses, const PartScheme& scheme) {
    if (part_poses.size() != scheme.parts.size())
        throw NumericError("merge_pose: expected " + std::to_string(scheme.parts.size()) +
                           " parts, got " + std::to_string(part_poses.size()));
    for (std::size_t p = 0; p < part_poses.size(); ++p) {
        if (part_poses[p].shape() != Shape{scheme.pose_dim(p)})
            throw NumericError("merge_pose: part '" + scheme.parts[p].name + "' has shape " +
                               shape_str(part_poses[p].shape()) + ", expected (" +
                               std::to_string(scheme.pose_dim(p)) + ")");
    }
    Tensor stacked = concat(part_poses);
    return gather(stacked, scheme.merge_permutation());
}

} // namespace lmr
