#include "lmr/body_model.hpp"

#include "lmr/errors.hpp"
#include "lmr/rng.hpp"
#include "lmr/serialize.hpp"

#include <cmath>
#include <fstream>

namespace lmr {

std::vector<double> ThetaSet::flat() const {
    std::vector<double> out;
    out.reserve(kThetaDim);
    out.insert(out.end(), pose.begin(), pose.end());
    out.insert(out.end(), shape.begin(), shape.end());
    out.push_back(cam_scale);
    out.push_back(cam_trans[0]);
    out.push_back(cam_trans[1]);
    return out;
}

ThetaSet ThetaSet::from_flat(std::span<const double> v) {
    if (v.size() != kThetaDim)
        throw NumericError("ThetaSet: expected 85 values, got " + std::to_string(v.size()));
    ThetaSet t;
    std::copy(v.begin(), v.begin() + kPoseDim, t.pose.begin());
    std::copy(v.begin() + kPoseDim, v.begin() + kPoseDim + kShapeDim, t.shape.begin());
    t.cam_scale = v[kPoseDim + kShapeDim];
    t.cam_trans = {v[kPoseDim + kShapeDim + 1], v[kPoseDim + kShapeDim + 2]};
    return t;
}

const std::array<int, kNumJoints>& kinematic_tree() {
    static const std::array<int, kNumJoints> parents = {
        -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    return parents;
}

void BodyModel::validate() const {
    const std::size_t n = n_vertices;
    if (n < kNumJoints)
        throw DataError("body model: needs at least 24 vertices, has " + std::to_string(n));
    if (template_vertices.shape() != Shape{n, 3})
        throw DataError("body model: dimension mismatch in template_vertices " +
                        shape_str(template_vertices.shape()));
    if (shape_basis.shape() != Shape{3 * n, kShapeDim})
        throw DataError("body model: dimension mismatch in shape_basis " +
                        shape_str(shape_basis.shape()));
    if (joint_regressor.shape() != Shape{kNumJoints, n})
        throw DataError("body model: dimension mismatch in joint_regressor " +
                        shape_str(joint_regressor.shape()));
    if (skinning_weights.shape() != Shape{n, kNumJoints})
        throw DataError("body model: dimension mismatch in skinning_weights " +
                        shape_str(skinning_weights.shape()));
    if (parent[0] != -1) throw DataError("body model: joint 0 must be the root");
    for (std::size_t i = 1; i < kNumJoints; ++i)
        if (parent[i] < 0 || parent[i] >= static_cast<int>(i))
            throw DataError("body model: parent[" + std::to_string(i) +
                            "] must reference an earlier joint");
    auto check_rows = [](const Tensor& m, std::size_t rows, std::size_t cols, const char* what) {
        const auto& v = m.values();
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                const double x = v[r * cols + c];
                if (x < 0.0)
                    throw DataError(std::string("body model: negative weight in ") + what);
                s += x;
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw DataError(std::string("body model: row ") + std::to_string(r) + " of " +
                                what + " sums to " + std::to_string(s));
        }
    };
    check_rows(joint_regressor, kNumJoints, n, "joint_regressor");
    check_rows(skinning_weights, n, kNumJoints, "skinning_weights");
}

// --- rodrigues ---------------------------------------------------------------

namespace {

Tensor skew_entries(const Tensor& w, const Tensor& diag) {
    // Row-major 3x3 from components; `diag` fills the diagonal (0 or 1).
    Tensor wx = slice(w, 0, 1);
    Tensor wy = slice(w, 1, 1);
    Tensor wz = slice(w, 2, 1);
    Tensor flat = concat({diag, neg(wz), wy, wz, diag, neg(wx), neg(wy), wx, diag});
    return reshape(flat, {3, 3});
}

Tensor identity3() {
    return Tensor::constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
}

} // namespace

Tensor rodrigues(const Tensor& axis_angle) {
    if (axis_angle.shape() != Shape{3})
        throw NumericError("rodrigues: expected shape (3), got " + shape_str(axis_angle.shape()));
    const Tensor sumsq = sum(square(axis_angle));
    const Tensor zero = Tensor::constant(Shape{1}, {0.0});
    if (sumsq.item() < 1e-16) {
        // First-order expansion; avoids the sqrt whose derivative blows up at 0.
        return add(identity3(), skew_entries(axis_angle, zero));
    }
    const Tensor angle = sqrt(sumsq);
    const Tensor sin_term = div(sin(angle), angle);              // sin(a)/a
    const Tensor one_s = Tensor::constant(1.0);
    const Tensor cos_term = div(sub(one_s, cos(angle)), sumsq);  // (1-cos a)/a^2
    Tensor k = skew_entries(axis_angle, zero);
    Tensor k2 = matmul(k, k);
    Tensor r = add(identity3(), add(mul(broadcast(sin_term, {3, 3}), k),
                                    mul(broadcast(cos_term, {3, 3}), k2)));
    return r;
}

// --- synthetic model ----------------------------------------------------------

namespace {

// Rest skeleton in meters, pelvis at the origin, y up, z forward.
constexpr double kRestJoints[kNumJoints][3] = {
    {0.00, 0.00, 0.00},   // pelvis
    {0.09, -0.08, 0.00},  // l_hip
    {-0.09, -0.08, 0.00}, // r_hip
    {0.00, 0.11, 0.00},   // spine1
    {0.10, -0.46, 0.00},  // l_knee
    {-0.10, -0.46, 0.00}, // r_knee
    {0.00, 0.24, 0.00},   // spine2
    {0.10, -0.85, 0.00},  // l_ankle
    {-0.10, -0.85, 0.00}, // r_ankle
    {0.00, 0.35, 0.00},   // spine3
    {0.11, -0.93, 0.11},  // l_foot
    {-0.11, -0.93, 0.11}, // r_foot
    {0.00, 0.50, 0.00},   // neck
    {0.07, 0.45, 0.00},   // l_collar
    {-0.07, 0.45, 0.00},  // r_collar
    {0.00, 0.62, 0.02},   // head
    {0.17, 0.45, 0.00},   // l_shoulder
    {-0.17, 0.45, 0.00},  // r_shoulder
    {0.43, 0.44, 0.00},   // l_elbow
    {-0.43, 0.44, 0.00},  // r_elbow
    {0.68, 0.44, 0.00},   // l_wrist
    {-0.68, 0.44, 0.00},  // r_wrist
    {0.77, 0.44, 0.00},   // l_hand
    {-0.77, 0.44, 0.00},  // r_hand
};

} // namespace

BodyModel build_synthetic_model(std::uint64_t seed, std::size_t n_vertices) {
    if (n_vertices < kNumJoints)
        throw ConfigError("build_synthetic_model: n_vertices must be >= 24, got " +
                          std::to_string(n_vertices));
    const std::size_t n = n_vertices;
    Rng root_rng(seed);
    Rng joint_rng = root_rng.fork(1);
    Rng vert_rng = root_rng.fork(2);
    Rng skin_rng = root_rng.fork(3);
    Rng basis_rng = root_rng.fork(4);

    // Planted rest joints: fixed skeleton plus a little per-model jitter.
    std::array<std::array<double, 3>, kNumJoints> joints;
    for (std::size_t j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c)
            joints[j][c] = kRestJoints[j][c] + joint_rng.uniform(-0.005, 0.005);

    // Cluster sizes: near-even split of the vertex budget.
    std::array<std::size_t, kNumJoints> cluster_size{};
    const std::size_t base = n / kNumJoints;
    const std::size_t rem = n % kNumJoints;
    for (std::size_t j = 0; j < kNumJoints; ++j) cluster_size[j] = base + (j < rem ? 1 : 0);

    // Vertices come in mirrored pairs around their joint so that the uniform
    // regressor row reproduces the planted joint position.
    std::vector<double> verts(n * 3, 0.0);
    std::vector<std::vector<std::size_t>> cluster(kNumJoints);
    std::size_t vi = 0;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        const std::size_t m = cluster_size[j];
        cluster[j].reserve(m);
        for (std::size_t p = 0; p + 1 < m; p += 2) {
            double d[3];
            for (int c = 0; c < 3; ++c) d[c] = vert_rng.uniform(-0.06, 0.06);
            for (int c = 0; c < 3; ++c) verts[vi * 3 + c] = joints[j][c] + d[c];
            cluster[j].push_back(vi++);
            for (int c = 0; c < 3; ++c) verts[vi * 3 + c] = joints[j][c] - d[c];
            cluster[j].push_back(vi++);
        }
        if (m % 2 == 1) { // odd cluster: one vertex sits exactly on the joint
            for (int c = 0; c < 3; ++c) verts[vi * 3 + c] = joints[j][c];
            cluster[j].push_back(vi++);
        }
    }

    std::vector<double> regressor(kNumJoints * n, 0.0);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        const double w = 1.0 / static_cast<double>(cluster[j].size());
        for (std::size_t v : cluster[j]) regressor[j * n + v] = w;
    }

    const auto& parents = kinematic_tree();
    std::vector<double> skin_w(n * kNumJoints, 0.0);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        for (std::size_t v : cluster[j]) {
            const double w_self = skin_rng.uniform(0.75, 0.95);
            if (parents[j] < 0) {
                skin_w[v * kNumJoints + j] = 1.0;
            } else {
                skin_w[v * kNumJoints + j] = w_self;
                skin_w[v * kNumJoints + static_cast<std::size_t>(parents[j])] = 1.0 - w_self;
            }
        }
    }

    // Shape basis: dim 0 scales the whole body, dim 1 stretches height, the
    // rest are smooth seeded deformation fields.
    std::vector<double> basis(3 * n * kShapeDim, 0.0);
    auto set_basis = [&](std::size_t vert, int coord, std::size_t dim, double value) {
        basis[(vert * 3 + static_cast<std::size_t>(coord)) * kShapeDim + dim] = value;
    };
    std::array<std::array<double, 7>, kShapeDim> field{}; // dir(3), freq(3), phase
    for (std::size_t d = 2; d < kShapeDim; ++d) {
        for (int c = 0; c < 3; ++c) field[d][c] = basis_rng.normal();
        for (int c = 0; c < 3; ++c) field[d][3 + c] = basis_rng.uniform(1.0, 4.0);
        field[d][6] = basis_rng.uniform(0.0, 2.0 * M_PI);
    }
    for (std::size_t v = 0; v < n; ++v) {
        const double* p = &verts[v * 3];
        for (int c = 0; c < 3; ++c) set_basis(v, c, 0, 0.06 * p[c]);
        set_basis(v, 1, 1, 0.08 * p[1]);
        for (std::size_t d = 2; d < kShapeDim; ++d) {
            const double phase =
                field[d][3] * p[0] + field[d][4] * p[1] + field[d][5] * p[2] + field[d][6];
            const double amp = 0.015 * std::sin(phase);
            for (int c = 0; c < 3; ++c) set_basis(v, c, d, amp * field[d][c]);
        }
    }

    // Triangles: a fan per cluster, enough for OBJ inspection.
    std::vector<std::array<std::uint32_t, 3>> faces;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        const auto& cl = cluster[j];
        for (std::size_t i = 1; i + 1 < cl.size(); ++i)
            faces.push_back({static_cast<std::uint32_t>(cl[0]),
                             static_cast<std::uint32_t>(cl[i]),
                             static_cast<std::uint32_t>(cl[i + 1])});
    }

    BodyModel model;
    model.n_vertices = n;
    model.template_vertices = Tensor::constant({n, 3}, std::move(verts));
    model.shape_basis = Tensor::constant({3 * n, kShapeDim}, std::move(basis));
    model.joint_regressor = Tensor::constant({kNumJoints, n}, std::move(regressor));
    model.skinning_weights = Tensor::constant({n, kNumJoints}, std::move(skin_w));
    model.parent = parents;
    model.faces = std::move(faces);
    model.validate();
    return model;
}

// --- kinematics & skinning ------------------------------------------------------

Tensor shape_vertices(const BodyModel& model, const Tensor& beta) {
    if (beta.shape() != Shape{kShapeDim})
        throw NumericError("shape_vertices: expected shape (10), got " + shape_str(beta.shape()));
    Tensor offsets = reshape(matmul(model.shape_basis, beta), {model.n_vertices, 3});
    return add(model.template_vertices, offsets);
}

Tensor rest_joints(const BodyModel& model, const Tensor& rest_verts) {
    return matmul(model.joint_regressor, reshape(rest_verts, {model.n_vertices, 3}));
}

JointTransforms forward_kinematics(const BodyModel& model, const Tensor& pose,
                                   const Tensor& rest) {
    if (pose.shape() != Shape{kPoseDim})
        throw NumericError("forward_kinematics: expected pose (72), got " +
                           shape_str(pose.shape()));
    JointTransforms out;
    out.rest_joints = rest;
    out.rotation.resize(kNumJoints);
    out.translation.resize(kNumJoints);
    std::vector<Tensor> rest_rows(kNumJoints);
    for (std::size_t j = 0; j < kNumJoints; ++j)
        rest_rows[j] = reshape(slice(rest, j, 1), {3});
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        Tensor local_rot = rodrigues(slice(pose, 3 * j, 3));
        const int p = model.parent[j];
        if (p < 0) {
            out.rotation[j] = local_rot;
            out.translation[j] = rest_rows[j];
        } else {
            const auto pp = static_cast<std::size_t>(p);
            out.rotation[j] = matmul(out.rotation[pp], local_rot);
            Tensor offset = sub(rest_rows[j], rest_rows[pp]);
            out.translation[j] = add(out.translation[pp], matmul(out.rotation[pp], offset));
        }
    }
    out.posed_joints = reshape(concat(std::span<const Tensor>(out.translation)),
                               {kNumJoints, 3});
    return out;
}

Tensor skin(const BodyModel& model, const JointTransforms& transforms,
            const Tensor& rest_verts) {
    const std::size_t n = model.n_vertices;
    if (rest_verts.shape() != Shape{n, 3})
        throw NumericError("skin: rest vertices " + shape_str(rest_verts.shape()) +
                           " do not match model (" + std::to_string(n) + ",3)");
    if (!transforms.rest_joints.defined())
        throw NumericError("skin: transforms are missing their rest joints");
    const Tensor ones_col = Tensor::full({n, 1}, 1.0);
    const auto& weights = model.skinning_weights.values();

    Tensor acc;
    for (std::size_t k = 0; k < kNumJoints; ++k) {
        // v' += w_k * (R_k (v - j_k) + t_k)
        Tensor j_row = slice(transforms.rest_joints, k, 1); // (1,3)
        Tensor centered = sub(rest_verts, matmul(ones_col, j_row));
        Tensor rotated = matmul(centered, transpose(transforms.rotation[k]));
        Tensor placed = add(rotated, matmul(ones_col, reshape(transforms.translation[k], {1, 3})));
        std::vector<double> wk(n * 3);
        for (std::size_t v = 0; v < n; ++v)
            wk[v * 3] = wk[v * 3 + 1] = wk[v * 3 + 2] = weights[v * kNumJoints + k];
        Tensor weighted = mul(placed, Tensor::constant({n, 3}, std::move(wk)));
        acc = acc.defined() ? add(acc, weighted) : weighted;
    }
    return acc;
}

MeshResult posed_mesh(const BodyModel& model, const Tensor& beta, const Tensor& pose) {
    Tensor rest_verts = shape_vertices(model, beta);
    Tensor rest = rest_joints(model, rest_verts);
    JointTransforms fk = forward_kinematics(model, pose, rest);
    Tensor verts = skin(model, fk, rest_verts);
    return MeshResult{verts, fk.posed_joints};
}

Tensor project(const Tensor& points3d, const Tensor& cam) {
    if (points3d.rank() != 2 || points3d.shape()[1] != 3)
        throw NumericError("project: expected (K,3) points, got " + shape_str(points3d.shape()));
    if (cam.shape() != Shape{kCamDim})
        throw NumericError("project: expected camera (3), got " + shape_str(cam.shape()));
    const std::size_t k = points3d.shape()[0];
    std::vector<std::size_t> xy_idx;
    xy_idx.reserve(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        xy_idx.push_back(3 * i);
        xy_idx.push_back(3 * i + 1);
    }
    Tensor xy = gather(reshape(points3d, {3 * k}), std::move(xy_idx));
    Tensor s = broadcast(slice(cam, 0, 1), {2 * k});
    std::vector<std::size_t> t_idx(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        t_idx[2 * i] = 1;
        t_idx[2 * i + 1] = 2;
    }
    Tensor t = gather(cam, std::move(t_idx));
    return reshape(add(mul(xy, s), t), {k, 2});
}

// --- files ----------------------------------------------------------------------

void export_obj(const MeshResult& mesh, const BodyModel& model,
                const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("export_obj: cannot open " + path.string());
    const auto& v = mesh.vertices.values();
    const std::size_t n = mesh.vertices.shape()[0];
    for (std::size_t i = 0; i < n; ++i)
        os << "v " << ser::format_double(v[i * 3]) << ' ' << ser::format_double(v[i * 3 + 1])
           << ' ' << ser::format_double(v[i * 3 + 2]) << '\n';
    for (const auto& f : model.faces)
        os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    os.flush();
    if (!os) throw IoError("export_obj: write failed for " + path.string());
}

void save_model(const BodyModel& model, const std::filesystem::path& path) {
    ser::write_file(path, kModelMagic, [&](ser::Writer& w) {
        const std::size_t n = model.n_vertices;
        w.field("n_vertices", std::vector<std::int64_t>{static_cast<std::int64_t>(n)}, {1});
        w.field("n_joints", std::vector<std::int64_t>{kNumJoints}, {1});
        w.field("template_vertices", model.template_vertices.values(), {n, 3});
        w.field("shape_basis", model.shape_basis.values(), {3 * n, kShapeDim});
        w.field("joint_regressor", model.joint_regressor.values(), {kNumJoints, n});
        w.field("skinning_weights", model.skinning_weights.values(), {n, kNumJoints});
        std::vector<std::int64_t> par(model.parent.begin(), model.parent.end());
        w.field("parent", par, {kNumJoints});
        std::vector<std::int64_t> faces;
        faces.reserve(model.faces.size() * 3);
        for (const auto& f : model.faces)
            for (auto idx : f) faces.push_back(static_cast<std::int64_t>(idx));
        w.field("faces", faces, {model.faces.size(), 3});
    });
}

BodyModel load_model(const std::filesystem::path& path) {
    ser::Reader r = ser::read_file(path, kModelMagic);
    const auto& nfield = r.ints("n_vertices");
    if (nfield.size() != 1 || nfield[0] < 0)
        throw DataError("malformed file: bad n_vertices in " + path.string());
    const auto n = static_cast<std::size_t>(nfield[0]);
    const auto& kfield = r.ints("n_joints");
    if (kfield.size() != 1 || kfield[0] != static_cast<std::int64_t>(kNumJoints))
        throw DataError("dimension mismatch: model has " +
                        std::to_string(kfield.empty() ? 0 : kfield[0]) +
                        " joints, this build supports 24");

    BodyModel model;
    model.n_vertices = n;
    model.template_vertices =
        Tensor::constant({n, 3}, r.get_checked("template_vertices", {n, 3}).fdata);
    model.shape_basis =
        Tensor::constant({3 * n, kShapeDim}, r.get_checked("shape_basis", {3 * n, kShapeDim}).fdata);
    model.joint_regressor =
        Tensor::constant({kNumJoints, n}, r.get_checked("joint_regressor", {kNumJoints, n}).fdata);
    model.skinning_weights =
        Tensor::constant({n, kNumJoints}, r.get_checked("skinning_weights", {n, kNumJoints}).fdata);
    const auto& par = r.get_checked("parent", {kNumJoints}).idata;
    for (std::size_t i = 0; i < kNumJoints; ++i) model.parent[i] = static_cast<int>(par[i]);
    const auto& faces = r.get("faces");
    if (faces.dims.size() != 2 || faces.dims[1] != 3)
        throw DataError("dimension mismatch in field 'faces'");
    model.faces.resize(faces.dims[0]);
    for (std::size_t i = 0; i < model.faces.size(); ++i)
        for (int c = 0; c < 3; ++c)
            model.faces[i][c] = static_cast<std::uint32_t>(faces.idata[i * 3 + c]);
    model.validate();
    return model;
}

} // namespace lmr
