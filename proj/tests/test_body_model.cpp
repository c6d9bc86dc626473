#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lmr/body_model.hpp"
#include "lmr/errors.hpp"
#include "lmr/param_store.hpp"
#include "lmr/rng.hpp"
#include "lmr/serialize.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lmr;

namespace {

// Independent rotation oracle: axis-angle -> unit quaternion -> matrix.
std::array<double, 9> quat_rotation(const double w[3]) {
    const double angle = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    const double half = 0.5 * angle;
    const double qw = std::cos(half);
    const double k = angle > 1e-300 ? std::sin(half) / angle : 0.5;
    const double qx = w[0] * k, qy = w[1] * k, qz = w[2] * k;
    return {1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
            2 * (qx * qy + qz * qw),     1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
            2 * (qx * qz - qy * qw),     2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)};
}

struct Homo {
    // 4x4 homogeneous transform, row-major
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    static Homo from(const std::array<double, 9>& r, const double t[3]) {
        Homo h;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) h.m[i * 4 + j] = r[i * 3 + j];
            h.m[i * 4 + 3] = t[i];
        }
        return h;
    }

    Homo operator*(const Homo& o) const {
        Homo out;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0;
                for (int k = 0; k < 4; ++k) s += m[i * 4 + k] * o.m[k * 4 + j];
                out.m[i * 4 + j] = s;
            }
        return out;
    }

    void apply(const double p[3], double out[3]) const {
        for (int i = 0; i < 3; ++i)
            out[i] = m[i * 4] * p[0] + m[i * 4 + 1] * p[1] + m[i * 4 + 2] * p[2] + m[i * 4 + 3];
    }
};

// FK oracle over explicit homogeneous matrices, rotations from the quaternion
// route. Returns world transforms relative to the rest joint frames.
struct FkOracle {
    std::vector<Homo> world; // 24
    std::vector<std::array<double, 3>> joints;

    FkOracle(const BodyModel& model, const std::vector<double>& pose,
             const std::vector<double>& rest) {
        world.resize(kNumJoints);
        joints.resize(kNumJoints);
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            const auto rot = quat_rotation(&pose[3 * j]);
            const int p = model.parent[j];
            double local_t[3];
            for (int c = 0; c < 3; ++c)
                local_t[c] = p < 0 ? rest[3 * j + c] : rest[3 * j + c] - rest[3 * p + c];
            const Homo local = Homo::from(rot, local_t);
            world[j] = p < 0 ? local : world[static_cast<std::size_t>(p)] * local;
            for (int c = 0; c < 3; ++c) joints[j][c] = world[j].m[c * 4 + 3];
        }
    }
};

std::vector<double> random_pose(Rng& rng, double scale = 0.9) {
    std::vector<double> pose(kPoseDim);
    for (auto& x : pose) x = rng.normal() * scale;
    return pose;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("rodrigues basics") {
    CHECK(rodrigues(Tensor::zeros({3})).values() ==
          std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});

    // quarter turn about z maps x to y
    Tensor r = rodrigues(Tensor::constant({3}, {0, 0, M_PI / 2}));
    Tensor v = matmul(r, Tensor::constant({3}, {1, 0, 0}));
    CHECK(v.at(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.at(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.at(2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rodrigues matches the quaternion oracle") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        double w[3];
        double norm = 0;
        for (auto& x : w) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : w) x *= 1.3 / norm; // fixed magnitude 1.3
        const auto expected = quat_rotation(w);
        const Tensor r = rodrigues(Tensor::constant({3}, {w[0], w[1], w[2]}));
        for (int i = 0; i < 9; ++i) CHECK(r.values()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("rodrigues output stays orthonormal across magnitudes") {
    Rng rng(42);
    const std::vector<double> magnitudes{0.0, 1e-10, M_PI, 2 * M_PI - 1e-6};
    for (int trial = 0; trial < 1000; ++trial) {
        double w[3];
        double norm = 0;
        for (auto& x : w) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(std::max(norm, 1e-30));
        double mag = rng.uniform(0.0, 2 * M_PI);
        if (trial < static_cast<int>(magnitudes.size()) * 4)
            mag = magnitudes[static_cast<std::size_t>(trial) % magnitudes.size()];
        for (auto& x : w) x *= mag / norm;
        const Tensor r = rodrigues(Tensor::constant({3}, {w[0], w[1], w[2]}));
        const auto& m = r.values();
        // R^T R == I
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += m[k * 3 + i] * m[k * 3 + j];
                CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
            }
        const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                           m[1] * (m[3] * m[8] - m[5] * m[6]) +
                           m[2] * (m[3] * m[7] - m[4] * m[6]);
        CHECK(det == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("synthetic model is deterministic and well formed") {
    const BodyModel a = build_synthetic_model(7, 400);
    const BodyModel b = build_synthetic_model(7, 400);
    CHECK(a.template_vertices.values() == b.template_vertices.values());
    CHECK(a.shape_basis.values() == b.shape_basis.values());
    CHECK(a.joint_regressor.values() == b.joint_regressor.values());
    CHECK(a.skinning_weights.values() == b.skinning_weights.values());
    CHECK(a.faces == b.faces);

    const BodyModel c = build_synthetic_model(8, 400);
    CHECK(a.template_vertices.values() != c.template_vertices.values());

    a.validate(); // row sums within 1e-9 checked inside
    CHECK_THROWS_AS(build_synthetic_model(1, 23), ConfigError);
    build_synthetic_model(1, 24).validate(); // minimum size works
    build_synthetic_model(1, 37).validate(); // odd sizes work
}

TEST_CASE("regressor rows are uniform averages that recover their cluster mean") {
    const BodyModel model = build_synthetic_model(7, 400);
    const Tensor joints = rest_joints(model, model.template_vertices);
    const auto& reg = model.joint_regressor.values();
    const auto& verts = model.template_vertices.values();
    const std::size_t n = model.n_vertices;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        std::vector<std::size_t> support;
        for (std::size_t v = 0; v < n; ++v)
            if (reg[j * n + v] != 0.0) support.push_back(v);
        REQUIRE(!support.empty());
        for (int c = 0; c < 3; ++c) {
            double mean = 0;
            for (std::size_t v : support) mean += verts[v * 3 + c];
            mean /= static_cast<double>(support.size());
            CHECK(std::abs(mean - joints.values()[j * 3 + c]) < 1e-9);
        }
        // planted joints sit near the reference skeleton: pelvis at origin
        if (j == 0)
            for (int c = 0; c < 3; ++c) CHECK(std::abs(joints.values()[c]) < 0.0051);
    }
}

TEST_CASE("shape_vertices is the documented linear map") {
    const BodyModel model = build_synthetic_model(3, 120);
    CHECK(shape_vertices(model, Tensor::zeros({10})).values() ==
          model.template_vertices.values());

    Rng rng(5);
    std::vector<double> beta(10);
    for (auto& x : beta) x = rng.normal();
    const auto v1 = shape_vertices(model, Tensor::constant({10}, beta)).values();
    std::vector<double> beta2(10);
    for (std::size_t i = 0; i < 10; ++i) beta2[i] = 2.0 * beta[i];
    const auto v2 = shape_vertices(model, Tensor::constant({10}, beta2)).values();
    const auto& base = model.template_vertices.values();
    for (std::size_t i = 0; i < v1.size(); ++i)
        CHECK(v2[i] - base[i] == doctest::Approx(2.0 * (v1[i] - base[i])).epsilon(1e-12));

    // naive per-entry oracle
    const auto& basis = model.shape_basis.values();
    for (std::size_t i = 0; i < v1.size(); ++i) {
        double off = 0;
        for (std::size_t d = 0; d < 10; ++d) off += basis[i * 10 + d] * beta[d];
        CHECK(v1[i] == doctest::Approx(base[i] + off).epsilon(1e-12));
    }
}

TEST_CASE("forward kinematics at the rest pose returns the rest joints") {
    const BodyModel model = build_synthetic_model(11, 100);
    const Tensor rest = rest_joints(model, model.template_vertices);
    const auto fk = forward_kinematics(model, Tensor::zeros({kPoseDim}), rest);
    CHECK(max_abs_diff(fk.posed_joints.values(), rest.values()) < 1e-12);
}

TEST_CASE("a root-only rotation is a rigid transform about the root") {
    const BodyModel model = build_synthetic_model(11, 100);
    const Tensor rest = rest_joints(model, model.template_vertices);
    std::vector<double> pose(kPoseDim, 0.0);
    pose[2] = M_PI; // 180 degrees about z at the root
    const auto fk = forward_kinematics(model, Tensor::constant({kPoseDim}, pose), rest);
    const auto& j = rest.values();
    const double rx = j[0], ry = j[1];
    for (std::size_t k = 0; k < kNumJoints; ++k) {
        const double x = j[3 * k], y = j[3 * k + 1], z = j[3 * k + 2];
        // 180-degree z-rotation about (rx, ry): p -> (2rx - x, 2ry - y, z)
        CHECK(fk.posed_joints.values()[3 * k] == doctest::Approx(2 * rx - x).epsilon(1e-10));
        CHECK(fk.posed_joints.values()[3 * k + 1] == doctest::Approx(2 * ry - y).epsilon(1e-10));
        CHECK(fk.posed_joints.values()[3 * k + 2] == doctest::Approx(z).epsilon(1e-10));
    }
}

TEST_CASE("forward kinematics and skinning match the independent oracles") {
    const BodyModel model = build_synthetic_model(13, 80);
    const Tensor rest_t = rest_joints(model, model.template_vertices);
    const std::vector<double> rest = rest_t.values();
    const auto& verts = model.template_vertices.values();
    const auto& weights = model.skinning_weights.values();
    Rng rng(77);

    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> pose = random_pose(rng);
        const FkOracle oracle(model, pose, rest);
        const auto fk = forward_kinematics(model, Tensor::constant({kPoseDim}, pose), rest_t);
        for (std::size_t k = 0; k < kNumJoints; ++k)
            for (int c = 0; c < 3; ++c)
                CHECK(fk.posed_joints.values()[3 * k + c] ==
                      doctest::Approx(oracle.joints[k][c]).epsilon(1e-10));

        const Tensor skinned = skin(model, fk, model.template_vertices);
        // loop oracle: v' = sum_k w_vk (R_k (v - j_k) + t_k)
        for (std::size_t v = 0; v < model.n_vertices; ++v) {
            double expect[3] = {0, 0, 0};
            for (std::size_t k = 0; k < kNumJoints; ++k) {
                const double w = weights[v * kNumJoints + k];
                if (w == 0.0) continue;
                double centered[3];
                for (int c = 0; c < 3; ++c) centered[c] = verts[v * 3 + c] - rest[3 * k + c];
                const auto& m = oracle.world[k].m;
                for (int c = 0; c < 3; ++c) {
                    const double moved = m[c * 4] * centered[0] + m[c * 4 + 1] * centered[1] +
                                         m[c * 4 + 2] * centered[2] + oracle.joints[k][c];
                    expect[c] += w * moved;
                }
            }
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(skinned.values()[v * 3 + c] - expect[c]) < 1e-10);
        }
    }
}

TEST_CASE("skinning at the rest pose is the identity") {
    const BodyModel model = build_synthetic_model(4, 150);
    const Tensor rest = rest_joints(model, model.template_vertices);
    const auto fk = forward_kinematics(model, Tensor::zeros({kPoseDim}), rest);
    const Tensor skinned = skin(model, fk, model.template_vertices);
    CHECK(max_abs_diff(skinned.values(), model.template_vertices.values()) < 1e-12);
}

TEST_CASE("a single fully-weighted joint rotates rigidly") {
    BodyModel model = build_synthetic_model(4, 60);
    // all skinning weight on the root joint
    std::vector<double> w(model.n_vertices * kNumJoints, 0.0);
    for (std::size_t v = 0; v < model.n_vertices; ++v) w[v * kNumJoints] = 1.0;
    model.skinning_weights = Tensor::constant({model.n_vertices, kNumJoints}, w);

    std::vector<double> pose(kPoseDim, 0.0);
    pose[0] = 0.4;
    pose[1] = -0.9;
    pose[2] = 1.2;
    const Tensor rest = rest_joints(model, model.template_vertices);
    const auto fk = forward_kinematics(model, Tensor::constant({kPoseDim}, pose), rest);
    const Tensor skinned = skin(model, fk, model.template_vertices);

    const auto rot = quat_rotation(pose.data());
    const auto& verts = model.template_vertices.values();
    const auto& j = rest.values();
    for (std::size_t v = 0; v < model.n_vertices; ++v) {
        double centered[3];
        for (int c = 0; c < 3; ++c) centered[c] = verts[v * 3 + c] - j[c];
        for (int c = 0; c < 3; ++c) {
            const double expect = rot[c * 3] * centered[0] + rot[c * 3 + 1] * centered[1] +
                                  rot[c * 3 + 2] * centered[2] + j[c];
            CHECK(skinned.values()[v * 3 + c] == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("posed_mesh composes its four stages") {
    const BodyModel model = build_synthetic_model(21, 90);
    Rng rng(8);
    std::vector<double> beta(10), pose = random_pose(rng, 0.5);
    for (auto& x : beta) x = rng.normal();

    const Tensor beta_t = Tensor::constant({10}, beta);
    const Tensor pose_t = Tensor::constant({kPoseDim}, pose);
    const MeshResult mesh = posed_mesh(model, beta_t, pose_t);

    const Tensor rest_verts = shape_vertices(model, beta_t);
    const Tensor rest = rest_joints(model, rest_verts);
    const auto fk = forward_kinematics(model, pose_t, rest);
    const Tensor skinned = skin(model, fk, rest_verts);
    CHECK(mesh.vertices.values() == skinned.values());
    CHECK(mesh.joints3d.values() == fk.posed_joints.values());

    // rest-pose consistency: FK joints at theta=0 equal regressed joints
    const MeshResult rest_mesh = posed_mesh(model, beta_t, Tensor::zeros({kPoseDim}));
    CHECK(max_abs_diff(rest_mesh.joints3d.values(), rest.values()) < 1e-9);
}

TEST_CASE("translating the template translates the whole output") {
    const BodyModel base = build_synthetic_model(2, 70);
    const double c[3] = {0.3, -1.1, 0.55};
    BodyModel moved = base;
    std::vector<double> verts = base.template_vertices.values();
    for (std::size_t v = 0; v < base.n_vertices; ++v)
        for (int i = 0; i < 3; ++i) verts[v * 3 + i] += c[i];
    moved.template_vertices = Tensor::constant({base.n_vertices, 3}, verts);

    Rng rng(31);
    const std::vector<double> pose = random_pose(rng, 0.6);
    const MeshResult a = posed_mesh(base, Tensor::zeros({10}), Tensor::constant({kPoseDim}, pose));
    const MeshResult b = posed_mesh(moved, Tensor::zeros({10}), Tensor::constant({kPoseDim}, pose));
    for (std::size_t v = 0; v < base.n_vertices; ++v)
        for (int i = 0; i < 3; ++i)
            CHECK(b.vertices.values()[v * 3 + i] ==
                  doctest::Approx(a.vertices.values()[v * 3 + i] + c[i]).epsilon(1e-12));
    for (std::size_t k = 0; k < kNumJoints; ++k)
        for (int i = 0; i < 3; ++i)
            CHECK(b.joints3d.values()[k * 3 + i] ==
                  doctest::Approx(a.joints3d.values()[k * 3 + i] + c[i]).epsilon(1e-12));
}

TEST_CASE("root-only pose equals a rigid rotation of the rest mesh") {
    const BodyModel model = build_synthetic_model(19, 80);
    std::vector<double> pose(kPoseDim, 0.0);
    pose[0] = 0.7;
    pose[1] = 0.2;
    pose[2] = -1.1;
    const MeshResult posed =
        posed_mesh(model, Tensor::zeros({10}), Tensor::constant({kPoseDim}, pose));
    const MeshResult rest = posed_mesh(model, Tensor::zeros({10}), Tensor::zeros({kPoseDim}));
    const auto rot = quat_rotation(pose.data());
    const auto& j0 = rest.joints3d.values(); // root at indices 0..2
    auto check_rigid = [&](const std::vector<double>& before, const std::vector<double>& after) {
        for (std::size_t i = 0; i < before.size(); i += 3) {
            double centered[3];
            for (int c = 0; c < 3; ++c) centered[c] = before[i + c] - j0[c];
            for (int c = 0; c < 3; ++c) {
                const double expect = rot[c * 3] * centered[0] + rot[c * 3 + 1] * centered[1] +
                                      rot[c * 3 + 2] * centered[2] + j0[c];
                CHECK(std::abs(after[i + c] - expect) < 1e-8);
            }
        }
    };
    check_rigid(rest.vertices.values(), posed.vertices.values());
    check_rigid(rest.joints3d.values(), posed.joints3d.values());
}

TEST_CASE("projection applies scale then translation per joint") {
    Tensor one_row = Tensor::constant({1, 3}, {0.3, -0.2, 5.0});
    Tensor cam_id = Tensor::constant({3}, {1.0, 0.0, 0.0});
    CHECK(project(one_row, cam_id).values() == std::vector<double>{0.3, -0.2});

    Tensor row2 = Tensor::constant({1, 3}, {0.5, 0.25, 9.9});
    Tensor cam2 = Tensor::constant({3}, {2.0, 1.0, -1.0});
    CHECK(project(row2, cam2).values() == std::vector<double>{2.0, -0.5});

    Rng rng(6);
    std::vector<double> pts(24 * 3);
    for (auto& x : pts) x = rng.normal();
    const double s = 1.7, tx = 0.4, ty = -0.9;
    const auto out = project(Tensor::constant({24, 3}, pts), Tensor::constant({3}, {s, tx, ty}));
    for (std::size_t k = 0; k < 24; ++k) {
        CHECK(out.values()[k * 2] == doctest::Approx(s * pts[k * 3] + tx).epsilon(1e-15));
        CHECK(out.values()[k * 2 + 1] == doctest::Approx(s * pts[k * 3 + 1] + ty).epsilon(1e-15));
    }
}

TEST_CASE("mesh and projection gradients pass the finite-difference check") {
    const BodyModel model = build_synthetic_model(9, 50);
    Rng rng(12);
    Tensor beta = Tensor::leaf({10}, {0.1, -0.2, 0.3, 0, 0.5, -0.1, 0.2, 0, -0.3, 0.4});
    std::vector<double> pose_v = random_pose(rng, 0.4);
    Tensor pose = Tensor::leaf({kPoseDim}, pose_v);
    Tensor cam = Tensor::leaf({3}, {1.2, 0.1, -0.2});

    std::vector<double> pick(model.n_vertices * 3);
    for (auto& x : pick) x = rng.normal();
    const Tensor pick_t = Tensor::constant({model.n_vertices, 3}, pick);

    auto f = [&] {
        const MeshResult mesh = posed_mesh(model, beta, pose);
        Tensor s1 = sum(mul(mesh.vertices, pick_t));
        Tensor s2 = sum(project(mesh.joints3d, cam));
        return add(s1, s2);
    };
    CHECK(finite_diff_check(f, {beta, pose, cam}, 1e-5) < 1e-4);
}

TEST_CASE("rodrigues gradient is stable at and near zero") {
    Tensor w0 = Tensor::leaf({3}, {0.0, 0.0, 0.0});
    auto f0 = [&] { return sum(mul(rodrigues(w0), Tensor::constant({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}))); };
    CHECK(finite_diff_check(f0, {w0}, 1e-6) < 1e-5);

    Tensor w1 = Tensor::leaf({3}, {1e-10, -2e-10, 5e-11});
    auto f1 = [&] { return sum(rodrigues(w1)); };
    backward(f1());
    for (double g : w1.grad()) CHECK(std::isfinite(g));
}

TEST_CASE("OBJ export writes a parsable file") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lmr_obj_test";
    fs::create_directories(dir);

    // 3 vertices, 1 face
    BodyModel tiny = build_synthetic_model(1, 24);
    tiny.faces = {{0, 1, 2}};
    MeshResult small{Tensor::constant({3, 3}, {0.1, 0.2, 0.3, -1, 2.5, 0, 4, 5, 6}),
                     Tensor::zeros({24, 3})};
    const fs::path p1 = dir / "small.obj";
    export_obj(small, tiny, p1);
    {
        std::ifstream is(p1);
        std::string line;
        int lines = 0;
        while (std::getline(is, line)) ++lines;
        CHECK(lines == 4);
    }

    const BodyModel model = build_synthetic_model(7, 400);
    const MeshResult mesh =
        posed_mesh(model, Tensor::zeros({10}), Tensor::zeros({kPoseDim}));
    const fs::path p2 = dir / "body.obj";
    export_obj(mesh, model, p2);

    std::ifstream is(p2);
    std::string tag;
    std::vector<double> parsed;
    std::size_t v_lines = 0;
    double x, y, z;
    while (is >> tag) {
        if (tag == "v") {
            is >> x >> y >> z;
            parsed.insert(parsed.end(), {x, y, z});
            ++v_lines;
        } else {
            std::string rest;
            std::getline(is, rest);
        }
    }
    CHECK(v_lines == 400);
    CHECK(max_abs_diff(parsed, mesh.vertices.values()) < 1e-6);
    fs::remove_all(dir);
}

TEST_CASE("model files round-trip bit-exactly and fail loudly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lmr_model_test";
    fs::create_directories(dir);
    const fs::path path = dir / "model.txt";

    const BodyModel model = build_synthetic_model(7, 64);
    save_model(model, path);
    const BodyModel loaded = load_model(path);
    CHECK(loaded.n_vertices == model.n_vertices);
    CHECK(loaded.template_vertices.values() == model.template_vertices.values());
    CHECK(loaded.shape_basis.values() == model.shape_basis.values());
    CHECK(loaded.joint_regressor.values() == model.joint_regressor.values());
    CHECK(loaded.skinning_weights.values() == model.skinning_weights.values());
    CHECK(loaded.parent == model.parent);
    CHECK(loaded.faces == model.faces);

    // wrong joint count -> dimension mismatch
    {
        std::ofstream os(dir / "bad_k.txt");
        ser::Writer w(os, kModelMagic);
        w.field("n_vertices", std::vector<std::int64_t>{24}, {1});
        w.field("n_joints", std::vector<std::int64_t>{23}, {1});
        w.field("template_vertices", std::vector<double>(24 * 3, 0.0), {24, 3});
        w.field("shape_basis", std::vector<double>(72 * 10, 0.0), {72, 10});
        w.field("joint_regressor", std::vector<double>(23 * 24, 0.0), {23, 24});
        w.field("skinning_weights", std::vector<double>(24 * 23, 0.0), {24, 23});
        w.field("parent", std::vector<std::int64_t>(23, 0), {23});
        w.field("faces", std::vector<std::int64_t>{}, {0, 3});
        w.end();
    }
    try {
        load_model(dir / "bad_k.txt");
        FAIL("expected a dimension error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
    }

    // truncated file -> malformed, no partial model
    {
        std::ifstream is(path);
        std::string text((std::istreambuf_iterator<char>(is)), {});
        std::ofstream os(dir / "truncated.txt");
        os << text.substr(0, text.size() / 2);
    }
    try {
        load_model(dir / "truncated.txt");
        FAIL("expected a malformed-file error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("malformed file") != std::string::npos);
    }

    // wrong magic -> version mismatch
    {
        std::ofstream os(dir / "version.txt");
        os << "lmr-model-v0\nend\n";
    }
    try {
        load_model(dir / "version.txt");
        FAIL("expected a version error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("version mismatch") != std::string::npos);
    }
    fs::remove_all(dir);
}
