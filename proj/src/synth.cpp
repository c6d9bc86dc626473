#include "lmr/synth.hpp"

#include "lmr/errors.hpp"
#include "lmr/parallel.hpp"
#include "lmr/rng.hpp"
#include "lmr/serialize.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace lmr {

MotionConfig::MotionConfig() {
    amplitude.fill({0.25, 0.7});
    frequency.fill({0.5, 2.0});
}

void MotionConfig::validate() const {
    if (frames < 1) throw ConfigError("motion: frames must be >= 1");
    if (fps <= 0.0) throw ConfigError("motion: fps must be positive");
    for (std::size_t p = 0; p < kNumParts; ++p) {
        for (const auto& [b, e] : active[p]) {
            if (b < 0 || e > frames || b >= e)
                throw ConfigError("motion: bad active interval [" + std::to_string(b) + "," +
                                  std::to_string(e) + ") for part " + std::to_string(p) +
                                  " with " + std::to_string(frames) + " frames");
        }
        const auto& [alo, ahi] = amplitude[p];
        if (alo < 0.0 || ahi < alo || ahi >= M_PI / 2)
            throw ConfigError("motion: amplitude range for part " + std::to_string(p) +
                              " must satisfy 0 <= lo <= hi < pi/2");
        const auto& [flo, fhi] = frequency[p];
        if (flo <= 0.0 || fhi < flo)
            throw ConfigError("motion: bad frequency range for part " + std::to_string(p));
    }
}

std::vector<Tensor> SequenceBatch::feature_tensors() const {
    std::vector<Tensor> out;
    out.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        std::vector<double> row(features.begin() + t * feature_dim,
                                features.begin() + (t + 1) * feature_dim);
        out.push_back(Tensor::constant({feature_dim}, std::move(row)));
    }
    return out;
}

std::vector<ThetaSet> gen_motion(const PartScheme& scheme, const MotionConfig& cfg) {
    scheme.validate();
    cfg.validate();
    Rng root(cfg.seed);

    // Two oscillators per joint with independent axes, frequencies and
    // phases: the axis-angle vector traces a Lissajous path whose norm stays
    // below the part's amplitude bound.
    struct Osc {
        double axis[2][3];
        double amp[2], freq[2], phase[2];
    };
    std::array<std::vector<Osc>, kNumParts> oscs;
    for (std::size_t p = 0; p < kNumParts; ++p) {
        Rng rng = root.fork(10 + p);
        oscs[p].resize(scheme.parts[p].joints.size());
        for (auto& o : oscs[p]) {
            const double total = rng.uniform(cfg.amplitude[p].first, cfg.amplitude[p].second);
            const double split = rng.uniform(0.3, 0.7);
            o.amp[0] = total * split;
            o.amp[1] = total * (1.0 - split);
            for (int i = 0; i < 2; ++i) {
                double norm = 0.0;
                do {
                    norm = 0.0;
                    for (double& a : o.axis[i]) {
                        a = rng.normal();
                        norm += a * a;
                    }
                } while (norm < 1e-12);
                norm = std::sqrt(norm);
                for (double& a : o.axis[i]) a /= norm;
                o.freq[i] = rng.uniform(cfg.frequency[p].first, cfg.frequency[p].second);
                o.phase[i] = rng.uniform(0.0, 2.0 * M_PI);
            }
        }
    }

    Rng shape_rng = root.fork(1);
    std::vector<double> beta(kShapeDim);
    for (auto& b : beta) b = shape_rng.uniform(-cfg.shape_scale, cfg.shape_scale);

    Rng cam_rng = root.fork(2);
    const double drift_rate = cam_rng.uniform(-0.02, 0.02);
    const double drift_dir = cam_rng.uniform(0.0, 2.0 * M_PI);
    const double scale_wobble = cam_rng.uniform(0.0, 0.08);

    auto part_active = [&](std::size_t p, int t) {
        for (const auto& [b, e] : cfg.active[p])
            if (t >= b && t < e) return true;
        return false;
    };

    std::vector<ThetaSet> out(static_cast<std::size_t>(cfg.frames));
    std::array<int, kNumParts> active_clock{}; // frames of activity so far
    for (int t = 0; t < cfg.frames; ++t) {
        ThetaSet& theta = out[static_cast<std::size_t>(t)];
        theta.shape = beta;
        for (std::size_t p = 0; p < kNumParts; ++p) {
            if (part_active(p, t)) ++active_clock[p];
            const double tau = static_cast<double>(active_clock[p]) / cfg.fps;
            for (std::size_t q = 0; q < oscs[p].size(); ++q) {
                const Osc& o = oscs[p][q];
                const int joint = scheme.parts[p].joints[q];
                for (int c = 0; c < 3; ++c) theta.pose[3 * joint + c] = 0.0;
                for (int i = 0; i < 2; ++i) {
                    const double angle =
                        o.amp[i] * std::sin(2.0 * M_PI * o.freq[i] * tau + o.phase[i]);
                    for (int c = 0; c < 3; ++c)
                        theta.pose[3 * joint + c] += o.axis[i][c] * angle;
                }
            }
        }
        if (cfg.camera == MotionConfig::Camera::drift) {
            const double tt = static_cast<double>(t) / cfg.fps;
            theta.cam_scale = 1.0 + scale_wobble * std::sin(2.0 * M_PI * 0.3 * tt);
            theta.cam_trans = {drift_rate * tt * std::cos(drift_dir),
                               drift_rate * tt * std::sin(drift_dir)};
        } else {
            theta.cam_scale = 1.0;
            theta.cam_trans = {0.0, 0.0};
        }
    }
    return out;
}

void derive_ground_truth(const BodyModel& model, SequenceBatch& batch, bool with_vertices) {
    NoGradGuard no_grad;
    const std::size_t t_count = batch.gt_theta.size();
    batch.frames = t_count;
    batch.gt_joints3d.assign(t_count * kNumJoints * 3, 0.0);
    batch.gt_joints2d.assign(t_count * kNumJoints * 2, 0.0);
    if (with_vertices) batch.gt_vertices.emplace(t_count * model.n_vertices * 3, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        const ThetaSet& theta = batch.gt_theta[t];
        const Tensor beta = Tensor::constant({kShapeDim}, theta.shape);
        const Tensor pose = Tensor::constant({kPoseDim}, theta.pose);
        const MeshResult mesh = posed_mesh(model, beta, pose);
        const Tensor joints2d =
            project(mesh.joints3d, Tensor::constant({kCamDim}, theta.cam()));
        std::copy(mesh.joints3d.values().begin(), mesh.joints3d.values().end(),
                  batch.gt_joints3d.begin() + t * kNumJoints * 3);
        std::copy(joints2d.values().begin(), joints2d.values().end(),
                  batch.gt_joints2d.begin() + t * kNumJoints * 2);
        if (with_vertices)
            std::copy(mesh.vertices.values().begin(), mesh.vertices.values().end(),
                      batch.gt_vertices->begin() + t * model.n_vertices * 3);
    }
}

void gen_features(SequenceBatch& batch, const FeatureSpec& spec) {
    if (spec.dim < 1) throw ConfigError("features: dim must be >= 1");
    const std::size_t f = spec.dim;
    batch.feature_dim = f;

    // Mixing map shared by every sequence generated under this spec.
    Rng map_rng(Rng::mix(spec.seed, 0xfeedULL));
    std::vector<double> a(f * kThetaDim);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(kThetaDim));
    for (auto& x : a) x = map_rng.normal() * inv_sqrt;
    std::vector<double> b(f);
    for (auto& x : b) x = map_rng.normal() * 0.1;

    Rng noise_rng(Rng::mix(spec.seed, batch.seed));
    batch.features.assign(batch.frames * f, 0.0);
    for (std::size_t t = 0; t < batch.frames; ++t) {
        const std::vector<double> flat = batch.gt_theta[t].flat();
        for (std::size_t i = 0; i < f; ++i) {
            double acc = b[i];
            const double* row = &a[i * kThetaDim];
            for (std::size_t j = 0; j < kThetaDim; ++j) acc += row[j] * flat[j];
            batch.features[t * f + i] = acc + spec.noise_sigma * noise_rng.normal();
        }
    }
}

void MotionFamily::validate() const {
    if (frames < 1) throw ConfigError("data.frames must be >= 1");
    if (fps <= 0.0) throw ConfigError("data.fps must be positive");
    if (segments < 1 || segments > frames)
        throw ConfigError("data.segments must be in [1, frames]");
    if (amp_min < 0 || amp_max < amp_min || amp_max >= M_PI / 2)
        throw ConfigError("data.amp range must satisfy 0 <= min <= max < pi/2");
    if (freq_min <= 0 || freq_max < freq_min)
        throw ConfigError("data.freq range must satisfy 0 < min <= max");
    if (root_amp_scale < 0 || root_amp_scale > 1)
        throw ConfigError("data.root_amp_scale must be in [0,1]");
    if (shape_scale < 0) throw ConfigError("data.shape_scale must be >= 0");
}

MotionConfig sample_motion_config(const MotionFamily& family, std::uint64_t seq_seed) {
    family.validate();
    MotionConfig cfg;
    cfg.seed = seq_seed;
    cfg.frames = family.frames;
    cfg.fps = family.fps;
    cfg.shape_scale = family.shape_scale;
    cfg.camera = family.camera_drift ? MotionConfig::Camera::drift : MotionConfig::Camera::fixed;
    for (std::size_t p = 0; p < kNumParts; ++p) {
        const double s = (p == 0 || p == 1) ? family.root_amp_scale : 1.0; // root, head
        cfg.amplitude[p] = {family.amp_min * s, family.amp_max * s};
        cfg.frequency[p] = {family.freq_min, family.freq_max};
    }

    Rng rng(Rng::mix(seq_seed, 0xac7ULL));
    if (family.independent_parts) {
        // Every part draws its own on/off schedule; active roughly half the
        // time, never all parts in lockstep.
        for (std::size_t p = 0; p < kNumParts; ++p) {
            bool on = rng.uniform() < 0.5;
            int begin = 0;
            for (int s = 0; s < family.segments; ++s) {
                int end = family.frames * (s + 1) / family.segments;
                if (s + 1 < family.segments && end - begin > 2)
                    end += static_cast<int>(rng.uniform_int(-1, 1));
                end = std::clamp(end, begin + 1, family.frames);
                if (on) cfg.active[p].push_back({begin, end});
                on = !on;
                begin = end;
                if (begin >= family.frames) break;
            }
        }
    } else {
        // Alternating group activity: arms+head in one phase, legs+root in
        // the other.
        const bool arms_first = rng.uniform() < 0.5;
        static const std::vector<std::size_t> arm_group{1, 2, 3}; // head, both arms
        static const std::vector<std::size_t> leg_group{0, 4, 5}; // root, both legs
        int begin = 0;
        for (int s = 0; s < family.segments; ++s) {
            int end = family.frames * (s + 1) / family.segments;
            if (s + 1 < family.segments && end - begin > 2)
                end += static_cast<int>(rng.uniform_int(-1, 1));
            end = std::clamp(end, begin + 1, family.frames);
            const bool arms_on = arms_first == (s % 2 == 0);
            for (std::size_t p : arms_on ? arm_group : leg_group)
                cfg.active[p].push_back({begin, end});
            begin = end;
            if (begin >= family.frames) break;
        }
    }
    return cfg;
}

SequenceBatch make_sequence(const BodyModel& model, const PartScheme& scheme,
                            const MotionConfig& motion, const FeatureSpec& features,
                            bool with_vertices) {
    SequenceBatch batch;
    batch.seed = motion.seed;
    batch.fps = motion.fps;
    batch.gt_theta = gen_motion(scheme, motion);
    batch.frames = batch.gt_theta.size();
    derive_ground_truth(model, batch, with_vertices);
    gen_features(batch, features);
    return batch;
}

void DatasetConfig::validate() const {
    if (train_count < 1 || val_count < 1)
        throw ConfigError("data: train_count and val_count must be >= 1");
    family.validate();
    const std::uint64_t t0 = train_seed_start, t1 = t0 + static_cast<std::uint64_t>(train_count);
    const std::uint64_t v0 = val_seed_start, v1 = v0 + static_cast<std::uint64_t>(val_count);
    if (t0 < v1 && v0 < t1)
        throw ConfigError("data: train and val seed ranges overlap ([" + std::to_string(t0) +
                          "," + std::to_string(t1) + ") vs [" + std::to_string(v0) + "," +
                          std::to_string(v1) + "))");
}

Dataset make_dataset(const BodyModel& model, const PartScheme& scheme,
                     const DatasetConfig& cfg) {
    cfg.validate();
    Dataset out;
    out.train.resize(static_cast<std::size_t>(cfg.train_count));
    out.val.resize(static_cast<std::size_t>(cfg.val_count));
    auto gen_split = [&](std::vector<SequenceBatch>& dst, std::uint64_t seed0) {
        parallel_for(dst.size(), [&](std::size_t i) {
            const MotionConfig motion =
                sample_motion_config(cfg.family, seed0 + static_cast<std::uint64_t>(i));
            dst[i] = make_sequence(model, scheme, motion, cfg.features);
        });
    };
    gen_split(out.train, cfg.train_seed_start);
    gen_split(out.val, cfg.val_seed_start);
    return out;
}

// --- dataset files ---------------------------------------------------------------

namespace {

std::string seq_filename(const char* split, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04zu.txt", split, i);
    return buf;
}

void save_sequence(const std::filesystem::path& path, const SequenceBatch& b) {
    ser::write_file(path, kDataMagic, [&](ser::Writer& w) {
        w.field("seed", std::vector<std::int64_t>{static_cast<std::int64_t>(b.seed)}, {1});
        w.field("fps", std::vector<double>{b.fps}, {1});
        w.field("features", b.features, {b.frames, b.feature_dim});
        std::vector<double> theta;
        theta.reserve(b.frames * kThetaDim);
        for (const auto& t : b.gt_theta) {
            const auto flat = t.flat();
            theta.insert(theta.end(), flat.begin(), flat.end());
        }
        w.field("gt_theta", theta, {b.frames, kThetaDim});
        w.field("gt_joints3d", b.gt_joints3d, {b.frames, kNumJoints * 3});
        w.field("gt_joints2d", b.gt_joints2d, {b.frames, kNumJoints * 2});
    });
}

SequenceBatch load_sequence(const std::filesystem::path& path, std::size_t frames,
                            std::size_t feature_dim) {
    ser::Reader r = ser::read_file(path, kDataMagic);
    SequenceBatch b;
    b.seed = static_cast<std::uint64_t>(r.ints("seed").at(0));
    b.fps = r.doubles("fps").at(0);
    b.frames = frames;
    b.feature_dim = feature_dim;
    b.features = r.get_checked("features", {frames, feature_dim}).fdata;
    const auto& theta = r.get_checked("gt_theta", {frames, kThetaDim}).fdata;
    b.gt_theta.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t)
        b.gt_theta.push_back(ThetaSet::from_flat(
            std::span<const double>(theta.data() + t * kThetaDim, kThetaDim)));
    b.gt_joints3d = r.get_checked("gt_joints3d", {frames, kNumJoints * 3}).fdata;
    b.gt_joints2d = r.get_checked("gt_joints2d", {frames, kNumJoints * 2}).fdata;
    return b;
}

} // namespace

void save_dataset(const std::filesystem::path& dir, const BodyModel& model,
                  const Dataset& dataset, const std::string& config_echo_json, bool force) {
    namespace fs = std::filesystem;
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw DataError("output directory not empty (use --force to overwrite): " +
                        dir.string());
    fs::create_directories(dir);
    save_model(model, dir / "model.txt");

    nlohmann::json manifest;
    manifest["version"] = kDataMagic;
    manifest["model_file"] = "model.txt";
    if (dataset.train.empty() || dataset.val.empty())
        throw DataError("dataset must have at least one sequence per split");
    manifest["frames"] = dataset.train[0].frames;
    manifest["feature_dim"] = dataset.train[0].feature_dim;
    manifest["fps"] = dataset.train[0].fps;
    manifest["config"] = nlohmann::json::parse(config_echo_json);
    auto emit = [&](const char* split, const std::vector<SequenceBatch>& seqs) {
        std::vector<std::string> names;
        names.reserve(seqs.size());
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            names.push_back(seq_filename(split, i));
            save_sequence(dir / names.back(), seqs[i]);
        }
        manifest[split] = names;
    };
    emit("train", dataset.train);
    emit("val", dataset.val);

    std::ofstream os(dir / "manifest.json");
    if (!os) throw IoError("cannot open for writing: " + (dir / "manifest.json").string());
    os << manifest.dump(2) << '\n';
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path mpath = dir / "manifest.json";
    std::ifstream is(mpath);
    if (!is) throw DataError("missing dataset manifest: " + mpath.string());
    nlohmann::json manifest;
    try {
        is >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed file: " + mpath.string() + " (" + e.what() + ")");
    }
    if (!manifest.contains("version") || manifest["version"] != kDataMagic)
        throw DataError("version mismatch: dataset manifest at " + mpath.string());

    LoadedDataset out;
    out.frames = manifest.at("frames").get<std::size_t>();
    out.feature_dim = manifest.at("feature_dim").get<std::size_t>();
    out.fps = manifest.at("fps").get<double>();
    out.config_echo_json = manifest.at("config").dump();
    out.model = load_model(dir / manifest.at("model_file").get<std::string>());
    auto read_split = [&](const char* split, std::vector<SequenceBatch>& dst) {
        for (const auto& name : manifest.at(split)) {
            dst.push_back(load_sequence(dir / name.get<std::string>(), out.frames,
                                        out.feature_dim));
        }
    };
    read_split("train", out.data.train);
    read_split("val", out.data.val);
    return out;
}

} // namespace lmr
