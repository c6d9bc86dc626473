#include "lmr/train.hpp"

#include "lmr/errors.hpp"
#include "lmr/parallel.hpp"
#include "lmr/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lmr {

void AdamState::init_like(const ParamStore& store) {
    m.clear();
    v.clear();
    store.for_each([&](const std::string&, const Tensor& t) {
        m.emplace_back(t.numel(), 0.0);
        v.emplace_back(t.numel(), 0.0);
    });
    step = 0;
}

void adam_step(ParamStore& store, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
    if (!state.initialized()) state.init_like(store);
    if (state.m.size() != store.size())
        throw NumericError("adam_step: state tracks " + std::to_string(state.m.size()) +
                           " tensors, store has " + std::to_string(store.size()));
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    std::size_t i = 0;
    store.for_each([&](const std::string& name, Tensor& t) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = t.grad();
        auto& values = t.values_mut();
        if (m.size() != values.size())
            throw NumericError("adam_step: shape drift for '" + name + "'");
        for (std::size_t k = 0; k < values.size(); ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            values[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        ++i;
    });
}

// --- checkpoint files ---------------------------------------------------------

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    ser::write_file(path, kCheckpointMagic, [&](ser::Writer& w) {
        w.field("config", ckpt.config_json);
        w.field("epoch", std::vector<std::int64_t>{ckpt.epoch}, {1});
        w.field("adam_step", std::vector<std::int64_t>{ckpt.adam.step}, {1});
        std::ostringstream names;
        for (std::size_t i = 0; i < ckpt.param_names.size(); ++i)
            names << (i ? " " : "") << ckpt.param_names[i];
        w.field("param_names", names.str());
        std::ostringstream hist;
        for (std::size_t i = 0; i < ckpt.history.size(); ++i)
            hist << (i ? "\t" : "") << ckpt.history[i];
        w.field("history", hist.str());
        for (std::size_t i = 0; i < ckpt.param_names.size(); ++i) {
            const auto& name = ckpt.param_names[i];
            w.field("p." + name, ckpt.param_values[i], ckpt.param_shapes[i]);
            if (ckpt.adam.m.size() == ckpt.param_names.size()) {
                w.field("m." + name, ckpt.adam.m[i], {ckpt.adam.m[i].size()});
                w.field("v." + name, ckpt.adam.v[i], {ckpt.adam.v[i].size()});
            }
        }
    });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    ser::Reader r = ser::read_file(path, kCheckpointMagic);
    Checkpoint ckpt;
    ckpt.config_json = r.str("config");
    ckpt.epoch = static_cast<int>(r.ints("epoch").at(0));
    ckpt.adam.step = r.ints("adam_step").at(0);
    {
        std::istringstream names(r.str("param_names"));
        std::string tok;
        while (names >> tok) ckpt.param_names.push_back(tok);
    }
    {
        const std::string& hist = r.str("history");
        std::size_t start = 0;
        while (start < hist.size()) {
            const std::size_t tab = hist.find('\t', start);
            const std::size_t end = tab == std::string::npos ? hist.size() : tab;
            ckpt.history.push_back(hist.substr(start, end - start));
            start = end + 1;
        }
    }
    const bool has_adam = !ckpt.param_names.empty() && r.has("m." + ckpt.param_names[0]);
    for (const auto& name : ckpt.param_names) {
        const ser::Field& f = r.get("p." + name);
        ckpt.param_shapes.push_back(f.dims);
        ckpt.param_values.push_back(f.fdata);
        if (has_adam) {
            ckpt.adam.m.push_back(r.doubles("m." + name));
            ckpt.adam.v.push_back(r.doubles("v." + name));
        }
    }
    return ckpt;
}

// --- loss over one sequence -----------------------------------------------------

namespace {

Tensor iteration_loss(const BodyModel& model, std::span<const ThetaTensors> frames,
                      const SequenceBatch& batch, const LossWeights& weights,
                      SequenceLoss& parts_out) {
    std::vector<Tensor> joints3d;
    std::vector<Tensor> joints2d;
    joints3d.reserve(frames.size());
    joints2d.reserve(frames.size());
    for (const ThetaTensors& f : frames) {
        Tensor rest_verts = shape_vertices(model, f.shape);
        JointTransforms fk = forward_kinematics(model, f.pose, rest_joints(model, rest_verts));
        joints3d.push_back(fk.posed_joints);
        joints2d.push_back(project(fk.posed_joints, f.cam));
    }
    Tensor l_smpl = loss_smpl(frames, batch.gt_theta);
    Tensor l_3d = loss_3d(joints3d, batch.gt_joints3d);
    Tensor l_2d = loss_2d(joints2d, batch.gt_joints2d);
    parts_out.smpl += l_smpl.item();
    parts_out.j3d += l_3d.item();
    parts_out.j2d += l_2d.item();
    return loss_total(l_smpl, l_3d, l_2d, weights);
}

} // namespace

SequenceLoss sequence_loss(const BodyModel& model, const FramePrediction& pred,
                           const SequenceBatch& batch, const LossWeights& weights,
                           bool supervise_all_iters) {
    if (pred.frame_count() != batch.frames)
        throw NumericError("sequence_loss: prediction has " +
                           std::to_string(pred.frame_count()) + " frames, batch has " +
                           std::to_string(batch.frames));
    SequenceLoss out;
    if (!supervise_all_iters) {
        out.total = iteration_loss(model, pred.final_frames(), batch, weights, out);
        return out;
    }
    Tensor acc;
    for (const auto& frames : pred.iters) {
        Tensor l = iteration_loss(model, frames, batch, weights, out);
        acc = acc.defined() ? add(acc, l) : l;
    }
    const double inv = 1.0 / static_cast<double>(pred.iter_count());
    out.total = scale(acc, inv);
    out.smpl *= inv;
    out.j3d *= inv;
    out.j2d *= inv;
    return out;
}

// --- training loop ---------------------------------------------------------------

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t init_seed, int epoch) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::mix(init_seed, 0x5u + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

Checkpoint make_checkpoint(const ExperimentConfig& cfg, const ParamStore& store,
                           const AdamState& adam, int epoch,
                           std::vector<std::string> history) {
    Checkpoint ckpt;
    ckpt.config_json = cfg.to_json();
    ckpt.epoch = epoch;
    store.for_each([&](const std::string& name, const Tensor& t) {
        ckpt.param_names.push_back(name);
        ckpt.param_shapes.push_back(t.shape());
        ckpt.param_values.push_back(t.values());
    });
    ckpt.adam = adam;
    ckpt.history = std::move(history);
    return ckpt;
}

} // namespace

TrainOutput train(const ExperimentConfig& cfg, const BodyModel& model, const Dataset& data,
                  std::ostream* log, const Checkpoint* resume_from) {
    cfg.validate();
    if (data.train.empty()) throw DataError("train: dataset has no training sequences");

    ParamStore store;
    LmrEstimator est = LmrEstimator::create(store, cfg.estimator_config(), cfg.model.scheme,
                                            cfg.training.init_seed);
    AdamState adam;
    adam.init_like(store);
    int start_epoch = 0;
    std::vector<std::string> history;
    if (resume_from) {
        if (resume_from->param_names != store.names())
            throw DataError("train: checkpoint parameters do not match this configuration");
        store.assign_values(resume_from->param_values);
        adam = resume_from->adam;
        start_epoch = resume_from->epoch;
        history = resume_from->history;
    }

    TrainOutput out;
    long step = adam.step;
    for (int epoch = start_epoch; epoch < cfg.training.epochs; ++epoch) {
        const auto order = epoch_order(data.train.size(), cfg.training.init_seed, epoch);
        double epoch_loss_sum = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.training.batch_size) {
            const std::size_t batch_n =
                std::min<std::size_t>(cfg.training.batch_size, order.size() - pos);
            store.zero_grad();
            double loss_sum = 0.0, smpl_sum = 0.0, j3d_sum = 0.0, j2d_sum = 0.0;
            for (std::size_t b = 0; b < batch_n; ++b) {
                const SequenceBatch& seq = data.train[order[pos + b]];
                const auto features = seq.feature_tensors();
                FramePrediction pred = est.forward(features);
                SequenceLoss l = sequence_loss(model, pred, seq, cfg.metrics.weights,
                                               cfg.training.supervise_all_iters);
                const double value = l.total.item();
                if (!std::isfinite(value))
                    throw NumericError("train: non-finite loss at step " +
                                       std::to_string(step + 1));
                backward(scale(l.total, 1.0 / static_cast<double>(batch_n)));
                loss_sum += value;
                smpl_sum += l.smpl;
                j3d_sum += l.j3d;
                j2d_sum += l.j2d;
            }
            const double norm = store.grad_norm();
            const bool clipped = norm > cfg.training.clip_norm;
            if (clipped) store.scale_grads(cfg.training.clip_norm / norm);
            adam_step(store, adam, cfg.training.learning_rate);
            ++step;
            ++epoch_batches;
            const double inv = 1.0 / static_cast<double>(batch_n);
            epoch_loss_sum += loss_sum * inv;
            std::ostringstream line;
            line << "step=" << step << " epoch=" << epoch
                 << " loss=" << ser::format_double(loss_sum * inv)
                 << " smpl=" << ser::format_double(smpl_sum * inv)
                 << " j3d=" << ser::format_double(j3d_sum * inv)
                 << " j2d=" << ser::format_double(j2d_sum * inv)
                 << " lr=" << ser::format_double(cfg.training.learning_rate)
                 << " clipped=" << (clipped ? 1 : 0);
            out.log_lines.push_back(line.str());
            if (log) *log << out.log_lines.back() << '\n';
        }
        const double epoch_mean =
            epoch_batches ? epoch_loss_sum / static_cast<double>(epoch_batches) : 0.0;
        if (epoch == start_epoch) out.first_epoch_mean_loss = epoch_mean;
        out.last_epoch_mean_loss = epoch_mean;

        MetricsReport report = evaluate(model, estimator_predictor(est), data.val,
                                        cfg.metrics.fps, to_string(cfg.model.variant), "val");
        std::ostringstream line;
        line << "epoch=" << epoch + 1 << " train_loss=" << ser::format_double(epoch_mean)
             << " val_mpjpe=" << ser::format_double(report.summary.mpjpe)
             << " val_pa_mpjpe=" << ser::format_double(report.summary.pa_mpjpe)
             << " val_pve=" << ser::format_double(report.summary.pve)
             << " val_accel=" << ser::format_double(report.summary.accel);
        history.push_back(line.str());
        if (log) *log << history.back() << '\n';
    }

    out.checkpoint = make_checkpoint(cfg, store, adam, cfg.training.epochs, std::move(history));
    return out;
}

// --- evaluation -------------------------------------------------------------------

namespace {

std::vector<double> vertices_of(const BodyModel& model, const std::vector<ThetaSet>& thetas) {
    NoGradGuard no_grad;
    std::vector<double> out(thetas.size() * model.n_vertices * 3);
    for (std::size_t t = 0; t < thetas.size(); ++t) {
        const MeshResult mesh =
            posed_mesh(model, Tensor::constant({kShapeDim}, thetas[t].shape),
                       Tensor::constant({kPoseDim}, thetas[t].pose));
        std::copy(mesh.vertices.values().begin(), mesh.vertices.values().end(),
                  out.begin() + t * model.n_vertices * 3);
    }
    return out;
}

std::vector<double> joints_of(const BodyModel& model, const std::vector<ThetaSet>& thetas) {
    NoGradGuard no_grad;
    std::vector<double> out(thetas.size() * kNumJoints * 3);
    for (std::size_t t = 0; t < thetas.size(); ++t) {
        Tensor rest_verts =
            shape_vertices(model, Tensor::constant({kShapeDim}, thetas[t].shape));
        JointTransforms fk =
            forward_kinematics(model, Tensor::constant({kPoseDim}, thetas[t].pose),
                               rest_joints(model, rest_verts));
        std::copy(fk.posed_joints.values().begin(), fk.posed_joints.values().end(),
                  out.begin() + t * kNumJoints * 3);
    }
    return out;
}

} // namespace

MetricsReport evaluate(const BodyModel& model, const Predictor& predict,
                       const std::vector<SequenceBatch>& sequences, double fps,
                       const std::string& variant_name, const std::string& dataset_name) {
    if (sequences.empty()) throw DataError("evaluate: no sequences");
    MetricsReport report;
    report.sequences.resize(sequences.size());
    parallel_for(sequences.size(), [&](std::size_t i) {
        const SequenceBatch& seq = sequences[i];
        const std::vector<ThetaSet> pred_theta = predict(seq);
        if (pred_theta.size() != seq.frames)
            throw NumericError("evaluate: predictor returned " +
                               std::to_string(pred_theta.size()) + " frames, expected " +
                               std::to_string(seq.frames));
        const std::vector<double> pred_joints = joints_of(model, pred_theta);
        const std::vector<double> pred_verts = vertices_of(model, pred_theta);
        const std::vector<double> gt_verts =
            seq.gt_vertices ? *seq.gt_vertices : vertices_of(model, seq.gt_theta);

        MetricsRow& row = report.sequences[i];
        row.variant = variant_name;
        row.dataset = dataset_name + "/" + std::to_string(i);
        row.mpjpe = mpjpe_mm(pred_joints, seq.gt_joints3d, seq.frames, kNumJoints);
        row.pa_mpjpe = pa_mpjpe_mm(pred_joints, seq.gt_joints3d, seq.frames, kNumJoints);
        row.pve = pve_mm(pred_verts, gt_verts, seq.frames, model.n_vertices);
        row.accel = accel_error_mm_s2(pred_joints, seq.gt_joints3d, seq.frames, kNumJoints, fps);
    });
    report.summary.variant = variant_name;
    report.summary.dataset = dataset_name + "/mean";
    for (const auto& row : report.sequences) {
        report.summary.mpjpe += row.mpjpe;
        report.summary.pa_mpjpe += row.pa_mpjpe;
        report.summary.pve += row.pve;
        report.summary.accel += row.accel;
    }
    const double inv = 1.0 / static_cast<double>(report.sequences.size());
    report.summary.mpjpe *= inv;
    report.summary.pa_mpjpe *= inv;
    report.summary.pve *= inv;
    report.summary.accel *= inv;
    return report;
}

Predictor estimator_predictor(LmrEstimator est) {
    return [est = std::move(est)](const SequenceBatch& seq) {
        NoGradGuard no_grad;
        const auto features = seq.feature_tensors();
        const FramePrediction pred = est.forward(features);
        std::vector<ThetaSet> out;
        out.reserve(seq.frames);
        for (const auto& f : pred.final_frames()) out.push_back(f.to_theta_set());
        return out;
    };
}

Predictor checkpoint_predictor(const Checkpoint& ckpt, ParamStore& store) {
    const ExperimentConfig cfg = ExperimentConfig::from_json(ckpt.config_json);
    LmrEstimator est = LmrEstimator::create(store, cfg.estimator_config(), cfg.model.scheme,
                                            cfg.training.init_seed);
    if (ckpt.param_names != store.names())
        throw DataError("checkpoint parameters do not match its configuration");
    store.assign_values(ckpt.param_values);
    return estimator_predictor(std::move(est));
}

Predictor oracle_predictor() {
    return [](const SequenceBatch& seq) { return seq.gt_theta; };
}

std::string AblationTable::to_csv() const {
    std::ostringstream os;
    os << "variant,mpjpe,pa_mpjpe,pve,accel\n";
    for (const auto& r : rows)
        os << r.variant << ',' << ser::format_double(r.mpjpe) << ','
           << ser::format_double(r.pa_mpjpe) << ',' << ser::format_double(r.pve) << ','
           << ser::format_double(r.accel) << '\n';
    return os.str();
}

AblationTable ablation_run(const ExperimentConfig& base_cfg, const BodyModel& model,
                           const Dataset& data, const std::filesystem::path& out_dir,
                           std::ostream* progress) {
    std::filesystem::create_directories(out_dir);
    AblationTable table;
    for (Variant variant : {Variant::single_rnn, Variant::lmr_no_root, Variant::lmr}) {
        ExperimentConfig cfg = base_cfg;
        cfg.model.variant = variant;
        if (progress) *progress << "training variant " << to_string(variant) << "\n";
        std::ofstream log(out_dir / (to_string(variant) + "_log.txt"));
        TrainOutput out = train(cfg, model, data, log ? &log : nullptr);
        save_checkpoint(out.checkpoint, out_dir / (to_string(variant) + "_checkpoint.txt"));

        ParamStore store;
        Predictor pred = checkpoint_predictor(out.checkpoint, store);
        MetricsReport report =
            evaluate(model, pred, data.val, cfg.metrics.fps, to_string(variant), "val");
        report.write_csv(out_dir / (to_string(variant) + "_metrics.csv"));
        MetricsRow row = report.summary;
        row.dataset = "val";
        table.rows.push_back(row);
        if (progress)
            *progress << to_string(variant) << ": mpjpe=" << row.mpjpe
                      << " pa=" << row.pa_mpjpe << " pve=" << row.pve
                      << " accel=" << row.accel << "\n";
    }
    std::ofstream csv(out_dir / "ablation.csv");
    if (!csv) throw IoError("cannot open for writing: " + (out_dir / "ablation.csv").string());
    csv << table.to_csv();
    return table;
}

} // namespace lmr
