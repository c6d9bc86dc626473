#pragma once

#include "lmr/config.hpp"
#include "lmr/estimator.hpp"
#include "lmr/metrics.hpp"
#include "lmr/objectives.hpp"
#include "lmr/synth.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmr {

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;

    void init_like(const ParamStore& store);
    bool initialized() const { return !m.empty(); }
};

// Standard Adam with bias correction; reads the accumulated gradients from
// the store and updates parameter values in place.
void adam_step(ParamStore& store, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

inline constexpr const char* kCheckpointMagic = "lmr-ckpt-v1";

struct Checkpoint {
    std::string config_json; // resolved experiment config
    int epoch = 0;
    std::vector<std::string> param_names;
    std::vector<std::vector<std::size_t>> param_shapes;
    std::vector<std::vector<double>> param_values;
    AdamState adam;
    std::vector<std::string> history; // one line per epoch of val metrics
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Eq-style training loss of one sequence (final refinement iteration unless
// supervise_all_iters): weighted parameter, 3D-joint and projected-2D terms.
struct SequenceLoss {
    Tensor total;
    double smpl = 0.0, j3d = 0.0, j2d = 0.0;
};

SequenceLoss sequence_loss(const BodyModel& model, const FramePrediction& pred,
                           const SequenceBatch& batch, const LossWeights& weights,
                           bool supervise_all_iters);

struct TrainOutput {
    Checkpoint checkpoint;
    std::vector<std::string> log_lines; // per-step records
    double first_epoch_mean_loss = 0.0;
    double last_epoch_mean_loss = 0.0;
};

// Deterministic end to end: shuffling is a pure function of (init_seed,
// epoch), batches are accumulated sequence by sequence in order. Pass a
// checkpoint to resume; the continuation reproduces an uninterrupted run.
TrainOutput train(const ExperimentConfig& cfg, const BodyModel& model, const Dataset& data,
                  std::ostream* log = nullptr, const Checkpoint* resume_from = nullptr);

using Predictor = std::function<std::vector<ThetaSet>(const SequenceBatch&)>;

// Runs the predictor over every sequence and scores it against ground truth.
// Vertices for PVE are produced through the body model on both sides.
MetricsReport evaluate(const BodyModel& model, const Predictor& predict,
                       const std::vector<SequenceBatch>& sequences, double fps,
                       const std::string& variant_name, const std::string& dataset_name);

Predictor estimator_predictor(LmrEstimator est);
Predictor checkpoint_predictor(const Checkpoint& ckpt, ParamStore& store);
// Ground-truth passthrough; a perfect predictor scores zero on every metric.
Predictor oracle_predictor();

struct AblationTable {
    std::vector<MetricsRow> rows; // single_rnn, lmr_no_root, lmr
    std::string to_csv() const;
};

// Trains all three variants with identical data, seeds and budgets.
AblationTable ablation_run(const ExperimentConfig& base_cfg, const BodyModel& model,
                           const Dataset& data, const std::filesystem::path& out_dir,
                           std::ostream* progress = nullptr);

} // namespace lmr
