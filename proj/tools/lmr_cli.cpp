#include "lmr/body_model.hpp"
#include "lmr/config.hpp"
#include "lmr/errors.hpp"
#include "lmr/serialize.hpp"
#include "lmr/synth.hpp"
#include "lmr/train.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw lmr::IoError("cannot open for writing: " + path.string());
    os << text;
    os.flush();
    if (!os) throw lmr::IoError("write failed: " + path.string());
}

void cmd_gen_data(const std::string& config_path, const std::string& out_dir, bool force) {
    const auto cfg = lmr::ExperimentConfig::from_file(config_path);
    const lmr::BodyModel model =
        lmr::build_synthetic_model(cfg.model.body_seed, cfg.model.body_vertices);
    const lmr::Dataset dataset =
        lmr::make_dataset(model, cfg.model.scheme, cfg.dataset_config());
    lmr::save_dataset(out_dir, model, dataset, cfg.to_json(), force);
    std::cout << "wrote " << dataset.train.size() << " train + " << dataset.val.size()
              << " val sequences to " << out_dir << "\n";
}

lmr::LoadedDataset load_and_check(const std::string& data_dir,
                                  const lmr::ExperimentConfig& cfg) {
    lmr::LoadedDataset loaded = lmr::load_dataset(data_dir);
    if (loaded.feature_dim != cfg.data.feature_dim)
        throw lmr::ConfigError("config expects feature_dim " +
                               std::to_string(cfg.data.feature_dim) + ", dataset has " +
                               std::to_string(loaded.feature_dim));
    if (loaded.frames != static_cast<std::size_t>(cfg.data.frames))
        throw lmr::ConfigError("config expects " + std::to_string(cfg.data.frames) +
                               " frames, dataset has " + std::to_string(loaded.frames));
    return loaded;
}

void cmd_train(const std::string& config_path, const std::string& data_dir,
               const std::string& out_dir, const std::string& resume_path) {
    const auto cfg = lmr::ExperimentConfig::from_file(config_path);
    lmr::LoadedDataset loaded = load_and_check(data_dir, cfg);
    fs::create_directories(out_dir);

    std::optional<lmr::Checkpoint> resume;
    if (!resume_path.empty()) resume = lmr::load_checkpoint(resume_path);

    std::ofstream log(fs::path(out_dir) / "train_log.txt");
    if (!log) throw lmr::IoError("cannot open log in " + out_dir);
    lmr::TrainOutput out = lmr::train(cfg, loaded.model, loaded.data, &log,
                                      resume ? &*resume : nullptr);
    lmr::save_checkpoint(out.checkpoint, fs::path(out_dir) / "checkpoint.txt");
    write_text(fs::path(out_dir) / "config.json", cfg.to_json() + "\n");
    std::cout << "checkpoint written to " << (fs::path(out_dir) / "checkpoint.txt") << "\n";
}

void cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
              const std::string& report_path, bool oracle) {
    lmr::LoadedDataset loaded = lmr::load_dataset(data_dir);
    lmr::Predictor predict;
    std::string variant = "oracle";
    lmr::ParamStore store;
    std::string config_echo;
    if (oracle) {
        predict = lmr::oracle_predictor();
        config_echo = loaded.config_echo_json;
    } else {
        if (ckpt_path.empty())
            throw lmr::ConfigError("eval needs --checkpoint (or --oracle)");
        const lmr::Checkpoint ckpt = lmr::load_checkpoint(ckpt_path);
        const auto cfg = lmr::ExperimentConfig::from_json(ckpt.config_json);
        if (loaded.feature_dim != cfg.data.feature_dim)
            throw lmr::DataError("checkpoint feature_dim " +
                                 std::to_string(cfg.data.feature_dim) +
                                 " does not match dataset feature_dim " +
                                 std::to_string(loaded.feature_dim));
        variant = to_string(cfg.model.variant);
        predict = lmr::checkpoint_predictor(ckpt, store);
        config_echo = ckpt.config_json;
    }
    const double fps = loaded.fps;
    lmr::MetricsReport report =
        lmr::evaluate(loaded.model, predict, loaded.data.val, fps, variant, "val");
    report.write_csv(report_path);
    write_text(report_path + ".config.json", config_echo + "\n");
    std::cout << report.to_csv();
}

void cmd_ablate(const std::string& config_path, const std::string& data_dir,
                const std::string& out_dir) {
    const auto cfg = lmr::ExperimentConfig::from_file(config_path);
    lmr::LoadedDataset loaded = load_and_check(data_dir, cfg);
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "config.json", cfg.to_json() + "\n");
    lmr::AblationTable table =
        lmr::ablation_run(cfg, loaded.model, loaded.data, out_dir, &std::cout);
    std::cout << table.to_csv();
}

void cmd_export_mesh(const std::string& ckpt_path, const std::string& data_dir,
                     std::size_t seq_index, std::size_t frame, const std::string& out_path) {
    lmr::LoadedDataset loaded = lmr::load_dataset(data_dir);
    const lmr::Checkpoint ckpt = lmr::load_checkpoint(ckpt_path);
    lmr::ParamStore store;
    lmr::Predictor predict = lmr::checkpoint_predictor(ckpt, store);
    if (seq_index >= loaded.data.val.size())
        throw lmr::DataError("sequence index " + std::to_string(seq_index) +
                             " out of range (val split has " +
                             std::to_string(loaded.data.val.size()) + " sequences)");
    const lmr::SequenceBatch& seq = loaded.data.val[seq_index];
    if (frame >= seq.frames)
        throw lmr::DataError("frame " + std::to_string(frame) + " out of range (sequence has " +
                             std::to_string(seq.frames) + " frames)");
    const std::vector<lmr::ThetaSet> thetas = predict(seq);
    const lmr::ThetaSet& theta = thetas[frame];

    lmr::NoGradGuard no_grad;
    const lmr::MeshResult mesh =
        lmr::posed_mesh(loaded.model, lmr::Tensor::constant({lmr::kShapeDim}, theta.shape),
                        lmr::Tensor::constant({lmr::kPoseDim}, theta.pose));
    lmr::export_obj(mesh, loaded.model, out_path);

    std::string sidecar;
    const auto flat = theta.flat();
    for (std::size_t i = 0; i < flat.size(); ++i)
        sidecar += lmr::ser::format_double(flat[i]) + (i + 1 == flat.size() ? "\n" : " ");
    write_text(out_path + ".theta.txt", sidecar);
    std::cout << "wrote " << out_path << " and " << out_path << ".theta.txt\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LMR: local recurrent models for video human mesh recovery (synthetic desk-scale harness)"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, ckpt_path, report_path, resume_path;
    bool force = false, oracle = false;
    std::size_t seq_index = 0, frame = 0;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen->add_option("--config", config_path, "Experiment config JSON")->required();
    gen->add_option("--out", out_dir, "Output dataset directory")->required();
    gen->add_flag("--force", force, "Overwrite a non-empty output directory");

    auto* train = app.add_subcommand("train", "Train one variant");
    train->add_option("--config", config_path, "Experiment config JSON")->required();
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--out", out_dir, "Output directory")->required();
    train->add_option("--resume", resume_path, "Checkpoint to resume from");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the val split");
    eval->add_option("--checkpoint", ckpt_path, "Checkpoint file");
    eval->add_option("--data", data_dir, "Dataset directory")->required();
    eval->add_option("--report", report_path, "Metrics CSV output")->required();
    eval->add_flag("--oracle", oracle, "Score the ground-truth passthrough predictor");

    auto* ablate = app.add_subcommand("ablate", "Train and compare all three variants");
    ablate->add_option("--config", config_path, "Experiment config JSON")->required();
    ablate->add_option("--data", data_dir, "Dataset directory")->required();
    ablate->add_option("--out", out_dir, "Output directory")->required();

    auto* exp = app.add_subcommand("export-mesh", "Export one predicted frame as OBJ");
    exp->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    exp->add_option("--data", data_dir, "Dataset directory")->required();
    exp->add_option("--seq", seq_index, "Val sequence index")->required();
    exp->add_option("--frame", frame, "Frame index")->required();
    exp->add_option("--out", out_dir, "Output OBJ path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) cmd_gen_data(config_path, out_dir, force);
        else if (train->parsed()) cmd_train(config_path, data_dir, out_dir, resume_path);
        else if (eval->parsed()) cmd_eval(ckpt_path, data_dir, report_path, oracle);
        else if (ablate->parsed()) cmd_ablate(config_path, data_dir, out_dir);
        else if (exp->parsed()) cmd_export_mesh(ckpt_path, data_dir, seq_index, frame, out_dir);
    } catch (const lmr::ConfigError& e) {
        std::cerr << "E_CONFIG: " << e.what() << "\n";
        return kExitConfig;
    } catch (const lmr::DataError& e) {
        std::cerr << "E_DATA: " << e.what() << "\n";
        return kExitData;
    } catch (const lmr::IoError& e) {
        std::cerr << "E_DATA: " << e.what() << "\n";
        return kExitData;
    } catch (const lmr::NumericError& e) {
        std::cerr << "E_NUMERIC: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
