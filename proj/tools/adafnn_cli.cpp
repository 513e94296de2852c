#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adafnn/checkpoint.hpp"
#include "adafnn/dataset_io.hpp"
#include "adafnn/experiment.hpp"
#include "adafnn/metrics.hpp"
#include "adafnn/simgen.hpp"

namespace fs = std::filesystem;
using namespace adafnn;

namespace {

int run_simulate(int case_id, std::uint64_t seed, const std::string& out,
                 std::size_t n_train, std::size_t n_val, std::size_t n_test) {
  SimCaseSpec spec = sim_case_spec(case_id);
  if (n_train != 0) spec.n_train = n_train;
  if (n_val != 0) spec.n_val = n_val;
  if (n_test != 0) spec.n_test = n_test;

  SimulatedCase sim = build_case(spec, seed);
  fs::path dir = resolve_output_dir(out);
  fs::create_directories(dir);
  write_dataset_csv(sim.train, (dir / "train.csv").string());
  write_dataset_csv(sim.val, (dir / "val.csv").string());
  write_dataset_csv(sim.test, (dir / "test.csv").string());

  nlohmann::json meta{
      {"case", spec.case_id},
      {"seed", seed},
      {"sizes",
       {{"train", spec.n_train}, {"val", spec.n_val}, {"test", spec.n_test}}},
      {"grid_intervals", spec.grid_intervals},
      {"snr", spec.snr},
      {"response_noise_sd", spec.response_noise_sd},
      {"measurement_noise_sd", measurement_noise_sd(spec)},
      {"response_scaler", {{"mean", sim.scaler.mean}, {"sd", sim.scaler.sd}}},
  };
  detail::write_json_file((dir / "generation.json").string(), meta);
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int run_train(const std::string& config_path, CLI::App* cmd, int sim_case,
              const std::string& csv, const std::string& output_dir,
              const std::vector<std::uint64_t>& seeds,
              const std::string& preset, std::size_t num_bases,
              const std::string& rule, std::size_t epochs,
              std::size_t patience, std::size_t batch_size,
              double learning_rate, const std::string& optimizer) {
  nlohmann::json doc;
  try {
    doc = detail::read_json_file(config_path);
  } catch (const data_error& e) {
    throw config_error(e.what());
  }

  // Flags override the file's values before the merged document is parsed
  // and validated as a whole.
  if (cmd->count("--case")) {
    doc["source"].erase("csv");
    doc["source"]["case"] = sim_case;
  }
  if (cmd->count("--csv")) {
    doc["source"].erase("case");
    doc["source"]["csv"] = csv;
  }
  if (cmd->count("--output-dir")) doc["output_dir"] = output_dir;
  if (cmd->count("--seeds")) doc["seeds"] = seeds;
  if (cmd->count("--preset")) doc["preset"] = preset;
  if (cmd->count("--num-bases")) doc["num_bases"] = num_bases;
  if (cmd->count("--rule")) doc["rule"] = rule;
  if (cmd->count("--epochs")) doc["train"]["max_epochs"] = epochs;
  if (cmd->count("--patience")) doc["train"]["patience"] = patience;
  if (cmd->count("--batch-size")) doc["train"]["batch_size"] = batch_size;
  if (cmd->count("--learning-rate")) {
    doc["train"]["learning_rate"] = learning_rate;
  }
  if (cmd->count("--optimizer")) doc["train"]["optimizer"] = optimizer;

  ExperimentConfig cfg = parse_experiment_config(doc);
  ExperimentSummary summary = run_experiment(cfg);

  std::size_t failed = 0;
  for (const RunResult& r : summary.runs) failed += r.failed ? 1 : 0;
  std::printf("%s", summarize_results(summary.runs).c_str());
  std::printf("experiment directory: %s\n", summary.dir.string().c_str());
  if (failed > 0) {
    std::fprintf(stderr, "%zu of %zu runs failed; see %s\n", failed,
                 summary.runs.size(),
                 (summary.dir / "errors.log").string().c_str());
    if (failed == summary.runs.size()) {
      throw train_error("every run failed");
    }
  }
  return 0;
}

int run_evaluate(const std::string& checkpoint_path,
                 const std::string& data_path) {
  LoadedCheckpoint model = load_checkpoint(checkpoint_path);
  FunctionalDataset data = read_dataset_csv(data_path, model.task);
  double metric =
      evaluate_metric(model.task, model.predict(data), data.responses());
  std::printf("%s %s\n",
              model.task == Task::regression ? "mse" : "one_minus_auc",
              format_double(metric).c_str());
  return 0;
}

int run_report(const std::string& dir) {
  fs::path results = fs::path(dir) / "results.csv";
  std::vector<RunResult> rows = read_results_csv(results.string());
  if (rows.empty()) throw data_error("'" + results.string() + "' has no rows");
  std::printf("%s", summarize_results(rows).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional data learning with adaptive bases"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "Generate one simulation case as CSV files");
  int sim_case = 1;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  std::size_t sim_train = 0, sim_val = 0, sim_test = 0;
  sim->add_option("--case", sim_case, "Simulation case, 1 through 5")
      ->required();
  sim->add_option("--seed", sim_seed, "Generator seed")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--train", sim_train, "Training samples (default per case)");
  sim->add_option("--val", sim_val, "Validation samples");
  sim->add_option("--test", sim_test, "Test samples");

  // train
  auto* train_cmd =
      app.add_subcommand("train", "Run the experiment in a config file");
  std::string config_path, train_csv, train_output, train_preset, train_rule;
  std::string train_optimizer;
  int train_case = 0;
  std::vector<std::uint64_t> train_seeds;
  std::size_t train_bases = 0, train_epochs = 0, train_patience = 0;
  std::size_t train_batch = 0;
  double train_lr = 0.0;
  train_cmd->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  auto* case_opt =
      train_cmd->add_option("--case", train_case, "Override: simulation case");
  train_cmd->add_option("--csv", train_csv, "Override: CSV data source")
      ->excludes(case_opt);
  train_cmd->add_option("--output-dir", train_output,
                        "Override: output directory");
  train_cmd->add_option("--seeds", train_seeds, "Override: replication seeds")
      ->delimiter(',');
  train_cmd->add_option("--preset", train_preset,
                        "Override: head preset (large | small)");
  train_cmd->add_option("--num-bases", train_bases,
                        "Override: number of learned bases");
  train_cmd->add_option("--rule", train_rule,
                        "Override: quadrature rule (trapezoid | rectangle)");
  train_cmd->add_option("--epochs", train_epochs, "Override: epoch cap");
  train_cmd->add_option("--patience", train_patience,
                        "Override: early stopping patience");
  train_cmd->add_option("--batch-size", train_batch, "Override: batch size");
  train_cmd->add_option("--learning-rate", train_lr,
                        "Override: learning rate");
  train_cmd->add_option("--optimizer", train_optimizer,
                        "Override: adam | decay_sgd");

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Score a checkpoint on a dataset CSV");
  std::string eval_checkpoint, eval_data;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint.json path")
      ->required();
  eval_cmd->add_option("--data", eval_data, "Dataset CSV")->required();

  // plot
  auto* plot_cmd =
      app.add_subcommand("plot", "Render a basis dump as an SVG plot");
  std::string plot_dump, plot_overlay, plot_out, plot_title;
  plot_cmd->add_option("--dump", plot_dump, "Basis dump CSV")->required();
  plot_cmd->add_option("--overlay", plot_overlay,
                       "Reference curves CSV (same layout)");
  plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();
  plot_cmd->add_option("--title", plot_title, "Plot title");

  // report
  auto* report_cmd =
      app.add_subcommand("report", "Summarize an experiment directory");
  std::string report_dir;
  report_cmd->add_option("--dir", report_dir, "Experiment directory")
      ->required();

  try {
    app.parse(argc, argv);
    if (sim->parsed()) {
      return run_simulate(sim_case, sim_seed, sim_out, sim_train, sim_val,
                          sim_test);
    }
    if (train_cmd->parsed()) {
      return run_train(config_path, train_cmd, train_case, train_csv,
                       train_output, train_seeds, train_preset, train_bases,
                       train_rule, train_epochs, train_patience, train_batch,
                       train_lr, train_optimizer);
    }
    if (eval_cmd->parsed()) return run_evaluate(eval_checkpoint, eval_data);
    if (plot_cmd->parsed()) {
      plot_bases(plot_dump, plot_overlay, plot_out, plot_title);
      std::printf("wrote %s\n", plot_out.c_str());
      return 0;
    }
    if (report_cmd->parsed()) return run_report(report_dir);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const train_error& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
