#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advbench/bundle.hpp"
#include "advbench/config_json.hpp"
#include "advbench/dataset_io.hpp"
#include "advbench/errors.hpp"
#include "advbench/harness.hpp"
#include "advbench/oracle.hpp"
#include "advbench/synthetic.hpp"
#include "advbench/training.hpp"

namespace fs = std::filesystem;
using namespace advbench;

namespace {

nlohmann::json parse_params(const std::string& text) {
  if (text.empty()) return nlohmann::json::object();
  try {
    if (fs::exists(text)) return nlohmann::json::parse(read_text(text));
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cannot parse --params: ") + e.what());
  }
}

std::string relative_or_absolute(const fs::path& target, const fs::path& dir) {
  return fs::relative(fs::absolute(target), fs::absolute(dir)).generic_string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted white-box adversarial attack benchmark"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every (group, attack) cell of a benchmark config");
  run->add_option("--config", config_path, "Benchmark config (JSON)")->required()->check(CLI::ExistingFile);

  // attack
  std::string attack_name, params_text, suite_path, dataset_path, epsilon_text = "8/255", out_path, format = "json";
  std::uint64_t backward = 100, forward = 200, seed = 0;
  unsigned workers = 1;
  bool strict = false, save_adv = false;
  auto* attack = app.add_subcommand("attack", "Score one attack against a defense suite");
  attack->add_option("--attack", attack_name, "Pipeline name")->required();
  attack->add_option("--params", params_text, "Pipeline parameters: JSON text or a JSON file");
  attack->add_option("--suite", suite_path, "Suite manifest")->required()->check(CLI::ExistingFile);
  attack->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);
  attack->add_option("--epsilon", epsilon_text, "Radius, p/q or decimal");
  attack->add_option("--backward-budget", backward, "Average backward passes per image");
  attack->add_option("--forward-budget", forward, "Average forward passes per image");
  attack->add_option("--seed", seed, "Global seed");
  attack->add_option("--workers", workers, "Per-sample worker threads");
  attack->add_flag("--strict", strict, "Abort when a sample exceeds its allocation");
  attack->add_flag("--save-adversarial", save_adv, "Store the scored examples next to the report");
  attack->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));
  attack->add_option("--out", out_path, "Report path")->required();

  // train-defense
  std::string arch = "mlp", activation = "tanh", bundle_out;
  std::size_t epochs = 50, pgd_steps = 7;
  std::vector<std::size_t> hidden{32};
  double lr = 0.05;
  auto* train = app.add_subcommand("train-defense", "Adversarially train a tiny model");
  train->add_option("--arch", arch, "linear or mlp")->check(CLI::IsMember({"linear", "mlp"}));
  train->add_option("--dataset", dataset_path, "Training set")->required()->check(CLI::ExistingFile);
  train->add_option("--epsilon", epsilon_text, "Training radius (0 for clean training)");
  train->add_option("--seed", seed, "Seed");
  train->add_option("--epochs", epochs, "Epochs");
  train->add_option("--pgd-steps", pgd_steps, "Inner PGD steps");
  train->add_option("--hidden", hidden, "Hidden layer widths (1 or 2 values)");
  train->add_option("--activation", activation, "tanh or relu")->check(CLI::IsMember({"tanh", "relu"}));
  train->add_option("--lr", lr, "Learning rate");
  train->add_option("--out", bundle_out, "Bundle directory")->required();

  // verify
  std::string report_path;
  auto* verify = app.add_subcommand("verify", "Re-check the stored examples of a report");
  verify->add_option("--suite", suite_path, "Suite manifest")->required()->check(CLI::ExistingFile);
  verify->add_option("--report", report_path, "Report (JSON)")->required()->check(CLI::ExistingFile);

  // oracle
  int resolution = 64;
  auto* oracle = app.add_subcommand("oracle", "Ground-truth robustness verdicts for a suite");
  oracle->add_option("--suite", suite_path, "Suite manifest")->required()->check(CLI::ExistingFile);
  oracle->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--epsilon", epsilon_text, "Radius, p/q or decimal");
  oracle->add_option("--resolution", resolution, "Grid points per axis for non-linear models");
  oracle->add_option("--workers", workers, "Worker threads");
  oracle->add_option("--out", out_path, "Verdict file")->required();

  // make-dataset
  BlobSpec blobs;
  auto* make = app.add_subcommand("make-dataset", "Write a synthetic Gaussian-blob dataset");
  make->add_option("--rows", blobs.rows, "Samples");
  make->add_option("--dim", blobs.dim, "Input dimension");
  make->add_option("--classes", blobs.classes, "Classes");
  make->add_option("--spread", blobs.spread, "Cluster standard deviation");
  make->add_option("--separation", blobs.min_separation, "Minimum distance between class centres");
  make->add_option("--seed", blobs.seed, "Seed");
  make->add_option("--out", out_path, "Dataset path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto result = run_benchmark(fs::path(config_path));
      std::cout << render_leaderboard(result.reports);
      std::cout << result.report_files.size() << " report(s) written\n";
    } else if (*attack) {
      const auto cfg = attack_config_from_json(attack_name, parse_params(params_text));
      const auto suite = load_suite(suite_path);
      const auto data = read_dataset(dataset_path);
      const fs::path out(out_path);
      const fs::path out_dir = out.parent_path().empty() ? fs::path(".") : out.parent_path();
      ScoreOptions opt;
      opt.quota = {backward, forward};
      opt.strict = strict;
      opt.seed = seed;
      opt.workers = workers;
      opt.suite_label = relative_or_absolute(suite_path, out_dir);
      opt.dataset_label = relative_or_absolute(dataset_path, out_dir);
      opt.epsilon_text = epsilon_text;
      opt.report_dir = out_dir;
      if (save_adv) opt.adversarial_dir = out_dir / (out.stem().string() + "_adv");
      const auto report = score(suite, data, attack_name, cfg, ThreatModel(parse_epsilon(epsilon_text)), opt);
      emit_report(report, format == "json" ? ReportFormat::structured_json : ReportFormat::plain_table, out);
      std::cout << report_to_text(report, ReportFormat::plain_table);
    } else if (*train) {
      const auto data = read_dataset(dataset_path);
      TrainConfig tc;
      tc.epochs = epochs;
      tc.pgd_steps = pgd_steps;
      tc.epsilon = parse_epsilon(epsilon_text);
      tc.lr = lr;
      tc.seed = seed;
      tc.hidden = hidden;
      tc.activation = activation_from_string(activation);
      const auto model = train_tiny_defense(architecture_from_string(arch), data, tc);
      save_model(model, fs::path(bundle_out));
      std::cout << "clean accuracy " << clean_accuracy(model, data) << "\n";
    } else if (*verify) {
      const auto result = verify_report(load_suite(suite_path), report_path);
      for (const auto& p : result.problems) std::cout << "FAIL " << p << "\n";
      std::cout << (result.ok ? "verified " : "verification failed, checked ") << result.models_checked
                << " model(s)\n";
      return result.ok ? 0 : 1;
    } else if (*oracle) {
      const auto suite = load_suite(suite_path);
      const auto data = read_dataset(dataset_path);
      suite.check_compatible(data);
      const ThreatModel tm(parse_epsilon(epsilon_text));
      nlohmann::json out;
      out["epsilon"] = tm.epsilon;
      out["epsilon_text"] = epsilon_text;
      out["resolution"] = resolution;
      out["models"] = nlohmann::json::array();
      for (std::size_t m = 0; m < suite.size(); ++m) {
        const auto verdicts = oracle_batch(suite.models[m], data, tm, resolution, workers);
        std::size_t attackable = 0;
        for (const auto& v : verdicts) attackable += v.verdict == Verdict::attackable ? 1 : 0;
        out["models"].push_back({{"id", suite.ids[m]}, {"verdicts", verdicts_to_json(verdicts)}});
        std::cout << suite.ids[m] << ": " << attackable << " of " << verdicts.size() << " attackable\n";
      }
      write_text(out_path, out.dump(2) + "\n");
    } else if (*make) {
      const auto data = gaussian_blobs(blobs);
      write_dataset(data, out_path);
      std::cout << "wrote " << data.rows << " samples\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
