#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "advbench/attacks.hpp"
#include "advbench/batch.hpp"
#include "advbench/ledger.hpp"
#include "advbench/model.hpp"
#include "advbench/probe.hpp"
#include "advbench/threat.hpp"
#include "json.hpp"

namespace advbench {

struct SuiteEntry {
  std::string id;
  std::filesystem::path bundle;  // relative to the manifest's directory unless absolute
};

/// Ordered set of defense models scored together.
struct DefenseSuite {
  std::vector<std::string> ids;
  std::vector<Model> models;

  std::size_t size() const { return models.size(); }
  void add(std::string id, Model model);
  /// Throws ConfigError when a model disagrees with the dataset's input
  /// dimension or class count, or the suite is empty.
  void check_compatible(const ImageBatch& batch) const;
};

/// Manifest format: {"models": [{"id": "...", "bundle": "dir"}, ...]}.
std::vector<SuiteEntry> read_suite_manifest(const std::filesystem::path& manifest);
void write_suite_manifest(const std::filesystem::path& manifest, std::span<const SuiteEntry> entries);
DefenseSuite load_suite(const std::filesystem::path& manifest);
/// Writes every model as dir/<id>/ and the manifest as dir/suite.json;
/// returns the manifest path.
std::filesystem::path save_suite(const DefenseSuite& suite, const std::filesystem::path& dir);

struct ModelScore {
  std::string id;
  std::size_t samples = 0;
  std::size_t misclassified = 0;
  double rate = 0.0;
  double percent = 0.0;
  std::size_t succeeded = 0;
  std::size_t filtered = 0;
  std::size_t exhausted = 0;
  UsageReport usage;
  std::vector<PhaseRecord> phases;
  std::vector<std::string> notes;
  std::string adversarial_file;
  std::string flags_file;
};

struct ScoreReport {
  std::string group;
  std::string attack;
  std::string pipeline;
  nlohmann::json config = nlohmann::json::object();
  std::string suite;
  std::string dataset;
  std::string epsilon_text;
  double epsilon = 0.0;
  Quota quota;
  bool strict = false;
  std::uint64_t seed = 0;
  std::vector<ModelScore> models;
  double aggregate = 0.0;
  double aggregate_percent = 0.0;
  double wall_clock_seconds = 0.0;
};

struct ScoreOptions {
  Quota quota;
  bool strict = false;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string group = "default";
  std::string suite_label;
  std::string dataset_label;
  std::string epsilon_text;
  /// When set, scored examples are written here in the dataset format with
  /// a JSON sidecar of per-sample misclassification flags.
  std::filesystem::path adversarial_dir;
  /// File references in the report are made relative to this directory.
  std::filesystem::path report_dir;
};

using AttackFn = std::function<AttackOutcome(const Model&, const ImageBatch&, const ThreatModel&, BudgetLedger&,
                                             std::uint64_t seed, unsigned workers)>;

/// Per-model seed derived from the global seed and the model id.
std::uint64_t model_seed(std::uint64_t seed, const std::string& id);

/// Runs the attack once per model with a fresh ledger, projects and rounds
/// every candidate to float32, and scores it with an unmetered forward
/// pass. The aggregate is the mean of the per-model misclassification
/// rates.
ScoreReport score(const DefenseSuite& suite, const ImageBatch& data, const std::string& attack_name,
                  const AttackConfig& attack, const ThreatModel& tm, const ScoreOptions& options);
ScoreReport score_with(const DefenseSuite& suite, const ImageBatch& data, const std::string& attack_name,
                       const AttackFn& attack, const nlohmann::json& config, const ThreatModel& tm,
                       const ScoreOptions& options);

/// "8/255" or a decimal.
double parse_epsilon(const std::string& text);

enum class ReportFormat { structured_json, plain_table };

nlohmann::json report_to_json(const ScoreReport& report);
ScoreReport report_from_json(const nlohmann::json& j);
std::string report_to_text(const ScoreReport& report, ReportFormat format);
void emit_report(const ScoreReport& report, ReportFormat format, const std::filesystem::path& path);
ScoreReport read_report(const std::filesystem::path& path);

/// Rows are attacks, columns are run groups plus the mean over groups;
/// rows sorted by mean score, highest first. Percentages, 3 decimals.
std::string render_leaderboard(std::span<const ScoreReport> reports);

struct RunGroup {
  std::string name;
  std::filesystem::path suite;
  std::filesystem::path dataset;
  std::string epsilon_text;
  double epsilon = 0.0;
};

struct AttackEntry {
  std::string name;
  std::string pipeline;
  nlohmann::json params = nlohmann::json::object();
  AttackConfig config;
};

struct BenchmarkConfig {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  Quota quota;
  bool strict = false;
  bool save_adversarial = false;
  std::filesystem::path output_dir = "results";
  std::vector<RunGroup> groups;
  std::vector<AttackEntry> attacks;
};

/// Relative paths are resolved against base_dir.
BenchmarkConfig parse_benchmark_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
BenchmarkConfig load_benchmark_config(const std::filesystem::path& path);

struct BenchmarkResult {
  std::vector<ScoreReport> reports;
  std::vector<std::filesystem::path> report_files;
  std::filesystem::path leaderboard;
};

/// Loads every suite and dataset up front, then scores each
/// (group, attack) cell and writes <output>/<group>__<attack>.json plus
/// <output>/leaderboard.txt.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);
BenchmarkResult run_benchmark(const std::filesystem::path& config_path);

struct VerifyResult {
  bool ok = true;
  std::size_t models_checked = 0;
  std::vector<std::string> problems;
};

/// Re-checks the stored adversarial examples of a report: shape, labels,
/// feasibility, and misclassification flags under a fresh forward pass.
VerifyResult verify_report(const DefenseSuite& suite, const std::filesystem::path& report_path);

}  // namespace advbench
