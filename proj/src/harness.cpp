#include "advbench/harness.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <set>

#include "advbench/bundle.hpp"
#include "advbench/dataset_io.hpp"
#include "advbench/config_json.hpp"
#include "advbench/errors.hpp"
#include "advbench/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace advbench {

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::string reference(const fs::path& target, const fs::path& report_dir) {
  if (report_dir.empty()) return target.generic_string();
  return fs::relative(target, report_dir).generic_string();
}

std::string safe_name(const std::string& s) {
  std::string out = s;
  for (auto& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return out;
}

json parse_json_file(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

}  // namespace

void DefenseSuite::add(std::string id, Model model) {
  ids.push_back(std::move(id));
  models.push_back(std::move(model));
}

void DefenseSuite::check_compatible(const ImageBatch& batch) const {
  if (models.empty()) throw ConfigError("defense suite is empty");
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (models[m].input_dim() != batch.dim || models[m].num_classes() != batch.num_classes) {
      throw ConfigError("model '" + ids[m] + "' expects " + std::to_string(models[m].input_dim()) + " inputs and " +
                        std::to_string(models[m].num_classes()) + " classes; dataset has " +
                        std::to_string(batch.dim) + " and " + std::to_string(batch.num_classes));
    }
  }
}

std::vector<SuiteEntry> read_suite_manifest(const fs::path& manifest) {
  const json j = parse_json_file(manifest);
  std::vector<SuiteEntry> out;
  try {
    for (const auto& e : j.at("models")) {
      out.push_back({e.at("id").get<std::string>(), fs::path(e.at("bundle").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw LoadError(manifest.string() + ": " + e.what());
  }
  return out;
}

void write_suite_manifest(const fs::path& manifest, std::span<const SuiteEntry> entries) {
  json arr = json::array();
  for (const auto& e : entries) arr.push_back({{"id", e.id}, {"bundle", e.bundle.generic_string()}});
  write_text(manifest, json{{"models", arr}}.dump(2) + "\n");
}

DefenseSuite load_suite(const fs::path& manifest) {
  DefenseSuite suite;
  const auto base = manifest.parent_path();
  for (const auto& e : read_suite_manifest(manifest)) suite.add(e.id, load_model(resolve(base, e.bundle)));
  return suite;
}

fs::path save_suite(const DefenseSuite& suite, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<SuiteEntry> entries;
  std::set<std::string> used;
  for (std::size_t m = 0; m < suite.size(); ++m) {
    std::string sub = safe_name(suite.ids[m]);
    while (!used.insert(sub).second) sub += "_";
    save_model(suite.models[m], dir / sub);
    entries.push_back({suite.ids[m], sub});
  }
  const auto manifest = dir / "suite.json";
  write_suite_manifest(manifest, entries);
  return manifest;
}

std::uint64_t model_seed(std::uint64_t seed, const std::string& id) { return splitmix64(seed ^ hash_string(id)); }

double parse_epsilon(const std::string& text) {
  try {
    std::size_t used = 0;
    const auto slash = text.find('/');
    double value = 0.0;
    if (slash == std::string::npos) {
      value = std::stod(text, &used);
      if (used != text.size()) throw ConfigError("");
    } else {
      const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
      const double p = std::stod(num, &used);
      if (used != num.size()) throw ConfigError("");
      const double q = std::stod(den, &used);
      if (used != den.size() || q == 0.0) throw ConfigError("");
      value = p / q;
    }
    if (!std::isfinite(value) || value < 0.0) throw ConfigError("");
    return value;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse epsilon '" + text + "'");
  }
}

ScoreReport score(const DefenseSuite& suite, const ImageBatch& data, const std::string& attack_name,
                  const AttackConfig& attack, const ThreatModel& tm, const ScoreOptions& options) {
  validate(attack, options.quota, options.strict);
  AttackFn fn = [&attack](const Model& m, const ImageBatch& b, const ThreatModel& t, BudgetLedger& l,
                          std::uint64_t seed, unsigned workers) { return run_attack(attack, m, b, t, l, seed, workers); };
  auto report = score_with(suite, data, attack_name, fn, attack_config_to_json(attack), tm, options);
  report.pipeline = pipeline_name(attack);
  return report;
}

ScoreReport score_with(const DefenseSuite& suite, const ImageBatch& data, const std::string& attack_name,
                       const AttackFn& attack, const json& config, const ThreatModel& tm,
                       const ScoreOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  if (data.empty()) throw ConfigError("dataset is empty");
  data.validate();
  suite.check_compatible(data);
  ScoreReport report;
  report.group = options.group;
  report.attack = attack_name;
  report.pipeline = attack_name;
  report.config = config;
  report.suite = options.suite_label;
  report.dataset = options.dataset_label;
  report.epsilon = tm.epsilon;
  report.epsilon_text = options.epsilon_text.empty() ? std::to_string(tm.epsilon) : options.epsilon_text;
  report.quota = options.quota;
  report.strict = options.strict;
  report.seed = options.seed;

  double rate_sum = 0.0;
  for (std::size_t m = 0; m < suite.size(); ++m) {
    const auto& model = suite.models[m];
    const auto& id = suite.ids[m];
    BudgetLedger ledger(data.rows, options.quota, options.strict);
    AttackOutcome outcome;
    try {
      outcome = attack(model, data, tm, ledger, model_seed(options.seed, id), options.workers);
      ledger.check_quota();
    } catch (const BudgetExceeded& e) {
      throw BudgetExceeded(e.phase(), "attack '" + attack_name + "' on model '" + id + "': " + e.what());
    }
    if (outcome.candidates.size() != data.rows * data.dim) {
      throw ConfigError("attack '" + attack_name + "' returned the wrong number of candidates");
    }
    auto scored = project_batch(outcome.candidates, data, tm);
    for (auto& v : scored) v = static_cast<double>(static_cast<float>(v));

    ModelScore ms;
    ms.id = id;
    ms.samples = data.rows;
    std::vector<bool> flags(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) {
      const auto z = model.logits(std::span<const double>(scored.data() + i * data.dim, data.dim));
      flags[i] = misclassified(z, data.labels[i]);
      ms.misclassified += flags[i] ? 1 : 0;
    }
    ms.rate = static_cast<double>(ms.misclassified) / static_cast<double>(data.rows);
    ms.percent = 100.0 * ms.rate;
    ms.succeeded = outcome.count(SampleStatus::succeeded);
    ms.filtered = outcome.count(SampleStatus::filtered_robust);
    ms.exhausted = outcome.count(SampleStatus::exhausted);
    ms.usage = outcome.usage;
    ms.phases = outcome.phases;
    ms.notes = outcome.notes;

    if (!options.adversarial_dir.empty()) {
      fs::create_directories(options.adversarial_dir);
      const std::string stem = safe_name(attack_name) + "__" + std::to_string(m) + "_" + safe_name(id);
      const auto adv_path = options.adversarial_dir / (stem + ".adset");
      const auto flag_path = options.adversarial_dir / (stem + ".flags.json");
      ImageBatch adv = data;
      adv.data = scored;
      write_dataset(adv, adv_path);
      json side;
      side["model"] = id;
      side["attack"] = attack_name;
      side["misclassified"] = flags;
      write_text(flag_path, side.dump() + "\n");
      ms.adversarial_file = reference(adv_path, options.report_dir);
      ms.flags_file = reference(flag_path, options.report_dir);
    }
    rate_sum += ms.rate;
    report.models.push_back(std::move(ms));
  }
  report.aggregate = rate_sum / static_cast<double>(suite.size());
  report.aggregate_percent = 100.0 * report.aggregate;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

BenchmarkConfig parse_benchmark_config(const json& j, const fs::path& base_dir) {
  BenchmarkConfig cfg;
  try {
    if (!j.is_object()) throw ConfigError("benchmark config must be a JSON object");
    for (const auto& [k, v] : j.items()) {
      static const std::set<std::string> known{"seed", "workers", "quota", "strict", "save_adversarial",
                                               "output_dir", "groups", "attacks"};
      if (!known.count(k)) throw ConfigError("unknown benchmark key '" + k + "'");
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.workers = j.value("workers", 1u);
    cfg.strict = j.value("strict", false);
    cfg.save_adversarial = j.value("save_adversarial", false);
    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("results")));
    if (j.contains("quota")) {
      const auto& q = j.at("quota");
      cfg.quota.backward = q.value("backward", cfg.quota.backward);
      cfg.quota.forward = q.value("forward", cfg.quota.forward);
    }
    std::set<std::string> names;
    for (const auto& g : j.value("groups", json::array())) {
      RunGroup rg;
      rg.name = g.at("name").get<std::string>();
      if (!names.insert("group:" + rg.name).second) throw ConfigError("duplicate group '" + rg.name + "'");
      rg.suite = resolve(base_dir, g.at("suite").get<std::string>());
      rg.dataset = resolve(base_dir, g.at("dataset").get<std::string>());
      const auto& e = g.at("epsilon");
      rg.epsilon_text = e.is_string() ? e.get<std::string>() : e.dump();
      rg.epsilon = e.is_string() ? parse_epsilon(rg.epsilon_text) : e.get<double>();
      cfg.groups.push_back(std::move(rg));
    }
    for (const auto& a : j.value("attacks", json::array())) {
      AttackEntry ae;
      ae.pipeline = a.at("pipeline").get<std::string>();
      ae.name = a.value("name", ae.pipeline);
      if (!names.insert("attack:" + ae.name).second) throw ConfigError("duplicate attack '" + ae.name + "'");
      ae.params = a.value("params", json::object());
      ae.config = attack_config_from_json(ae.pipeline, ae.params);
      cfg.attacks.push_back(std::move(ae));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed benchmark config: ") + e.what());
  }
  return cfg;
}

BenchmarkConfig load_benchmark_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_benchmark_config(j, path.parent_path());
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
  // Pre-flight: everything is loaded and checked before the first attack.
  struct Loaded {
    DefenseSuite suite;
    ImageBatch data;
  };
  std::vector<Loaded> loaded;
  for (const auto& g : config.groups) {
    if (!fs::exists(g.suite)) throw IoError("group '" + g.name + "': suite manifest " + g.suite.string() + " not found");
    if (!fs::exists(g.dataset)) throw IoError("group '" + g.name + "': dataset " + g.dataset.string() + " not found");
    Loaded l{load_suite(g.suite), read_dataset(g.dataset)};
    l.suite.check_compatible(l.data);
    ThreatModel check(g.epsilon);
    (void)check;
    loaded.push_back(std::move(l));
  }
  for (const auto& a : config.attacks) validate(a.config, config.quota, config.strict);

  BenchmarkResult result;
  fs::create_directories(config.output_dir);
  for (std::size_t gi = 0; gi < config.groups.size(); ++gi) {
    const auto& g = config.groups[gi];
    for (const auto& a : config.attacks) {
      ScoreOptions opt;
      opt.quota = config.quota;
      opt.strict = config.strict;
      opt.seed = config.seed;
      opt.workers = config.workers;
      opt.group = g.name;
      opt.suite_label = reference(g.suite, config.output_dir);
      opt.dataset_label = reference(g.dataset, config.output_dir);
      opt.epsilon_text = g.epsilon_text;
      opt.report_dir = config.output_dir;
      if (config.save_adversarial) opt.adversarial_dir = config.output_dir / "adversarial" / safe_name(g.name);
      auto report = score(loaded[gi].suite, loaded[gi].data, a.name, a.config, ThreatModel(g.epsilon), opt);
      const auto path = config.output_dir / (safe_name(g.name) + "__" + safe_name(a.name) + ".json");
      emit_report(report, ReportFormat::structured_json, path);
      result.report_files.push_back(path);
      result.reports.push_back(std::move(report));
    }
  }
  result.leaderboard = config.output_dir / "leaderboard.txt";
  write_text(result.leaderboard, render_leaderboard(result.reports));
  return result;
}

BenchmarkResult run_benchmark(const fs::path& config_path) { return run_benchmark(load_benchmark_config(config_path)); }

VerifyResult verify_report(const DefenseSuite& suite, const fs::path& report_path) {
  VerifyResult res;
  const auto report = read_report(report_path);
  const auto base = report_path.parent_path();
  auto fail = [&](const std::string& msg) {
    res.ok = false;
    res.problems.push_back(msg);
  };
  if (report.dataset.empty()) throw ConfigError("report does not name its dataset");
  const ImageBatch data = read_dataset(resolve(base, report.dataset));
  const ThreatModel tm(report.epsilon);
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    const auto& ms = report.models[m];
    if (ms.adversarial_file.empty()) {
      fail("model '" + ms.id + "': report holds no adversarial examples");
      continue;
    }
    std::size_t pos = suite.size();
    if (m < suite.size() && suite.ids[m] == ms.id) {
      pos = m;
    } else {
      for (std::size_t k = 0; k < suite.size(); ++k) {
        if (suite.ids[k] == ms.id) {
          pos = k;
          break;
        }
      }
    }
    if (pos == suite.size()) {
      fail("model '" + ms.id + "' is not in the suite");
      continue;
    }
    const auto& model = suite.models[pos];
    const ImageBatch adv = read_dataset(resolve(base, ms.adversarial_file));
    if (adv.rows != data.rows || adv.dim != data.dim || adv.labels != data.labels) {
      fail("model '" + ms.id + "': adversarial set does not match the dataset");
      continue;
    }
    std::vector<bool> stored;
    if (!ms.flags_file.empty()) {
      try {
        stored = json::parse(read_text(resolve(base, ms.flags_file))).at("misclassified").get<std::vector<bool>>();
      } catch (const json::exception& e) {
        fail("model '" + ms.id + "': unreadable flags: " + e.what());
      }
    }
    std::size_t count = 0;
    std::size_t infeasible = 0;
    std::size_t flag_mismatch = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      if (!is_feasible(adv.row(i), data.row(i), tm)) ++infeasible;
      const bool mis = misclassified(model.logits(adv.row(i)), data.labels[i]);
      count += mis ? 1 : 0;
      if (!stored.empty() && (i >= stored.size() || stored[i] != mis)) ++flag_mismatch;
    }
    if (infeasible) fail("model '" + ms.id + "': " + std::to_string(infeasible) + " infeasible examples");
    if (flag_mismatch) fail("model '" + ms.id + "': " + std::to_string(flag_mismatch) + " success flags disagree");
    if (count != ms.misclassified) {
      fail("model '" + ms.id + "': report claims " + std::to_string(ms.misclassified) + " misclassified, found " +
           std::to_string(count));
    }
    ++res.models_checked;
  }
  return res;
}

}  // namespace advbench
