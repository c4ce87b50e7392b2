#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "advbench/dataset_io.hpp"
#include "advbench/errors.hpp"
#include "advbench/harness.hpp"
#include "reference.hpp"
#include "rig.hpp"

using namespace advbench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("advbench_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ImageBatch points(std::size_t n, std::uint64_t seed) {
  const auto xs = ref::random_points(n, 3, seed);
  std::vector<int> ys;
  for (std::size_t i = 0; i < n; ++i) ys.push_back(static_cast<int>(i % 3));
  auto b = ref::batch_of(xs, ys, 3);
  for (auto& v : b.data) v = static_cast<float>(v);
  return b;
}

DefenseSuite two_models() {
  DefenseSuite s;
  s.add("id", ref::identity_linear(3));
  s.add("mlp", init_model(Architecture::mlp, 3, {6}, 3, Activation::tanh, 2));
  return s;
}

double clean_error(const Model& m, const ImageBatch& b) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < b.rows; ++i) {
    const std::vector<double> x(b.row(i).begin(), b.row(i).end());
    const auto z = ref::logits(m, x);
    const auto top = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    wrong += top != b.labels[i] ? 1 : 0;
  }
  return static_cast<double>(wrong) / static_cast<double>(b.rows);
}

PgdConfig short_pgd() {
  PgdConfig p;
  p.steps = 10;
  return p;
}

}  // namespace

TEST(Harness, IdentityScoresCleanError) {
  const auto suite = two_models();
  const auto data = points(60, 1);
  ScoreOptions opt;
  const auto r = score(suite, data, "clean", IdentityConfig{}, ThreatModel(0.05), opt);
  ASSERT_EQ(r.models.size(), 2u);
  const double e0 = clean_error(suite.models[0], data);
  const double e1 = clean_error(suite.models[1], data);
  EXPECT_DOUBLE_EQ(r.models[0].rate, e0);
  EXPECT_DOUBLE_EQ(r.models[1].rate, e1);
  EXPECT_DOUBLE_EQ(r.aggregate, (e0 + e1) / 2.0);
  EXPECT_DOUBLE_EQ(r.aggregate_percent, 100.0 * r.aggregate);
}

TEST(Harness, CopiesWithSharedIdScoreAlike) {
  DefenseSuite one;
  one.add("m", init_model(Architecture::mlp, 3, {6}, 3, Activation::tanh, 2));
  DefenseSuite three = one;
  three.add("m", one.models[0]);
  three.add("m", one.models[0]);
  const auto data = points(40, 3);
  ScoreOptions opt;
  opt.seed = 5;
  const auto a = score(one, data, "pgd", short_pgd(), ThreatModel(0.05), opt);
  const auto b = score(three, data, "pgd", short_pgd(), ThreatModel(0.05), opt);
  EXPECT_DOUBLE_EQ(a.aggregate, b.aggregate);
  for (const auto& m : b.models) EXPECT_EQ(m.misclassified, a.models[0].misclassified);
}

TEST(Harness, InfeasibleCandidatesAreProjectedBeforeScoring) {
  const auto suite = two_models();
  const auto data = points(20, 4);
  AttackFn wild = [](const Model&, const ImageBatch& b, const ThreatModel&, BudgetLedger& l, std::uint64_t,
                     unsigned) {
    AttackOutcome out;
    out.rows = b.rows;
    out.dim = b.dim;
    out.candidates.assign(b.data.size(), 5.0);
    out.status.assign(b.rows, SampleStatus::active);
    out.usage = l.usage();
    return out;
  };
  const auto dir = scratch("projected");
  ScoreOptions opt;
  opt.adversarial_dir = dir;
  opt.report_dir = dir;
  const auto r = score_with(suite, data, "wild", wild, nlohmann::json::object(), ThreatModel(0.05), opt);
  const auto adv = read_dataset(dir / r.models[0].adversarial_file);
  for (std::size_t i = 0; i < data.rows; ++i) EXPECT_TRUE(is_feasible(adv.row(i), data.row(i), ThreatModel(0.05)));
}

TEST(Harness, StrictOverdraftSurfacesModelAndPhase) {
  const auto suite = two_models();
  const auto data = points(4, 5);
  AttackFn greedy = [](const Model&, const ImageBatch& b, const ThreatModel&, BudgetLedger& l, std::uint64_t,
                       unsigned) {
    l.set_phase("greedy/loop");
    for (int k = 0; k < 101; ++k) l.charge_backward(0);
    AttackOutcome out;
    out.candidates = b.data;
    return out;
  };
  ScoreOptions opt;
  opt.strict = true;
  try {
    score_with(suite, data, "greedy", greedy, nlohmann::json::object(), ThreatModel(0.05), opt);
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.phase(), "greedy/loop");
    EXPECT_NE(std::string(e.what()).find("'id'"), std::string::npos);
  }
}

TEST(Harness, ParseEpsilon) {
  EXPECT_DOUBLE_EQ(parse_epsilon("8/255"), 8.0 / 255.0);
  EXPECT_DOUBLE_EQ(parse_epsilon("0.03"), 0.03);
  for (const char* bad : {"abc", "1/0", "-1", "0.1x", "/3", ""}) EXPECT_THROW(parse_epsilon(bad), ConfigError) << bad;
}

TEST(Harness, ReportRoundTripsAndPrintsThreeDecimals) {
  const auto suite = two_models();
  const auto data = points(30, 6);
  ScoreOptions opt;
  opt.epsilon_text = "1/20";
  auto r = score(suite, data, "pgd", short_pgd(), ThreatModel(0.05), opt);
  const auto back = report_from_json(report_to_json(r));
  EXPECT_EQ(report_to_json(back), report_to_json(r));
  EXPECT_EQ(back.epsilon_text, "1/20");
  r.models[0].percent = 12.3456;
  const auto text = report_to_text(r, ReportFormat::plain_table);
  EXPECT_NE(text.find("12.346"), std::string::npos);
}

TEST(Harness, LeaderboardSortsByMean) {
  ScoreReport a, b, c;
  a.group = "g1";
  a.attack = "weak";
  a.aggregate_percent = 10;
  b.group = "g1";
  b.attack = "strong";
  b.aggregate_percent = 50;
  c.group = "g2";
  c.attack = "weak";
  c.aggregate_percent = 20;
  const std::vector<ScoreReport> all{a, b, c};
  const auto board = render_leaderboard(all);
  EXPECT_LT(board.find("strong"), board.find("weak"));
  EXPECT_NE(board.find("50.000"), std::string::npos);
}

TEST(Harness, SuiteRoundTrip) {
  const auto dir = scratch("suite");
  const auto suite = two_models();
  const auto manifest = save_suite(suite, dir);
  const auto back = load_suite(manifest);
  ASSERT_EQ(back.ids, suite.ids);
  const auto x = std::vector<double>{0.1, 0.5, 0.9};
  EXPECT_EQ(back.models[1].logits(x), suite.models[1].logits(x));
}

TEST(Harness, SuiteRejectsIncompatibleDataset) {
  const auto suite = two_models();
  ImageBatch wide(2, 4, 3);
  EXPECT_THROW(suite.check_compatible(wide), ConfigError);
  EXPECT_THROW(DefenseSuite{}.check_compatible(points(2, 1)), ConfigError);
}

namespace {

/// Writes a suite, a dataset and a two-group, two-attack config.
fs::path bench_fixture(const fs::path& dir, bool save_adversarial, const nlohmann::json& attacks) {
  save_suite(two_models(), dir / "suite");
  write_dataset(points(24, 7), dir / "data.adset");
  nlohmann::json cfg;
  cfg["seed"] = 3;
  cfg["output_dir"] = "out";
  cfg["save_adversarial"] = save_adversarial;
  cfg["groups"] = {{{"name", "small"}, {"suite", "suite/suite.json"}, {"dataset", "data.adset"}, {"epsilon", "1/40"}},
                   {{"name", "large"}, {"suite", "suite/suite.json"}, {"dataset", "data.adset"}, {"epsilon", 0.1}}};
  cfg["attacks"] = attacks;
  std::ofstream(dir / "bench.json") << cfg.dump(2);
  return dir / "bench.json";
}

nlohmann::json two_attacks() {
  return nlohmann::json::array({{{"name", "clean"}, {"pipeline", "identity"}},
                                {{"name", "pgd10"}, {"pipeline", "pgd"}, {"params", {{"steps", 10}}}}});
}

}  // namespace

TEST(Benchmark, RunsEveryCell) {
  const auto dir = scratch("cells");
  const auto res = run_benchmark(bench_fixture(dir, false, two_attacks()));
  ASSERT_EQ(res.reports.size(), 4u);
  for (const auto& f : res.report_files) EXPECT_TRUE(fs::exists(f));
  EXPECT_TRUE(fs::exists(dir / "out" / "small__pgd10.json"));
  EXPECT_TRUE(fs::exists(res.leaderboard));
  // A larger ball can only help the same attack on the same data.
  EXPECT_GE(res.reports[3].aggregate, res.reports[1].aggregate);
}

TEST(Benchmark, ReplaysAreIdentical) {
  const auto d1 = scratch("replay1");
  const auto d2 = scratch("replay2");
  const auto a = run_benchmark(bench_fixture(d1, false, two_attacks()));
  const auto b = run_benchmark(bench_fixture(d2, false, two_attacks()));
  for (std::size_t k = 0; k < a.reports.size(); ++k) {
    EXPECT_EQ(a.reports[k].aggregate, b.reports[k].aggregate);
    EXPECT_EQ(a.reports[k].models[1].usage.total_backward, b.reports[k].models[1].usage.total_backward);
  }
}

TEST(Benchmark, NoAttacksWritesEmptyLeaderboard) {
  const auto dir = scratch("empty");
  const auto res = run_benchmark(bench_fixture(dir, false, nlohmann::json::array()));
  EXPECT_TRUE(res.reports.empty());
  EXPECT_TRUE(fs::exists(res.leaderboard));
}

TEST(Benchmark, MissingDatasetFailsBeforeAnyAttack) {
  const auto dir = scratch("missing");
  const auto cfg = bench_fixture(dir, false, two_attacks());
  fs::remove(dir / "data.adset");
  EXPECT_THROW(run_benchmark(cfg), IoError);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Benchmark, ConfigErrors) {
  EXPECT_THROW(parse_benchmark_config({{"sed", 1}}, "."), ConfigError);
  EXPECT_THROW(parse_benchmark_config({{"attacks", {{{"pipeline", "pgd"}}, {{"pipeline", "pgd"}}}}}, "."),
               ConfigError);
  EXPECT_THROW(parse_benchmark_config({{"attacks", {{{"pipeline", "pgd"}, {"params", {{"bogus", 1}}}}}}}, "."),
               ConfigError);
  EXPECT_THROW(parse_benchmark_config({{"groups", {{{"name", "g"}}}}}, "."), ConfigError);
}

TEST(Benchmark, VerifyAcceptsSavedExamplesAndCatchesTampering) {
  const auto dir = scratch("verify");
  const auto res = run_benchmark(bench_fixture(dir, true, two_attacks()));
  const auto suite = load_suite(dir / "suite" / "suite.json");
  const auto path = dir / "out" / "large__pgd10.json";
  const auto ok = verify_report(suite, path);
  EXPECT_TRUE(ok.ok);
  EXPECT_EQ(ok.models_checked, 2u);

  auto report = read_report(path);
  report.models[0].misclassified += 1;
  emit_report(report, ReportFormat::structured_json, dir / "out" / "tampered.json");
  const auto bad = verify_report(suite, dir / "out" / "tampered.json");
  EXPECT_FALSE(bad.ok);
  EXPECT_FALSE(bad.problems.empty());
}
