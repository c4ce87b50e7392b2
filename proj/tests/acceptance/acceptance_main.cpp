// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Diagnostics go to stdout under each line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "advbench/attacks.hpp"
#include "advbench/dataset_io.hpp"
#include "advbench/harness.hpp"
#include "advbench/losses.hpp"
#include "advbench/oracle.hpp"
#include "advbench/schedules.hpp"
#include "desk.hpp"
#include "reference.hpp"

using namespace advbench;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "  ok   " : "  MISS ") + what);
  }
  void info(const std::string& what) { details.push_back("  info " + what); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::pair<std::string, AttackConfig>> six_pipelines() {
  return {{"odi_pgd_sgdr", GreenHandConfig{}}, {"lafeat_staged", LafeatStagedConfig{}},
          {"oia_pipeline", OiaConfig{}},       {"rrt_mt_mim", RrtMtMimConfig{}},
          {"fr_pgd", FrPgdConfig{}},           {"dh_attack", DhConfig{}}};
}

// ---------------------------------------------------------------------------
// 1. Analytic input gradients against central differences.

std::vector<double> fd_central(const Model& m, const std::vector<double>& x, const LossSpec& spec, int y, double h,
                               double& max_logit_change) {
  std::vector<double> g(x.size());
  const auto z0 = ref::logits(m, x);
  max_logit_change = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const auto zp = ref::logits(m, xp);
    const auto zm = ref::logits(m, xm);
    for (std::size_t c = 0; c < z0.size(); ++c) {
      max_logit_change = std::max({max_logit_change, std::abs(zp[c] - z0[c]), std::abs(zm[c] - z0[c])});
    }
    g[k] = (evaluate_loss(spec, zp, y).value - evaluate_loss(spec, zm, y).value) / (2.0 * h);
  }
  return g;
}

Result gradient_correctness() {
  Result r;
  const double h = 1e-3;
  const std::size_t d = 6, classes = 5;
  const std::vector<std::pair<std::string, Model>> models{
      {"linear", init_model(Architecture::linear, d, {}, classes, Activation::none, 7)},
      {"mlp", init_model(Architecture::mlp, d, {12}, classes, Activation::tanh, 8)},
      {"mlp2", init_model(Architecture::mlp, d, {10, 10}, classes, Activation::tanh, 9)}};
  const std::vector<LossKind> kinds{LossKind::cross_entropy, LossKind::margin,  LossKind::margin_targeted,
                                    LossKind::dlr,           LossKind::dlr_targeted, LossKind::lafeat,
                                    LossKind::lafeat_targeted, LossKind::md_phase, LossKind::rrt_cosine,
                                    LossKind::output_direction};
  for (const auto& [name, m] : models) {
    // A generous pool; points are consumed in order until 100 qualify.
    const std::size_t pool = 2000;
    const auto xs = ref::random_points(pool, d, 1000 + name.size(), 0.05, 0.95);
    const auto refs = ref::random_points(pool, d, 2000 + name.size(), 0.05, 0.95);
    const auto dirs = ref::random_points(pool, classes, 3000 + name.size(), -1.0, 1.0);
    for (auto kind : kinds) {
      const bool lafeat = kind == LossKind::lafeat || kind == LossKind::lafeat_targeted;
      // LAFEAT divides the logits by the margin m, so its curvature grows
      // like 1/m^2 near the boundary; the stencil has to be small next to m
      // itself, not just clear of a branch switch.
      const double clearance = lafeat ? 200.0 : 4.0;
      double worst = 0.0;
      int checked = 0, skipped = 0;
      for (std::size_t i = 0; i < pool && checked < 100; ++i) {
        const auto z = ref::logits(m, xs[i]);
        // LAFEAT is only defined where the true class leads; use the top
        // class as the label there and cycle labels elsewhere.
        int y = static_cast<int>(i % classes);
        if (lafeat) y = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        const int t = static_cast<int>((static_cast<std::size_t>(y) + 1 + i % (classes - 1)) % classes);
        const int t2 = static_cast<int>((static_cast<std::size_t>(t) + 1) % classes);
        LossSpec spec;
        switch (kind) {
          case LossKind::cross_entropy: spec = LossSpec::cross_entropy(); break;
          case LossKind::margin: spec = LossSpec::margin(); break;
          case LossKind::margin_targeted:
            spec = t2 == y ? LossSpec::margin_targeted({t}) : LossSpec::margin_targeted({t, t2});
            break;
          case LossKind::dlr: spec = LossSpec::dlr(); break;
          case LossKind::dlr_targeted: spec = LossSpec::dlr_targeted(t); break;
          case LossKind::lafeat: spec = LossSpec::lafeat(); break;
          case LossKind::lafeat_targeted: spec = LossSpec::lafeat_targeted(t, 1.0 + 0.5 * (i % 3)); break;
          case LossKind::md_phase:
            spec = LossSpec::md_phase(static_cast<int>(i % 4), 4, 1 + static_cast<int>(i % 3));
            break;
          case LossKind::rrt_cosine: spec = LossSpec::rrt_cosine(ref::logits(m, refs[i])); break;
          case LossKind::output_direction: spec = LossSpec::output_direction(dirs[i]); break;
        }
        const auto g = m.input_gradient(xs[i], spec, y);
        double change = 0.0;
        const auto fd = fd_central(m, xs[i], spec, y, h, change);
        if (g.degenerate || selection_gap(spec, z, y) <= clearance * change) {
          ++skipped;
          continue;
        }
        worst = std::max(worst, ref::relative_error(g.grad, fd));
        ++checked;
      }
      const bool ok = worst < 1e-4 && checked == 100;
      r.check(ok, name + " " + to_string(kind) + ": worst rel err " + fmt("%.2e", worst) + " over " +
                      std::to_string(checked) + " points (" + std::to_string(skipped) + " drawn points excluded)");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// 2 and 3. Feasibility and budget exactness of every pipeline.

struct PipelineRuns {
  Result feasibility;
  Result budget;
};

PipelineRuns feasibility_and_budget() {
  PipelineRuns out;
  const auto d = desk::mixed_suite();
  const ThreatModel tm(d.epsilon);
  const Quota quota{};
  for (const auto& [name, cfg] : six_pipelines()) {
    std::size_t infeasible = 0, total = 0;
    bool counters_equal = true;
    bool quota_ok = true;
    double worst_b = 0.0, worst_f = 0.0;
    for (std::size_t m = 0; m < d.suite.size(); ++m) {
      const Model& model = d.suite.models[m];
      BudgetLedger ledger(d.test.rows, quota, true);
      model.reset_call_counts();
      const auto res = run_attack(cfg, model, d.test, tm, ledger, model_seed(7, d.suite.ids[m]));
      const auto c = model.call_counts();
      counters_equal = counters_equal && c.backward == res.usage.total_backward && c.forward == res.usage.total_forward;
      const double ab = static_cast<double>(res.usage.total_backward) / d.test.rows;
      const double af = static_cast<double>(res.usage.total_forward) / d.test.rows;
      worst_b = std::max(worst_b, ab);
      worst_f = std::max(worst_f, af);
      quota_ok = quota_ok && ab <= 100.0 && af <= 200.0;
      for (std::size_t i = 0; i < d.test.rows; ++i) {
        ++total;
        const auto x = res.candidate(i);
        const auto o = d.test.row(i);
        bool ok = true;
        for (std::size_t k = 0; k < x.size(); ++k) {
          ok = ok && std::abs(x[k] - o[k]) <= tm.epsilon + 1e-6 && x[k] >= -1e-6 && x[k] <= 1.0 + 1e-6;
        }
        infeasible += ok ? 0 : 1;
      }
    }
    out.feasibility.check(infeasible == 0, name + ": " + std::to_string(total - infeasible) + "/" +
                                               std::to_string(total) + " candidates feasible");
    out.budget.check(counters_equal, name + ": ledger totals equal model call counters");
    out.budget.check(quota_ok, name + ": strict run, worst avg backward " + fmt("%.3f", worst_b) +
                                   ", worst avg forward " + fmt("%.3f", worst_f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 4. Soundness and near-completeness against the exact linear oracle.

Result oracle_soundness() {
  Result r;
  const auto d = desk::linear_suite(0.05);
  const ThreatModel tm(d.epsilon);
  std::vector<std::vector<RobustnessVerdict>> verdicts;
  std::size_t attackable = 0, samples = 0;
  for (const auto& m : d.suite.models) {
    verdicts.push_back(oracle_batch(m, d.test, tm, 0));
    for (const auto& v : verdicts.back()) attackable += v.verdict == Verdict::attackable ? 1 : 0;
    samples += d.test.rows;
  }
  r.info("oracle: " + std::to_string(attackable) + " of " + std::to_string(samples) + " samples attackable at eps " +
         fmt("%.3f", d.epsilon));

  // Returns per model the scored misclassification flags.
  auto flags_of = [&](const AttackConfig& cfg, std::size_t& unsound) {
    std::vector<std::vector<bool>> flags;
    for (std::size_t m = 0; m < d.suite.size(); ++m) {
      const Model& model = d.suite.models[m];
      BudgetLedger ledger(d.test.rows);
      const auto res = run_attack(cfg, model, d.test, tm, ledger, model_seed(3, d.suite.ids[m]));
      auto scored = project_batch(res.candidates, d.test, tm);
      for (auto& v : scored) v = static_cast<double>(static_cast<float>(v));
      std::vector<bool> f(d.test.rows);
      for (std::size_t i = 0; i < d.test.rows; ++i) {
        const bool claimed = res.status[i] == SampleStatus::succeeded;
        const bool scored_hit =
            misclassified(model.logits(std::span<const double>(scored.data() + i * d.test.dim, d.test.dim)),
                          d.test.labels[i]);
        f[i] = scored_hit;
        if ((claimed || scored_hit) && verdicts[m][i].verdict == Verdict::robust) ++unsound;
      }
      flags.push_back(std::move(f));
    }
    return flags;
  };
  auto coverage = [&](const std::vector<std::vector<bool>>& flags) {
    std::size_t hit = 0;
    for (std::size_t m = 0; m < flags.size(); ++m) {
      for (std::size_t i = 0; i < flags[m].size(); ++i) {
        hit += flags[m][i] && verdicts[m][i].verdict == Verdict::attackable ? 1 : 0;
      }
    }
    return attackable == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(attackable);
  };

  std::size_t pgd_unsound = 0;
  const auto pgd_flags = flags_of(PgdConfig{}, pgd_unsound);
  std::vector<std::vector<bool>> uni(d.suite.size(), std::vector<bool>(d.test.rows, false));
  std::size_t union_unsound = 0;
  for (const auto& [name, cfg] : six_pipelines()) {
    std::size_t unsound = 0;
    const auto f = flags_of(cfg, unsound);
    r.check(unsound == 0, name + ": " + std::to_string(unsound) + " successes on oracle-robust samples, covers " +
                              fmt("%.2f%%", 100.0 * coverage(f)) + " of the attackable set");
    union_unsound += unsound;
    for (std::size_t m = 0; m < f.size(); ++m) {
      for (std::size_t i = 0; i < f[m].size(); ++i) uni[m][i] = uni[m][i] || f[m][i];
    }
  }
  r.check(pgd_unsound == 0, "pgd: " + std::to_string(pgd_unsound) + " successes on oracle-robust samples");
  const double pgd_cov = coverage(pgd_flags);
  const double uni_cov = coverage(uni);
  // Context only: the same measurement at neighbouring radii.
  for (double eps : {0.03, 0.08}) {
    const auto other = desk::linear_suite(eps);
    std::size_t att = 0, hit = 0;
    for (std::size_t m = 0; m < other.suite.size(); ++m) {
      const Model& model = other.suite.models[m];
      const auto v = oracle_batch(model, other.test, ThreatModel(eps), 0);
      BudgetLedger ledger(other.test.rows);
      const auto res = run_attack(PgdConfig{}, model, other.test, ThreatModel(eps), ledger,
                                  model_seed(3, other.suite.ids[m]));
      for (std::size_t i = 0; i < other.test.rows; ++i) {
        if (v[i].verdict != Verdict::attackable) continue;
        ++att;
        hit += misclassified(model.logits(res.candidate(i)), other.test.labels[i]) ? 1 : 0;
      }
    }
    r.info("context: pgd covers " + fmt("%.2f%%", att == 0 ? 100.0 : 100.0 * hit / att) + " at eps " +
           fmt("%.2f", eps));
  }
  r.check(pgd_cov >= 0.95, "pgd covers " + fmt("%.2f%%", 100.0 * pgd_cov) + " of the attackable set (need 95%)");
  r.check(uni_cov >= 0.99, "six-pipeline union covers " + fmt("%.2f%%", 100.0 * uni_cov) + " (need 99%)");
  return r;
}

// ---------------------------------------------------------------------------
// 5. Ablation ladder ordering on adversarially trained models.

Result ablation_ordering() {
  Result r;
  const auto d = desk::at_suite(0.08);
  const ThreatModel tm(d.epsilon);
  ScoreOptions opt;
  opt.seed = 17;
  opt.workers = 4;
  auto run = [&](const std::string& name, const AttackConfig& cfg) {
    const auto rep = score(d.suite, d.test, name, cfg, tm, opt);
    r.info(name + ": " + fmt("%.3f", rep.aggregate_percent));
    return rep.aggregate_percent;
  };
  auto clean = run("clean", IdentityConfig{});
  (void)clean;
  RrtMtMimConfig odi;
  odi.init = InitKind::odi;
  odi.multi_target = false;
  odi.momentum = false;
  RrtMtMimConfig mt = odi;
  mt.multi_target = true;
  RrtMtMimConfig mim = mt;
  mim.momentum = true;
  RrtMtMimConfig rrt = mim;
  rrt.init = InitKind::rrt;
  const double s_pgd = run("PGD", PgdConfig{});
  const double s_odi = run("ODI+PGD", odi);
  const double s_mt = run("+MT", mt);
  const double s_mim = run("+MIM", mim);
  const double s_rrt = run("RRT for ODI", rrt);
  r.check(s_odi >= s_pgd + 1.0, "ODI+PGD - PGD = " + fmt("%+.3f", s_odi - s_pgd) + " (need >= +1)");
  r.check(s_mt - s_odi >= -0.5, "+MT step " + fmt("%+.3f", s_mt - s_odi) + " (need >= -0.5)");
  r.check(s_mim - s_mt >= -0.5, "+MIM step " + fmt("%+.3f", s_mim - s_mt) + " (need >= -0.5)");
  r.check(s_rrt - s_mim >= -0.5, "RRT step " + fmt("%+.3f", s_rrt - s_mim) + " (need >= -0.5)");
  return r;
}

// ---------------------------------------------------------------------------
// 6. Loss invariances.

Result loss_invariances() {
  Result r;
  const auto zs = ref::random_points(500, 10, 77, -5.0, 5.0);
  double scale_err = 0.0, shift_err = 0.0;
  bool md_exact = true;
  int lafeat_checked = 0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const auto& z = zs[i];
    const int top = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    const int y = static_cast<int>(i % 10);
    const int t = (top + 1 + static_cast<int>(i % 9)) % 10;
    for (double c : {0.1, 10.0}) {
      std::vector<double> zc(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) zc[k] = c * z[k];
      scale_err = std::max(scale_err, std::abs(lafeat_loss(zc, top) - lafeat_loss(z, top)));
      scale_err = std::max(scale_err, std::abs(lafeat_targeted(zc, top, t, 1.0) - lafeat_targeted(z, top, t, 1.0)));
      scale_err = std::max(scale_err, std::abs(dlr_loss(zc, y) - dlr_loss(z, y)));
      ++lafeat_checked;
    }
    for (double s : {-100.0, -1.0, 3.5, 250.0}) {
      std::vector<double> zs2(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) zs2[k] = z[k] + s;
      shift_err = std::max(shift_err, std::abs(cross_entropy(zs2, y) - cross_entropy(z, y)));
    }
    for (int K : {2, 4, 6}) {
      for (int k = K / 2; k < K; ++k) {
        for (int rr = 1; rr <= 4; ++rr) md_exact = md_exact && md_phase_loss(z, y, k, K, rr) == margin_loss(z, y);
      }
    }
  }
  r.check(scale_err <= 1e-6, "LAFEAT, targeted LAFEAT and DLR under z -> c z: max change " + fmt("%.2e", scale_err));
  r.check(shift_err <= 1e-9, "cross-entropy under constant shifts: max change " + fmt("%.2e", shift_err));
  r.check(md_exact, "md_phase equals margin for every k >= K/2");
  return r;
}

// ---------------------------------------------------------------------------
// 7. Schedule breakpoints.

Result schedule_exactness() {
  Result r;
  bool sgdr = true;
  for (int T : {2, 10, 60}) {
    const auto s = ScheduleSpec::sgdr_cosine(0.3, 0.003, T);
    for (int c = 0; c < 3; ++c) {
      sgdr = sgdr && std::abs(step_size(s, c * T) - 0.3) <= 1e-12;
      sgdr = sgdr && std::abs(step_size(s, c * T + T / 2) - (0.3 + 0.003) / 2.0) <= 1e-12;
    }
  }
  r.check(sgdr, "SGDR: eta_max at i mod T = 0, midpoint at i mod T = T/2");
  const double eps = 8.0 / 255.0;
  const auto two = ScheduleSpec::two_stage(eps);
  bool ts = true;
  for (int i = 0; i <= 4; ++i) ts = ts && step_size(two, i) == 2.0 * eps;
  for (int i = 5; i <= 17; ++i) ts = ts && step_size(two, i) == 0.25 * eps;
  r.check(ts, "two_stage: 2 eps on steps 0-4, eps/4 on steps 5-17");
  const auto k = ScheduleSpec::kanra_piecewise(eps, 100);
  const bool kp = step_size(k, 0) == eps && step_size(k, 24) == eps && step_size(k, 25) == eps / 3.0 &&
                  step_size(k, 49) == eps / 3.0 && step_size(k, 50) == eps / 8.0 && step_size(k, 99) == eps / 8.0;
  r.check(kp, "kanra_piecewise N=100: eps to i=24, eps/3 from 25, eps/8 from 50");
  return r;
}

// ---------------------------------------------------------------------------
// 8. OIA filter against the grid oracle.

Result oia_filter_quality() {
  Result r;
  const auto d = desk::grid_suite(0.05);
  const ThreatModel tm(d.epsilon);
  const int resolution = 129;
  std::size_t fn = 0, attackable = 0, fp = 0, robust = 0;
  bool cost_exact = true;
  for (std::size_t m = 0; m < d.suite.size(); ++m) {
    const Model& model = d.suite.models[m];
    const auto verdicts = oracle_batch(model, d.test, tm, resolution, 4);
    BudgetLedger ledger(d.test.rows);
    const auto res = oia_pipeline(model, d.test, tm, OiaConfig{}, ledger, model_seed(5, d.suite.ids[m]), 4);
    const auto e = measure_filter_error(res.status, verdicts);
    fn += e.false_negatives;
    attackable += e.attackable;
    fp += e.false_positives;
    robust += e.robust;
    // Every sample that entered the outside stage was charged exactly five
    // backward passes by the time it closed.
    const auto& outside = res.phases.front();
    for (std::size_t i = 0; i < d.test.rows; ++i) {
      const bool entered = !misclassified(model.logits(d.test.row(i)), d.test.labels[i]);
      if (entered && outside.backward_used[i] != 5) cost_exact = false;
      if (!entered && outside.backward_used[i] != 0) cost_exact = false;
    }
    r.info(d.suite.ids[m] + ": FN " + std::to_string(e.false_negatives) + "/" + std::to_string(e.attackable) +
           ", kept-but-robust " + std::to_string(e.false_positives) + "/" + std::to_string(e.robust));
  }
  const double fnr = attackable == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(attackable);
  r.check(fnr <= 0.01, "false-negative rate " + fmt("%.3f%%", 100.0 * fnr) + " (need <= 1%)");
  r.info("false-positive rate " + fmt("%.3f%%", robust == 0 ? 0.0 : 100.0 * fp / robust));
  r.check(cost_exact, "outside stage charges exactly 5 backward per entering image");
  return r;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical benchmark reports.

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result determinism() {
  Result r;
  const auto root = fs::temp_directory_path() / "advbench_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto d = desk::mixed_suite();
  save_suite(d.suite, root / "suite");
  write_dataset(desk::head(d.test, 64), root / "data.adset");
  auto write_config = [&](const std::string& name, unsigned workers) {
    nlohmann::json cfg;
    cfg["seed"] = 99;
    cfg["workers"] = workers;
    cfg["strict"] = true;
    cfg["save_adversarial"] = true;
    cfg["output_dir"] = name;
    cfg["groups"] = {{{"name", "mixed"}, {"suite", "suite/suite.json"}, {"dataset", "data.adset"}, {"epsilon", "1/20"}}};
    auto attacks = nlohmann::json::array();
    attacks.push_back({{"name", "pgd"}, {"pipeline", "pgd"}});
    for (const auto& [n, c] : six_pipelines()) attacks.push_back({{"name", n}, {"pipeline", n}});
    cfg["attacks"] = attacks;
    std::ofstream(root / (name + ".json")) << cfg.dump(2);
    return root / (name + ".json");
  };
  const auto a = run_benchmark(write_config("serial", 1));
  const auto b = run_benchmark(write_config("parallel", 4));
  const auto c = run_benchmark(write_config("again", 4));
  std::size_t identical = 0, files = 0;
  for (std::size_t k = 0; k < a.report_files.size(); ++k) {
    for (const auto* other : {&b, &c}) {
      auto ja = nlohmann::json::parse(read_all(a.report_files[k]));
      auto jb = nlohmann::json::parse(read_all(other->report_files[k]));
      ja.erase("wall_clock_seconds");
      jb.erase("wall_clock_seconds");
      ++files;
      identical += ja.dump(2) == jb.dump(2) ? 1 : 0;
    }
  }
  r.check(identical == files, std::to_string(identical) + "/" + std::to_string(files) +
                                  " report pairs identical apart from wall-clock time");
  bool adv_same = true;
  for (const auto& e : fs::recursive_directory_iterator(root / "serial" / "adversarial")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "serial");
    adv_same = adv_same && read_all(e.path()) == read_all(root / "parallel" / rel);
  }
  r.check(adv_same, "stored adversarial sets byte-identical across worker counts");
  r.check(read_all(a.leaderboard) == read_all(b.leaderboard), "leaderboards byte-identical");
  return r;
}

// ---------------------------------------------------------------------------
// 10. Allocation sums at phase boundaries.

Result reallocation_conservation() {
  Result r;
  const auto d = desk::mixed_suite();
  const ThreatModel tm(d.epsilon);
  const Quota quota{};
  const std::uint64_t n = d.test.rows;
  for (auto policy : {ReallocationPolicy::even_split, ReallocationPolicy::proportional}) {
    FrPgdConfig fr;
    fr.policy = policy;
    DhConfig dh;
    dh.policy = policy;
    for (const auto& [name, cfg] : std::vector<std::pair<std::string, AttackConfig>>{{"fr_pgd", fr}, {"dh_attack", dh}}) {
      bool ok = true;
      std::size_t boundaries = 0;
      std::uint64_t moved = 0;
      for (std::size_t m = 0; m < d.suite.size(); ++m) {
        BudgetLedger ledger(n, quota);
        const auto res = run_attack(cfg, d.suite.models[m], d.test, tm, ledger, model_seed(2, d.suite.ids[m]));
        for (const auto& p : res.phases) {
          ok = ok && p.backward_allocation == n * quota.backward && p.forward_allocation == n * quota.forward;
          moved += p.moved_backward;
          ++boundaries;
        }
      }
      r.check(ok, name + " (" + to_string(policy) + "): allocation sums constant over " + std::to_string(boundaries) +
                      " phase boundaries, " + std::to_string(moved) + " backward passes moved");
    }
  }
  return r;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<Result()> run;
  };
  PipelineRuns pipeline_runs;
  bool pipeline_done = false;
  auto pipelines = [&]() -> PipelineRuns& {
    if (!pipeline_done) pipeline_runs = feasibility_and_budget();
    pipeline_done = true;
    return pipeline_runs;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_correctness},
      {2, "candidate feasibility", [&] { return pipelines().feasibility; }},
      {3, "budget exactness", [&] { return pipelines().budget; }},
      {4, "oracle soundness and completeness", oracle_soundness},
      {5, "ablation ladder ordering", ablation_ordering},
      {6, "loss invariances", loss_invariances},
      {7, "schedule exactness", schedule_exactness},
      {8, "OIA filter quality", oia_filter_quality},
      {9, "determinism", determinism},
      {10, "reallocation conservation", reallocation_conservation},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Result res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (res.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << fmt("%.1f", secs)
              << " s)\n";
    for (const auto& line : res.details) std::cout << line << "\n";
    std::cout.flush();
    failures += res.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
