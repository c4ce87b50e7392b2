#include <algorithm>
#include <cmath>
#include <limits>

#include "advbench/attacks.hpp"
#include "advbench/errors.hpp"
#include "attack_detail.hpp"

namespace advbench {

using detail::any_can_backward;
using detail::start_point;
using detail::untargeted_loss;

namespace {

std::vector<double> current_best(SampleProbe& p) { return p.state().candidate; }

std::vector<double> origin_copy(SampleProbe& p) { return {p.origin().begin(), p.origin().end()}; }

/// Marks active samples whose best loss lies strictly below the q-quantile
/// of the active best losses.
void filter_below_quantile(AttackContext& ctx, double q) {
  const auto idx = ctx.active_indices();
  if (idx.empty() || q <= 0.0) return;
  std::vector<double> losses;
  for (auto i : idx) losses.push_back(ctx.state(i).best_loss);
  std::sort(losses.begin(), losses.end());
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(losses.size() - 1)));
  const double threshold = losses[k];
  for (auto i : idx) {
    if (ctx.state(i).best_loss < threshold) ctx.probe(i).mark_filtered();
  }
}

}  // namespace

AttackOutcome odi_pgd_sgdr(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                           const GreenHandConfig& cfg, BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("odi_pgd_sgdr");
  ctx.clean_pass();
  const auto lengths = restart_lengths(cfg);
  const double eta_max = cfg.eta_max_eps * tm.epsilon;
  for (int r = 0; r < cfg.restarts; ++r) {
    if (!any_can_backward(ctx)) break;
    ctx.begin_phase("restart " + std::to_string(r + 1));
    AscentPlan plan;
    plan.loss = untargeted_loss(cfg.loss);
    plan.schedule = ScheduleSpec::sgdr_cosine(eta_max, cfg.eta_min_ratio * eta_max, lengths[r]);
    plan.steps = lengths[r];
    ctx.for_each_active([&](SampleProbe& p) {
      if (!p.can_backward()) return;
      auto start = start_point(cfg.init, p, tm, static_cast<std::uint64_t>(r + 1), origin_copy(p));
      if (!p.active()) return;
      ascend(p, std::move(start), plan, tm);
    });
    if (r == 0) filter_below_quantile(ctx, cfg.filter_quantile);
    ctx.reallocate(cfg.policy);
  }
  return ctx.finish();
}

AttackOutcome lafeat_staged(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                            const LafeatStagedConfig& cfg, BudgetLedger& ledger, std::uint64_t seed,
                            unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  const std::size_t classes = model.num_classes();
  if (classes < 4 || static_cast<std::size_t>(cfg.dlr_targets) > classes - 1) {
    throw ConfigError("lafeat_staged needs at least " + std::to_string(std::max(cfg.dlr_targets + 1, 4)) +
                      " classes, model has " + std::to_string(classes));
  }
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("lafeat_staged");
  ctx.clean_pass();
  const double base = cfg.eta_eps * tm.epsilon;

  auto run = [&](const LossSpec& loss, int iterations, SampleProbe& p) {
    AscentPlan plan;
    plan.loss = loss;
    plan.schedule = ScheduleSpec::cos4(base, iterations, cfg.floor_fraction);
    plan.steps = iterations;
    ascend(p, current_best(p), plan, tm);
  };

  ctx.begin_phase("probe");
  ctx.for_each_active([&](SampleProbe& p) { run(LossSpec::lafeat(), cfg.probe_iterations, p); });
  ctx.reallocate(cfg.policy);

  const std::size_t active_before = ctx.count(SampleStatus::active);
  const std::size_t succeeded_before = ctx.count(SampleStatus::succeeded);
  for (int t = 0; t < cfg.dlr_targets; ++t) {
    ctx.begin_phase("dlr target " + std::to_string(t + 1));
    ctx.for_each_active([&](SampleProbe& p) {
      if (!p.can_backward()) return;
      const auto targets = multi_target_plan(p.state().clean_logits, p.label(), cfg.dlr_targets);
      run(LossSpec::dlr_targeted(targets[t]), cfg.dlr_iterations, p);
    });
    ctx.reallocate(cfg.policy);
  }
  const std::size_t gained = ctx.count(SampleStatus::succeeded) - succeeded_before;
  const double rate = active_before == 0 ? 0.0 : static_cast<double>(gained) / static_cast<double>(active_before);
  const bool non_robust = active_before > 0 && rate > cfg.drop_threshold;
  ctx.note("targeted phase success rate " + std::to_string(rate) + ", model classified " +
           (non_robust ? "non-robust" : "robust"));

  if (non_robust) {
    const int total = static_cast<int>(std::min<std::size_t>(cfg.lafeat_targets, classes - 1));
    for (int t = 0; t < total; ++t) {
      if (!any_can_backward(ctx)) break;
      ctx.begin_phase("lafeat target " + std::to_string(t + 1));
      ctx.for_each_active([&](SampleProbe& p) {
        const auto iterations = static_cast<int>(p.remaining_backward() / static_cast<std::uint64_t>(total - t));
        if (iterations < 1) return;
        const auto targets = multi_target_plan(p.state().clean_logits, p.label(), static_cast<std::size_t>(total));
        run(LossSpec::lafeat_targeted(targets[t], cfg.temperature), iterations, p);
      });
      ctx.reallocate(cfg.policy);
    }
  } else {
    for (int round = 0; round < cfg.robust_rounds; ++round) {
      if (!any_can_backward(ctx)) break;
      ctx.begin_phase("lafeat round " + std::to_string(round + 1));
      ctx.for_each_active([&](SampleProbe& p) {
        const auto iterations = static_cast<int>(p.remaining_backward());
        if (iterations < 1) return;
        run(LossSpec::lafeat(), iterations, p);
      });
      ctx.reallocate(cfg.policy);
    }
  }
  return ctx.finish();
}

AttackOutcome oia_pipeline(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const OiaConfig& cfg,
                           BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("oia_pipeline");
  ctx.clean_pass();
  const ThreatModel outer = tm.scaled(cfg.outer_factor);
  const LossSpec outer_loss = untargeted_loss(cfg.outer_loss);

  ctx.begin_phase("outside");
  ctx.for_each_active([&](SampleProbe& p) {
    // BIM in the enlarged ball. These points are outside the attack's threat
    // model, so the queries are charged but never recorded as candidates.
    std::vector<double> x = origin_copy(p);
    std::vector<double> best_outer;
    double best_margin = -std::numeric_limits<double>::infinity();
    bool hit = false;
    auto consider = [&](std::span<const double> z, const std::vector<double>& point) {
      const double m = margin_loss(z, p.label());
      if (misclassified(z, p.label())) hit = true;
      if (m > best_margin) {
        best_margin = m;
        best_outer = point;
      }
    };
    for (int s = 0; s < cfg.outer_steps; ++s) {
      auto g = p.gradient(x, outer_loss, false);
      if (!g) break;
      consider(g->logits, x);
      signed_step(x, g->grad, cfg.outer_alpha_eps * tm.epsilon, p.origin(), outer);
    }
    if (auto z = p.forward(x, false)) consider(*z, x);
    if (!hit) {
      p.mark_filtered();
      return;
    }
    p.forward(project(best_outer, p.origin(), tm));
  });
  ctx.reallocate(cfg.policy);

  const double eta = cfg.eta_eps * tm.epsilon;
  const InitSpec odi{InitKind::odi, cfg.odi_steps, cfg.odi_alpha_eps, 0.0};
  for (int r = 1; cfg.max_restarts == 0 || r <= cfg.max_restarts; ++r) {
    if (!any_can_backward(ctx)) break;
    ctx.begin_phase("inside restart " + std::to_string(r));
    AscentPlan plan;
    plan.loss = untargeted_loss(cfg.loss);
    plan.schedule = ScheduleSpec::cosine_per_restart(eta, cfg.eta_floor_ratio * eta, cfg.pgd_steps);
    plan.steps = cfg.pgd_steps;
    ctx.for_each_active([&](SampleProbe& p) {
      if (!p.can_backward()) return;
      auto start = start_point(odi, p, tm, static_cast<std::uint64_t>(r), current_best(p));
      if (!p.active()) return;
      ascend(p, std::move(start), plan, tm);
    });
    ctx.reallocate(cfg.policy);
  }
  return ctx.finish();
}

AttackOutcome rrt_mt_mim(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                         const RrtMtMimConfig& cfg, BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("rrt_mt_mim");
  ctx.clean_pass();
  const std::size_t wrong = model.num_classes() - 1;
  const InitSpec init{cfg.init, cfg.init_steps, cfg.init_alpha_eps, 0.0};
  for (int r = 1; cfg.max_restarts == 0 || r <= cfg.max_restarts; ++r) {
    if (!any_can_backward(ctx)) break;
    ctx.begin_phase("restart " + std::to_string(r));
    ctx.for_each_active([&](SampleProbe& p) {
      if (!p.can_backward()) return;
      AscentPlan plan;
      if (cfg.multi_target) {
        const auto order = multi_target_plan(p.state().clean_logits, p.label(), wrong);
        plan.loss = LossSpec::margin_targeted({order[static_cast<std::size_t>(r - 1) % wrong]});
      } else {
        plan.loss = LossSpec::margin();
      }
      plan.schedule = ScheduleSpec::two_stage(tm.epsilon, cfg.stage_boundary);
      plan.steps = cfg.pgd_steps;
      plan.momentum = cfg.momentum;
      plan.momentum_decay = cfg.momentum_decay;
      plan.momentum_start = cfg.stage_boundary;
      auto start = start_point(init, p, tm, static_cast<std::uint64_t>(r), origin_copy(p));
      if (!p.active()) return;
      ascend(p, std::move(start), plan, tm);
    });
    ctx.reallocate(cfg.policy);
  }
  return ctx.finish();
}

AttackOutcome fr_pgd(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const FrPgdConfig& cfg,
                     BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("fr_pgd");
  ctx.clean_pass();
  // Phase B keeps floor(B * b / (a + b)) backward passes of every sample's
  // allocation in reserve.
  const auto reserve = static_cast<std::uint64_t>(
      std::floor(static_cast<double>(ledger.quota().backward) * cfg.ratio_b / (cfg.ratio_a + cfg.ratio_b)));
  const auto restart_cost = static_cast<std::uint64_t>(cfg.odi_steps + cfg.ascent_steps);
  const InitSpec odi{InitKind::odi, cfg.odi_steps, cfg.odi_alpha_eps, 0.0};
  auto eligible = [&](std::size_t i) { return ledger.can_forward(i) && ledger.remaining_backward(i) >= reserve + restart_cost; };

  for (int r = 1; cfg.max_restarts == 0 || r <= cfg.max_restarts; ++r) {
    bool any = false;
    for (auto i : ctx.active_indices()) any = any || eligible(i);
    if (!any) break;
    ctx.begin_phase("fast restart " + std::to_string(r));
    AscentPlan plan;
    plan.loss = LossSpec::md_phase(0, cfg.ascent_steps, r);
    plan.schedule = ScheduleSpec::fixed(cfg.ascent_eta_eps * tm.epsilon);
    plan.steps = cfg.ascent_steps;
    ctx.for_each_active([&](SampleProbe& p) {
      if (!eligible(p.index())) return;
      auto start = start_point(odi, p, tm, static_cast<std::uint64_t>(r), origin_copy(p));
      if (!p.active()) return;
      ascend(p, std::move(start), plan, tm);
    });
    ctx.reallocate(cfg.policy);
  }

  if (cfg.ratio_b > 0.0) {
    ctx.begin_phase("convergence");
    ctx.for_each_active([&](SampleProbe& p) {
      const auto n = static_cast<int>(p.remaining_backward());
      if (n < 1) return;
      AscentPlan plan;
      plan.loss = LossSpec::margin();
      plan.schedule = ScheduleSpec::kanra_piecewise(tm.epsilon, n);
      plan.steps = n;
      plan.momentum = true;
      plan.momentum_decay = cfg.momentum_decay;
      ascend(p, current_best(p), plan, tm);
    });
    ctx.reallocate(cfg.policy);
  }
  return ctx.finish();
}

AttackOutcome dh_attack(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const DhConfig& cfg,
                        BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  if (model.num_classes() < 3) throw ConfigError("dh_attack needs at least 3 classes");
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("dh_attack");
  ctx.clean_pass();
  const double eta = cfg.eta_start_eps * tm.epsilon;
  std::vector<double> global(batch.dim, 0.0);
  bool have_global = false;

  // Folds the deltas of samples that succeeded since `before` into the
  // global perturbation, in index order, then rescales it to the ball.
  auto update_global = [&](const std::vector<SampleStatus>& before) {
    bool changed = false;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (before[i] != SampleStatus::active || ctx.state(i).status != SampleStatus::succeeded) continue;
      const auto x = batch.row(i);
      const auto& c = ctx.state(i).candidate;
      for (std::size_t k = 0; k < global.size(); ++k) global[k] = cfg.ema * global[k] + (1.0 - cfg.ema) * (c[k] - x[k]);
      changed = true;
    }
    if (!changed) return;
    double m = 0.0;
    for (double v : global) m = std::max(m, std::abs(v));
    if (m == 0.0) return;
    for (auto& v : global) v = std::clamp(v * tm.epsilon / m, -tm.epsilon, tm.epsilon);
    have_global = true;
  };

  ctx.begin_phase("opening");
  auto before = ctx.statuses();
  {
    AscentPlan plan;
    plan.loss = LossSpec::margin();
    plan.schedule = ScheduleSpec::cosine_per_restart(eta, cfg.eta_floor_ratio * eta, cfg.opening_iterations);
    plan.steps = cfg.opening_iterations;
    ctx.for_each_active([&](SampleProbe& p) { ascend(p, origin_copy(p), plan, tm); });
  }
  update_global(before);
  ctx.reallocate(cfg.policy);

  for (int r = 1; cfg.max_restarts < 0 || r <= cfg.max_restarts; ++r) {
    if (!any_can_backward(ctx)) break;
    ctx.begin_phase("restart " + std::to_string(r));
    Rng choice(seed, std::numeric_limits<std::uint64_t>::max(), static_cast<std::uint64_t>(r), stream::loss_choice);
    AscentPlan plan;
    plan.loss = choice.below(2) == 0 ? LossSpec::margin() : LossSpec::dlr();
    plan.schedule = ScheduleSpec::cosine_per_restart(eta, cfg.eta_floor_ratio * eta, cfg.restart_iterations);
    plan.steps = cfg.restart_iterations;
    before = ctx.statuses();
    ctx.for_each_active([&](SampleProbe& p) {
      if (have_global) {
        std::vector<double> trial(p.origin().begin(), p.origin().end());
        for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += global[k];
        project_inplace(trial, p.origin(), tm);
        p.forward(trial);
        if (!p.active()) return;
      }
      if (!p.can_backward()) return;
      Rng rng = p.rng(static_cast<std::uint64_t>(r), stream::odi_direction);
      auto start = restricted_odi_init(p, origin_copy(p), cfg.odi_alpha_eps * tm.epsilon, tm, rng, cfg.odi_steps,
                                       cfg.mt_steps);
      if (!p.active()) return;
      ascend(p, std::move(start), plan, tm);
    });
    update_global(before);
    ctx.reallocate(cfg.policy);
  }
  ctx.note("global perturbation " + std::string(have_global ? "used" : "never formed"));
  auto out = ctx.finish();
  out.global_perturbation = global;
  return out;
}

}  // namespace advbench
