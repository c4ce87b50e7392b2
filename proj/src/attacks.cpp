#include "advbench/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "advbench/errors.hpp"
#include "attack_detail.hpp"

namespace advbench {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_init(const InitSpec& init) {
  require(init.steps >= 0, "init steps must be non-negative");
  require(init.alpha_eps > 0.0, "init step size must be positive");
  require(init.bias >= 0.0 && init.bias <= 1.0, "ODI bias must lie in [0,1]");
}

std::uint64_t init_backward(const InitSpec& init) {
  switch (init.kind) {
    case InitKind::none:
    case InitKind::uniform:
      return 0;
    case InitKind::restricted_odi:
      return 10;
    default:
      return static_cast<std::uint64_t>(init.steps);
  }
}

}  // namespace

namespace detail {

LossSpec untargeted_loss(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy:
      return LossSpec::cross_entropy();
    case LossKind::margin:
      return LossSpec::margin();
    case LossKind::dlr:
      return LossSpec::dlr();
    case LossKind::lafeat:
      return LossSpec::lafeat();
    default:
      throw ConfigError("loss '" + to_string(kind) + "' needs targets or a reference and cannot drive this attack");
  }
}

std::vector<double> start_point(const InitSpec& init, SampleProbe& probe, const ThreatModel& tm,
                                std::uint64_t restart, std::vector<double> from) {
  const double alpha = init.alpha_eps * tm.epsilon;
  switch (init.kind) {
    case InitKind::none:
      return from;
    case InitKind::uniform: {
      Rng rng = probe.rng(restart, stream::uniform_start);
      return uniform_init(probe.origin(), tm, rng);
    }
    case InitKind::odi: {
      Rng rng = probe.rng(restart, stream::odi_direction);
      return odi_init(probe, std::move(from), init.steps, alpha, tm, rng);
    }
    case InitKind::biased_odi: {
      Rng rng = probe.rng(restart, stream::odi_direction);
      return biased_odi_init(probe, std::move(from), init.steps, alpha, tm, rng, init.bias);
    }
    case InitKind::rrt: {
      Rng pick = probe.rng(restart, stream::rrt_target);
      const auto& batch = probe.context().batch();
      const std::size_t j = pick_rrt_target(batch, probe.index(), pick);
      Rng fallback = probe.rng(restart, stream::uniform_start);
      return rrt_init(probe, std::move(from), batch.row(j), init.steps, alpha, tm, fallback);
    }
    case InitKind::restricted_odi: {
      Rng rng = probe.rng(restart, stream::odi_direction);
      return restricted_odi_init(probe, std::move(from), alpha, tm, rng);
    }
  }
  return from;
}

bool any_can_backward(AttackContext& ctx) {
  for (auto i : ctx.active_indices()) {
    if (ctx.ledger().can_backward(i)) return true;
  }
  return false;
}

}  // namespace detail

ScheduleSpec make_schedule(const StepRule& rule, double epsilon, int run_length) {
  const int period = std::max(run_length, 1);
  const double base = rule.scale * epsilon;
  ScheduleSpec s;
  switch (rule.kind) {
    case ScheduleKind::fixed:
      s = ScheduleSpec::fixed(base);
      break;
    case ScheduleKind::sgdr_cosine:
      s = ScheduleSpec::sgdr_cosine(base, rule.min_ratio * base, period);
      break;
    case ScheduleKind::cos4:
      s = ScheduleSpec::cos4(base, period, rule.min_ratio);
      break;
    case ScheduleKind::two_stage:
      s = ScheduleSpec::two_stage(epsilon, rule.boundary);
      break;
    case ScheduleKind::kanra_piecewise:
      s = ScheduleSpec::kanra_piecewise(epsilon, period);
      break;
    case ScheduleKind::cosine_per_restart:
      s = ScheduleSpec::cosine_per_restart(base, rule.min_ratio * base, period);
      break;
  }
  s.validate();
  return s;
}

std::vector<int> restart_lengths(const GreenHandConfig& cfg) {
  std::vector<int> out;
  for (int r = 0; r < cfg.restarts; ++r) {
    const double t = cfg.restarts == 1 ? 0.0 : static_cast<double>(r) / (cfg.restarts - 1);
    out.push_back(cfg.min_iterations +
                  static_cast<int>(std::lround(t * (cfg.max_iterations - cfg.min_iterations))));
  }
  return out;
}

std::string pipeline_name(const AttackConfig& cfg) {
  struct Namer {
    std::string operator()(const IdentityConfig&) const { return "identity"; }
    std::string operator()(const PgdConfig&) const { return "pgd"; }
    std::string operator()(const GreenHandConfig&) const { return "odi_pgd_sgdr"; }
    std::string operator()(const LafeatStagedConfig&) const { return "lafeat_staged"; }
    std::string operator()(const OiaConfig&) const { return "oia_pipeline"; }
    std::string operator()(const RrtMtMimConfig&) const { return "rrt_mt_mim"; }
    std::string operator()(const FrPgdConfig&) const { return "fr_pgd"; }
    std::string operator()(const DhConfig&) const { return "dh_attack"; }
  };
  return std::visit(Namer{}, cfg);
}

Allocation declared_budget(const AttackConfig& cfg, const Quota& quota) {
  if (std::holds_alternative<IdentityConfig>(cfg)) return {0, 0};
  if (const auto* p = std::get_if<PgdConfig>(&cfg)) {
    const std::uint64_t b = init_backward(p->init) + static_cast<std::uint64_t>(p->steps);
    const std::uint64_t extra = p->init.kind == InitKind::rrt ? 1 : 0;
    return {b, b + 2 + extra};
  }
  // The restart pipelines are budget driven: every query is gated on the
  // sample's remaining allocation.
  return {quota.backward, quota.forward};
}

void validate(const AttackConfig& cfg, const Quota& quota, bool strict) {
  struct Checker {
    void operator()(const IdentityConfig&) const {}
    void operator()(const PgdConfig& c) const {
      require(c.steps >= 1, "pgd needs at least one step");
      check_init(c.init);
      require(c.momentum_decay >= 0.0, "momentum decay must be non-negative");
      require(c.momentum_start >= 0, "momentum start must be non-negative");
      detail::untargeted_loss(c.loss);
    }
    void operator()(const GreenHandConfig& c) const {
      require(c.restarts >= 1, "green hand needs at least one restart");
      require(c.min_iterations >= 1 && c.max_iterations >= c.min_iterations,
              "restart plan must be non-decreasing with at least one iteration");
      require(c.filter_quantile >= 0.0 && c.filter_quantile <= 1.0, "filter quantile must lie in [0,1]");
      require(c.eta_max_eps > 0.0 && c.eta_min_ratio > 0.0 && c.eta_min_ratio <= 1.0, "invalid SGDR step sizes");
      check_init(c.init);
      detail::untargeted_loss(c.loss);
    }
    void operator()(const LafeatStagedConfig& c) const {
      require(c.probe_iterations >= 1 && c.dlr_iterations >= 1, "iteration counts must be positive");
      require(c.dlr_targets >= 1 && c.lafeat_targets >= 1, "target counts must be positive");
      require(c.temperature > 0.0 && c.eta_eps > 0.0, "temperature and step size must be positive");
      require(c.floor_fraction > 0.0, "cos4 floor must be positive");
      require(c.robust_rounds >= 1, "robust branch needs at least one round");
    }
    void operator()(const OiaConfig& c) const {
      require(c.outer_factor > 1.0, "outer radius factor must exceed 1");
      require(c.outer_steps >= 1 && c.pgd_steps >= 1 && c.odi_steps >= 0, "invalid step counts");
      require(c.outer_alpha_eps > 0.0 && c.odi_alpha_eps > 0.0 && c.eta_eps > 0.0, "step sizes must be positive");
      require(c.eta_floor_ratio > 0.0 && c.eta_floor_ratio <= 1.0, "floor ratio must lie in (0,1]");
      require(c.max_restarts >= 0, "max restarts must be non-negative");
      detail::untargeted_loss(c.outer_loss);
      detail::untargeted_loss(c.loss);
    }
    void operator()(const RrtMtMimConfig& c) const {
      require(c.init == InitKind::rrt || c.init == InitKind::odi || c.init == InitKind::uniform,
              "BorderLine init must be rrt, odi or uniform");
      require(c.init_steps >= 0 && c.pgd_steps >= 1, "invalid step counts");
      require(c.init_alpha_eps > 0.0 && c.momentum_decay >= 0.0, "invalid step size or decay");
      require(c.stage_boundary >= 0 && c.max_restarts >= 0, "invalid boundary or restart cap");
    }
    void operator()(const FrPgdConfig& c) const {
      require(c.ratio_a > 0.0 && c.ratio_b >= 0.0, "phase ratio must be positive");
      require(c.odi_steps >= 0 && c.ascent_steps >= 1, "invalid step counts");
      require(c.odi_alpha_eps > 0.0 && c.ascent_eta_eps > 0.0 && c.momentum_decay >= 0.0,
              "invalid step size or decay");
      require(c.max_restarts >= 0, "max restarts must be non-negative");
    }
    void operator()(const DhConfig& c) const {
      require(c.opening_iterations >= 1 && c.restart_iterations >= 1, "iteration counts must be positive");
      require(c.eta_start_eps > 0.0 && c.eta_floor_ratio > 0.0 && c.eta_floor_ratio <= 1.0,
              "invalid cosine schedule");
      require(c.odi_steps >= 0 && c.mt_steps >= 0 && c.odi_alpha_eps > 0.0, "invalid restricted ODI");
      require(c.ema >= 0.0 && c.ema < 1.0, "EMA factor must lie in [0,1)");
      require(c.max_restarts >= -1, "max restarts must be -1 or non-negative");
    }
  };
  std::visit(Checker{}, cfg);
  if (strict) {
    const auto d = declared_budget(cfg, quota);
    if (d.backward > quota.backward || d.forward > quota.forward) {
      throw ConfigError(pipeline_name(cfg) + " declares " + std::to_string(d.backward) + " backward / " +
                        std::to_string(d.forward) + " forward per image, above the quota");
    }
  }
}

AttackOutcome identity_attack(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                              BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("identity");
  return ctx.finish();
}

AttackOutcome pgd(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const PgdConfig& cfg,
                  BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  validate(AttackConfig{cfg}, ledger.quota(), ledger.strict());
  AttackContext ctx(model, batch, tm, ledger, seed, workers);
  ctx.set_pipeline("pgd");
  ctx.clean_pass();
  ctx.begin_phase("ascent");
  AscentPlan plan;
  plan.loss = detail::untargeted_loss(cfg.loss);
  plan.schedule = make_schedule(cfg.step, tm.epsilon, cfg.steps);
  plan.steps = cfg.steps;
  plan.momentum = cfg.momentum;
  plan.momentum_decay = cfg.momentum_decay;
  plan.momentum_start = cfg.momentum_start;
  ctx.for_each_active([&](SampleProbe& p) {
    auto start = detail::start_point(cfg.init, p, tm, 0, std::vector<double>(p.origin().begin(), p.origin().end()));
    if (!p.active()) return;
    ascend(p, std::move(start), plan, tm);
  });
  return ctx.finish();
}

AttackOutcome run_attack(const AttackConfig& cfg, const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                         BudgetLedger& ledger, std::uint64_t seed, unsigned workers) {
  struct Runner {
    const Model& m;
    const ImageBatch& b;
    const ThreatModel& tm;
    BudgetLedger& l;
    std::uint64_t seed;
    unsigned w;
    AttackOutcome operator()(const IdentityConfig&) const { return identity_attack(m, b, tm, l, seed, w); }
    AttackOutcome operator()(const PgdConfig& c) const { return pgd(m, b, tm, c, l, seed, w); }
    AttackOutcome operator()(const GreenHandConfig& c) const { return odi_pgd_sgdr(m, b, tm, c, l, seed, w); }
    AttackOutcome operator()(const LafeatStagedConfig& c) const { return lafeat_staged(m, b, tm, c, l, seed, w); }
    AttackOutcome operator()(const OiaConfig& c) const { return oia_pipeline(m, b, tm, c, l, seed, w); }
    AttackOutcome operator()(const RrtMtMimConfig& c) const { return rrt_mt_mim(m, b, tm, c, l, seed, w); }
    AttackOutcome operator()(const FrPgdConfig& c) const { return fr_pgd(m, b, tm, c, l, seed, w); }
    AttackOutcome operator()(const DhConfig& c) const { return dh_attack(m, b, tm, c, l, seed, w); }
  };
  return std::visit(Runner{model, batch, tm, ledger, seed, workers}, cfg);
}

}  // namespace advbench
