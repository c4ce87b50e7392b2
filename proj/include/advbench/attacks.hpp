#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "advbench/batch.hpp"
#include "advbench/init.hpp"
#include "advbench/ledger.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"
#include "advbench/probe.hpp"
#include "advbench/schedules.hpp"
#include "advbench/threat.hpp"

namespace advbench {

/// Step-size rule in units of epsilon; the period of the resulting schedule
/// is the length of the run it drives.
///  fixed               eta = scale * eps
///  sgdr_cosine         eta_max = scale * eps, eta_min = min_ratio * eta_max
///  cos4                base = scale * eps, floor fraction = min_ratio
///  two_stage           2 eps before `boundary`, eps / 4 after
///  kanra_piecewise     eps, eps / 3, eps / 8
///  cosine_per_restart  start = scale * eps, floor = min_ratio * start
struct StepRule {
  ScheduleKind kind = ScheduleKind::fixed;
  double scale = 0.25;
  double min_ratio = 0.01;
  int boundary = 5;
};

ScheduleSpec make_schedule(const StepRule& rule, double epsilon, int run_length);

/// Single PGD / BIM / MIM run. BIM is init=none, MIM is momentum=true.
struct PgdConfig {
  InitSpec init{InitKind::uniform, 0, 1.0, 0.5};
  LossKind loss = LossKind::cross_entropy;
  StepRule step{ScheduleKind::fixed, 0.25, 0.01, 5};
  int steps = 100;
  bool momentum = false;
  double momentum_decay = 1.0;
  int momentum_start = 0;
};

/// Green hand: ODI restarts with SGDR step sizes and a growing restart
/// length; after the warm-up restart the samples with the lowest margin
/// loss are set aside as robust.
struct GreenHandConfig {
  int restarts = 17;
  int min_iterations = 10;
  int max_iterations = 60;
  InitSpec init{InitKind::biased_odi, 2, 1.0, 0.5};
  LossKind loss = LossKind::margin;
  double eta_max_eps = 1.0;
  double eta_min_ratio = 0.001;
  double filter_quantile = 0.25;
  ReallocationPolicy policy = ReallocationPolicy::even_split;
};

/// UM-SIAT: LAFEAT probe, top-3 DLR-targeted phase, then either top-9
/// targeted LAFEAT or untargeted LAFEAT depending on how sharply the
/// targeted phase dropped the model's accuracy.
struct LafeatStagedConfig {
  int probe_iterations = 10;
  int dlr_targets = 3;
  int dlr_iterations = 10;
  int lafeat_targets = 9;
  double drop_threshold = 0.20;
  double temperature = 1.0;
  double eta_eps = 1.0;
  double floor_fraction = 0.01;
  int robust_rounds = 4;
  ReallocationPolicy policy = ReallocationPolicy::even_split;
};

/// S3L: outside-inside filter, then warm-started ODI-PGD restarts.
struct OiaConfig {
  double outer_factor = 2.0;
  int outer_steps = 5;
  double outer_alpha_eps = 0.5;
  LossKind outer_loss = LossKind::margin;
  int odi_steps = 2;
  double odi_alpha_eps = 1.0;
  int pgd_steps = 20;
  LossKind loss = LossKind::margin;
  double eta_eps = 0.5;
  double eta_floor_ratio = 0.1;
  int max_restarts = 0;  // 0: until the budget is gone
  ReallocationPolicy policy = ReallocationPolicy::even_split;
};

/// BorderLine: RRT init, two-stage step size, momentum in the second
/// stage, one target class per restart. The switches reproduce the
/// ablation ladder.
struct RrtMtMimConfig {
  InitKind init = InitKind::rrt;
  int init_steps = 2;
  double init_alpha_eps = 1.0;
  int pgd_steps = 18;
  bool multi_target = true;
  bool momentum = true;
  double momentum_decay = 1.0;
  int stage_boundary = 5;
  int max_restarts = 0;
  ReallocationPolicy policy = ReallocationPolicy::even_split;
};

/// Kanra: fast restarts (2 ODI + 4 alternating-margin steps) on 4/5 of the
/// budget, then a momentum convergence phase on the rest.
struct FrPgdConfig {
  int odi_steps = 2;
  double odi_alpha_eps = 1.0;
  int ascent_steps = 4;
  double ascent_eta_eps = 0.5;
  double ratio_a = 4.0;
  double ratio_b = 1.0;
  double momentum_decay = 1.0;
  int max_restarts = 0;
  ReallocationPolicy policy = ReallocationPolicy::even_split;
};

/// BalaBala: 10-step opening pass, then restricted-ODI restarts with a
/// random loss per restart and a shared global perturbation tried for free.
struct DhConfig {
  int opening_iterations = 10;
  int restart_iterations = 20;
  double eta_start_eps = 0.5;
  double eta_floor_ratio = 0.01;
  int odi_steps = 5;
  int mt_steps = 5;
  double odi_alpha_eps = 0.5;
  double ema = 0.9;
  int max_restarts = -1;  // -1: until the budget is gone
  ReallocationPolicy policy = ReallocationPolicy::even_split;
};

/// Returns the clean inputs, no queries.
struct IdentityConfig {};

using AttackConfig =
    std::variant<IdentityConfig, PgdConfig, GreenHandConfig, LafeatStagedConfig, OiaConfig, RrtMtMimConfig,
                 FrPgdConfig, DhConfig>;

/// "identity", "pgd", "odi_pgd_sgdr", "lafeat_staged", "oia_pipeline",
/// "rrt_mt_mim", "fr_pgd", "dh_attack".
std::string pipeline_name(const AttackConfig& cfg);

/// Worst-case per-image cost of one run under the initial allocation.
Allocation declared_budget(const AttackConfig& cfg, const Quota& quota);

/// Throws ConfigError on invalid parameters, or when strict and the
/// declared budget exceeds the quota.
void validate(const AttackConfig& cfg, const Quota& quota, bool strict);

AttackOutcome identity_attack(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                              BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);
AttackOutcome pgd(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const PgdConfig& cfg,
                  BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);
AttackOutcome odi_pgd_sgdr(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                           const GreenHandConfig& cfg, BudgetLedger& ledger, std::uint64_t seed,
                           unsigned workers = 1);
AttackOutcome lafeat_staged(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                            const LafeatStagedConfig& cfg, BudgetLedger& ledger, std::uint64_t seed,
                            unsigned workers = 1);
AttackOutcome oia_pipeline(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const OiaConfig& cfg,
                           BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);
AttackOutcome rrt_mt_mim(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                         const RrtMtMimConfig& cfg, BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);
AttackOutcome fr_pgd(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const FrPgdConfig& cfg,
                     BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);
AttackOutcome dh_attack(const Model& model, const ImageBatch& batch, const ThreatModel& tm, const DhConfig& cfg,
                        BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);

AttackOutcome run_attack(const AttackConfig& cfg, const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                         BudgetLedger& ledger, std::uint64_t seed, unsigned workers = 1);

/// Green hand's restart lengths: linear from min to max iterations.
std::vector<int> restart_lengths(const GreenHandConfig& cfg);

}  // namespace advbench
