#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advbench/batch.hpp"
#include "advbench/ledger.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"
#include "advbench/rng.hpp"
#include "advbench/schedules.hpp"
#include "advbench/threat.hpp"

namespace advbench {

/// One entry per reallocation point of a pipeline run.
struct PhaseRecord {
  std::string name;
  std::uint64_t backward_allocation = 0;
  std::uint64_t forward_allocation = 0;
  std::uint64_t moved_backward = 0;
  std::size_t active = 0;
  std::size_t succeeded = 0;
  std::size_t filtered = 0;
  /// Per-sample backward passes charged when the phase closed. Kept in
  /// memory only; reports carry the totals.
  std::vector<std::uint64_t> backward_used;
};

/// What an attack returns: one candidate per sample (always inside the
/// threat model), its final status and the budget it consumed.
struct AttackOutcome {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> candidates;
  std::vector<SampleStatus> status;
  /// Best canonical margin loss at any committed point, per sample.
  std::vector<double> best_loss;
  /// Best-so-far margin loss after every committed evaluation; the first
  /// entry is the clean point.
  std::vector<std::vector<double>> loss_traces;
  UsageReport usage;
  std::vector<PhaseRecord> phases;
  std::vector<std::string> notes;
  /// dh_attack only: the shared perturbation at the end of the run.
  std::vector<double> global_perturbation;

  std::span<const double> candidate(std::size_t i) const { return {candidates.data() + i * dim, dim}; }
  std::size_t count(SampleStatus s) const;
};

/// Mutable per-sample attack state.
struct SampleState {
  SampleStatus status = SampleStatus::active;
  std::vector<double> candidate;
  double best_loss = 0.0;
  std::vector<double> trace;
  std::vector<double> clean_logits;
};

class SampleProbe;

/// Shared state of one attack run over one batch: the model, the ledger, the
/// per-sample best candidates and statuses.
class AttackContext {
 public:
  AttackContext(const Model& model, const ImageBatch& batch, const ThreatModel& tm, BudgetLedger& ledger,
                std::uint64_t seed, unsigned workers = 1);

  const Model& model() const { return model_; }
  const ImageBatch& batch() const { return batch_; }
  const ThreatModel& threat() const { return tm_; }
  BudgetLedger& ledger() { return ledger_; }
  std::uint64_t seed() const { return seed_; }
  unsigned workers() const { return workers_; }
  std::size_t size() const { return states_.size(); }

  /// One charged forward per image at the clean input. Samples that are
  /// already misclassified are marked succeeded.
  void clean_pass();

  SampleState& state(std::size_t i) { return states_[i]; }
  const SampleState& state(std::size_t i) const { return states_[i]; }
  std::vector<std::size_t> active_indices() const;
  std::size_t count(SampleStatus s) const;
  std::vector<SampleStatus> statuses() const;

  SampleProbe probe(std::size_t i);

  /// Runs fn on every currently active sample, possibly in parallel. fn must
  /// only touch its own sample.
  void for_each_active(const std::function<void(SampleProbe&)>& fn);

  /// Names the ledger phase, "<pipeline>/<phase>".
  void begin_phase(const std::string& name);
  void set_pipeline(const std::string& name) { pipeline_ = name; }
  const std::string& phase() const { return phase_; }

  /// Moves unspent budget of finished samples to active ones and logs the
  /// allocation sums.
  void reallocate(ReallocationPolicy policy);

  void note(std::string text) { notes_.push_back(std::move(text)); }

  /// Active samples without backward budget become exhausted.
  AttackOutcome finish();

 private:
  const Model& model_;
  const ImageBatch& batch_;
  ThreatModel tm_;
  BudgetLedger& ledger_;
  std::uint64_t seed_;
  unsigned workers_;
  std::string pipeline_ = "attack";
  std::string phase_;
  std::vector<SampleState> states_;
  std::vector<PhaseRecord> phases_;
  std::vector<std::string> notes_;
};

/// Metered access to the model for a single sample. Every query is charged
/// to the sample's ledger entry and returns nullopt when the allocation is
/// used up. Committed queries must be at points inside the attack's threat
/// model; their logits are checked for success and the best candidate is
/// updated. Uncommitted queries are charged but never recorded.
class SampleProbe {
 public:
  SampleProbe(AttackContext& ctx, std::size_t index) : ctx_(&ctx), i_(index) {}

  std::size_t index() const { return i_; }
  std::span<const double> origin() const { return ctx_->batch().row(i_); }
  int label() const { return ctx_->batch().labels[i_]; }
  std::size_t num_classes() const { return ctx_->model().num_classes(); }
  const ThreatModel& threat() const { return ctx_->threat(); }
  const SampleState& state() const { return ctx_->state(i_); }
  AttackContext& context() { return *ctx_; }

  bool active() const { return state().status == SampleStatus::active; }
  bool can_backward() const { return ctx_->ledger().can_backward(i_); }
  bool can_forward() const { return ctx_->ledger().can_forward(i_); }
  std::uint64_t remaining_backward() const { return ctx_->ledger().remaining_backward(i_); }

  std::optional<GradientEval> gradient(std::span<const double> x, const LossSpec& loss, bool commit = true);
  std::optional<std::vector<double>> forward(std::span<const double> x, bool commit = true);

  void mark_filtered();

  /// Stream for this sample at the given restart and purpose.
  Rng rng(std::uint64_t restart, std::uint64_t purpose) const {
    return Rng(ctx_->seed(), i_, restart, purpose);
  }

 private:
  void observe(std::span<const double> x, std::span<const double> z);

  AttackContext* ctx_;
  std::size_t i_;
};

using StepObserver = std::function<void(int step, std::span<const double> x, std::span<const double> momentum)>;

/// Inner loop shared by every pipeline: gradient at x_s (success checked on
/// the same pass), optional L1-normalised momentum from `momentum_start`,
/// signed step with the scheduled size, projection. After the last step the
/// final point gets one forward check.
struct AscentPlan {
  LossSpec loss;
  ScheduleSpec schedule;
  int steps = 0;
  bool momentum = false;
  double momentum_decay = 1.0;
  int momentum_start = 0;
  bool final_check = true;
  bool commit = true;
  StepObserver observer;
};

struct AscentResult {
  std::vector<double> point;
  int steps_taken = 0;
  bool budget_stopped = false;
};

AscentResult ascend(SampleProbe& probe, std::vector<double> start, const AscentPlan& plan, const ThreatModel& tm);

/// Charged batch forward: one forward per row.
Logits metered_forward(const Model& model, const ImageBatch& batch, BudgetLedger& ledger);

struct BatchGradient {
  std::vector<double> grad;  // rows * dim
  std::vector<double> loss;
  std::vector<bool> degenerate;
};

/// Charged batch input gradient: one backward (and its forward) per row.
BatchGradient metered_input_gradient(const Model& model, const ImageBatch& batch, const LossSpec& loss,
                                     BudgetLedger& ledger);

/// Signed step x + eta * sign(direction), projected; sign(0) is 0.
void signed_step(std::vector<double>& x, std::span<const double> direction, double eta, std::span<const double> origin,
                 const ThreatModel& tm);

}  // namespace advbench
