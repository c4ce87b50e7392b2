#include "advbench/probe.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "advbench/errors.hpp"
#include "advbench/parallel.hpp"

namespace advbench {

std::size_t AttackOutcome::count(SampleStatus s) const {
  std::size_t c = 0;
  for (auto v : status) c += v == s ? 1 : 0;
  return c;
}

AttackContext::AttackContext(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                             BudgetLedger& ledger, std::uint64_t seed, unsigned workers)
    : model_(model), batch_(batch), tm_(tm), ledger_(ledger), seed_(seed), workers_(workers == 0 ? 1 : workers) {
  batch.validate();
  if (batch.dim != model.input_dim()) {
    throw ConfigError("batch dimension " + std::to_string(batch.dim) + " does not match model input " +
                      std::to_string(model.input_dim()));
  }
  if (batch.num_classes != model.num_classes()) {
    throw ConfigError("batch has " + std::to_string(batch.num_classes) + " classes, model has " +
                      std::to_string(model.num_classes()));
  }
  if (ledger.size() != batch.rows) throw ConfigError("ledger size does not match the batch");
  states_.resize(batch.rows);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const auto x = batch.row(i);
    states_[i].candidate.assign(x.begin(), x.end());
    states_[i].best_loss = -std::numeric_limits<double>::infinity();
  }
}

void AttackContext::clean_pass() {
  begin_phase("clean");
  parallel_for(size(), workers_, [&](std::size_t i) {
    auto p = probe(i);
    auto z = p.forward(batch_.row(i));
    if (!z) throw ConfigError("forward quota leaves no room for the clean pass");
    states_[i].clean_logits = *z;
  });
}

std::vector<std::size_t> AttackContext::active_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].status == SampleStatus::active) out.push_back(i);
  }
  return out;
}

std::size_t AttackContext::count(SampleStatus s) const {
  std::size_t c = 0;
  for (const auto& st : states_) c += st.status == s ? 1 : 0;
  return c;
}

std::vector<SampleStatus> AttackContext::statuses() const {
  std::vector<SampleStatus> out;
  out.reserve(states_.size());
  for (const auto& st : states_) out.push_back(st.status);
  return out;
}

SampleProbe AttackContext::probe(std::size_t i) { return SampleProbe(*this, i); }

void AttackContext::for_each_active(const std::function<void(SampleProbe&)>& fn) {
  const auto idx = active_indices();
  parallel_for(idx.size(), workers_, [&](std::size_t a) {
    SampleProbe p(*this, idx[a]);
    fn(p);
  });
}

void AttackContext::begin_phase(const std::string& name) {
  phase_ = name;
  ledger_.set_phase(pipeline_ + "/" + name);
}

void AttackContext::reallocate(ReallocationPolicy policy) {
  const auto rec = ledger_.reallocate(statuses(), policy);
  PhaseRecord pr;
  pr.name = phase_;
  pr.backward_allocation = rec.total_backward_allocation;
  pr.forward_allocation = rec.total_forward_allocation;
  pr.moved_backward = rec.moved_backward;
  pr.active = count(SampleStatus::active);
  pr.succeeded = count(SampleStatus::succeeded);
  pr.filtered = count(SampleStatus::filtered_robust);
  pr.backward_used.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) pr.backward_used.push_back(ledger_.backward(i));
  phases_.push_back(pr);
}

AttackOutcome AttackContext::finish() {
  AttackOutcome out;
  out.rows = batch_.rows;
  out.dim = batch_.dim;
  out.candidates.reserve(batch_.rows * batch_.dim);
  for (std::size_t i = 0; i < states_.size(); ++i) {
    auto& st = states_[i];
    if (st.status == SampleStatus::active && ledger_.remaining_backward(i) == 0) st.status = SampleStatus::exhausted;
    out.candidates.insert(out.candidates.end(), st.candidate.begin(), st.candidate.end());
    out.status.push_back(st.status);
    out.best_loss.push_back(st.best_loss);
    out.loss_traces.push_back(st.trace);
  }
  out.usage = ledger_.usage();
  out.phases = phases_;
  out.notes = notes_;
  return out;
}

void SampleProbe::observe(std::span<const double> x, std::span<const double> z) {
  auto& st = ctx_->state(i_);
  if (!is_feasible(x, origin(), threat(), 1e-9)) {
    throw std::logic_error("committed query outside the threat model");
  }
  const double m = margin_loss(z, label());
  if (misclassified(z, label())) {
    if (st.status == SampleStatus::active) {
      st.status = SampleStatus::succeeded;
      st.candidate.assign(x.begin(), x.end());
    }
    st.best_loss = std::max(st.best_loss, m);
  } else if (m > st.best_loss && st.status != SampleStatus::succeeded) {
    st.best_loss = m;
    st.candidate.assign(x.begin(), x.end());
  }
  st.trace.push_back(st.best_loss);
}

std::optional<GradientEval> SampleProbe::gradient(std::span<const double> x, const LossSpec& loss, bool commit) {
  if (!can_backward()) return std::nullopt;
  ctx_->ledger().charge_backward(i_);
  auto g = ctx_->model().input_gradient(x, loss, label());
  if (commit) observe(x, g.logits);
  return g;
}

std::optional<std::vector<double>> SampleProbe::forward(std::span<const double> x, bool commit) {
  if (!can_forward()) return std::nullopt;
  ctx_->ledger().charge_forward(i_);
  auto z = ctx_->model().logits(x);
  if (commit) observe(x, z);
  return z;
}

void SampleProbe::mark_filtered() {
  auto& st = ctx_->state(i_);
  if (st.status == SampleStatus::active) st.status = SampleStatus::filtered_robust;
}

void signed_step(std::vector<double>& x, std::span<const double> direction, double eta,
                 std::span<const double> origin, const ThreatModel& tm) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = direction[k];
    const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    x[k] += eta * s;
  }
  project_inplace(x, origin, tm);
}

AscentResult ascend(SampleProbe& probe, std::vector<double> start, const AscentPlan& plan, const ThreatModel& tm) {
  AscentResult res;
  std::vector<double> x = std::move(start);
  std::vector<double> buffer(x.size(), 0.0);
  bool finished = true;
  for (int s = 0; s < plan.steps; ++s) {
    if (!probe.active()) {
      finished = false;
      break;
    }
    LossSpec loss = plan.loss;
    if (loss.kind == LossKind::md_phase) loss.step = s % loss.steps_per_restart;
    auto g = probe.gradient(x, loss, plan.commit);
    if (!g) {
      res.budget_stopped = true;
      finished = false;
      break;
    }
    ++res.steps_taken;
    if (plan.commit && !probe.active()) {
      finished = false;
      break;
    }
    std::span<const double> dir = g->grad;
    if (plan.momentum && s >= plan.momentum_start) {
      double l1 = 0.0;
      for (double v : g->grad) l1 += std::abs(v);
      for (std::size_t k = 0; k < buffer.size(); ++k) {
        buffer[k] = plan.momentum_decay * buffer[k] + (l1 > 0.0 ? g->grad[k] / l1 : 0.0);
      }
      dir = buffer;
    }
    if (plan.observer) plan.observer(s, x, buffer);
    signed_step(x, dir, step_size(plan.schedule, s), probe.origin(), tm);
  }
  if (finished && plan.final_check && plan.steps > 0) {
    if (!probe.forward(x, plan.commit)) res.budget_stopped = true;
  }
  res.point = std::move(x);
  return res;
}

Logits metered_forward(const Model& model, const ImageBatch& batch, BudgetLedger& ledger) {
  if (ledger.size() != batch.rows) throw ConfigError("ledger size does not match the batch");
  for (std::size_t i = 0; i < batch.rows; ++i) ledger.charge_forward(i);
  return model.forward(batch);
}

BatchGradient metered_input_gradient(const Model& model, const ImageBatch& batch, const LossSpec& loss,
                                     BudgetLedger& ledger) {
  if (ledger.size() != batch.rows) throw ConfigError("ledger size does not match the batch");
  BatchGradient out;
  out.grad.reserve(batch.rows * batch.dim);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    ledger.charge_backward(i);
    auto g = model.input_gradient(batch.row(i), loss, batch.labels[i]);
    out.grad.insert(out.grad.end(), g.grad.begin(), g.grad.end());
    out.loss.push_back(g.loss);
    out.degenerate.push_back(g.degenerate);
  }
  return out;
}

}  // namespace advbench
