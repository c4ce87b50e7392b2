#include "advbench/ledger.hpp"

#include <algorithm>

#include "advbench/errors.hpp"

namespace advbench {

namespace {

/// Splits `pool` among receivers according to `weights` (equal weights when
/// all are zero); floor shares first, then one unit each to the lowest
/// indices until the pool is used up.
std::vector<std::uint64_t> split_pool(std::uint64_t pool, const std::vector<std::uint64_t>& weights) {
  const std::size_t k = weights.size();
  std::vector<std::uint64_t> share(k, 0);
  if (k == 0 || pool == 0) return share;
  unsigned __int128 total = 0;
  for (auto w : weights) total += w;
  std::uint64_t given = 0;
  for (std::size_t a = 0; a < k; ++a) {
    share[a] = total == 0 ? pool / k
                          : static_cast<std::uint64_t>(static_cast<unsigned __int128>(pool) * weights[a] / total);
    given += share[a];
  }
  for (std::size_t a = 0; given < pool; a = (a + 1) % k, ++given) ++share[a];
  return share;
}

}  // namespace

std::string to_string(SampleStatus s) {
  switch (s) {
    case SampleStatus::active:
      return "active";
    case SampleStatus::succeeded:
      return "succeeded";
    case SampleStatus::filtered_robust:
      return "filtered_robust";
    case SampleStatus::exhausted:
      return "exhausted";
  }
  return "active";
}

SampleStatus sample_status_from_string(const std::string& name) {
  for (auto s : {SampleStatus::active, SampleStatus::succeeded, SampleStatus::filtered_robust, SampleStatus::exhausted}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown sample status '" + name + "'");
}

std::string to_string(ReallocationPolicy p) {
  return p == ReallocationPolicy::even_split ? "even_split" : "proportional";
}

ReallocationPolicy reallocation_policy_from_string(const std::string& name) {
  if (name == "even_split") return ReallocationPolicy::even_split;
  if (name == "proportional") return ReallocationPolicy::proportional;
  throw ConfigError("unknown reallocation policy '" + name + "'");
}

BudgetLedger::BudgetLedger(std::size_t images, Quota quota, bool strict)
    : quota_(quota),
      strict_(strict),
      forward_(images),
      backward_(images),
      alloc_forward_(images, quota.forward),
      alloc_backward_(images, quota.backward) {}

void BudgetLedger::charge(std::size_t image, bool backward_pass) {
  if (image >= size()) throw ConfigError("ledger has no image " + std::to_string(image));
  const std::uint64_t f = forward_[image].fetch_add(1) + 1;
  const std::uint64_t b = backward_pass ? backward_[image].fetch_add(1) + 1 : backward_[image].load();
  if (strict_ && (f > alloc_forward_[image] || b > alloc_backward_[image])) {
    forward_[image].fetch_sub(1);
    if (backward_pass) backward_[image].fetch_sub(1);
    throw BudgetExceeded(phase_, "image " + std::to_string(image) + " would reach " + std::to_string(b) +
                                     " backward / " + std::to_string(f) + " forward, allocation is " +
                                     std::to_string(alloc_backward_[image]) + " / " +
                                     std::to_string(alloc_forward_[image]));
  }
}

void BudgetLedger::charge_forward(std::size_t image) { charge(image, false); }
void BudgetLedger::charge_backward(std::size_t image) { charge(image, true); }

void BudgetLedger::charge_forward(std::span<const std::size_t> images) {
  for (auto i : images) charge(i, false);
}

void BudgetLedger::charge_backward(std::span<const std::size_t> images) {
  for (auto i : images) charge(i, true);
}

std::uint64_t BudgetLedger::remaining_backward(std::size_t image) const {
  const auto used = backward_[image].load();
  return used >= alloc_backward_[image] ? 0 : alloc_backward_[image] - used;
}

std::uint64_t BudgetLedger::remaining_forward(std::size_t image) const {
  const auto used = forward_[image].load();
  return used >= alloc_forward_[image] ? 0 : alloc_forward_[image] - used;
}

std::uint64_t BudgetLedger::total_backward_allocation() const {
  std::uint64_t s = 0;
  for (auto a : alloc_backward_) s += a;
  return s;
}

std::uint64_t BudgetLedger::total_forward_allocation() const {
  std::uint64_t s = 0;
  for (auto a : alloc_forward_) s += a;
  return s;
}

ReallocationRecord BudgetLedger::reallocate(std::span<const SampleStatus> states, ReallocationPolicy policy) {
  if (states.size() != size()) throw ConfigError("reallocation needs one status per image");
  ReallocationRecord rec;
  std::vector<std::size_t> receivers;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == SampleStatus::active) receivers.push_back(i);
  }
  rec.receivers = receivers.size();
  if (!receivers.empty()) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i] == SampleStatus::active) continue;
      const auto rb = remaining_backward(i);
      const auto rf = remaining_forward(i);
      alloc_backward_[i] -= rb;
      alloc_forward_[i] -= rf;
      rec.moved_backward += rb;
      rec.moved_forward += rf;
    }
    std::vector<std::uint64_t> wb, wf;
    for (auto i : receivers) {
      wb.push_back(policy == ReallocationPolicy::proportional ? alloc_backward_[i] : 1);
      wf.push_back(policy == ReallocationPolicy::proportional ? alloc_forward_[i] : 1);
    }
    const auto sb = split_pool(rec.moved_backward, wb);
    const auto sf = split_pool(rec.moved_forward, wf);
    for (std::size_t a = 0; a < receivers.size(); ++a) {
      alloc_backward_[receivers[a]] += sb[a];
      alloc_forward_[receivers[a]] += sf[a];
    }
  }
  rec.total_backward_allocation = total_backward_allocation();
  rec.total_forward_allocation = total_forward_allocation();
  return rec;
}

UsageReport BudgetLedger::usage() const {
  UsageReport r;
  r.images = size();
  r.backward.resize(size());
  r.forward.resize(size());
  for (std::size_t i = 0; i < size(); ++i) {
    r.backward[i] = backward_[i].load();
    r.forward[i] = forward_[i].load();
    r.total_backward += r.backward[i];
    r.total_forward += r.forward[i];
    r.max_backward = std::max(r.max_backward, r.backward[i]);
    r.max_forward = std::max(r.max_forward, r.forward[i]);
  }
  if (size() > 0) {
    r.avg_backward = static_cast<double>(r.total_backward) / static_cast<double>(size());
    r.avg_forward = static_cast<double>(r.total_forward) / static_cast<double>(size());
  }
  return r;
}

bool BudgetLedger::within_quota() const {
  const auto u = usage();
  return u.total_backward <= quota_.backward * size() && u.total_forward <= quota_.forward * size();
}

void BudgetLedger::check_quota() const {
  if (strict_ && !within_quota()) {
    const auto u = usage();
    throw BudgetExceeded(phase_, "average usage " + std::to_string(u.avg_backward) + " backward / " +
                                     std::to_string(u.avg_forward) + " forward exceeds the quota");
  }
}

}  // namespace advbench
