#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace advbench {

enum class SampleStatus { active, succeeded, filtered_robust, exhausted };

std::string to_string(SampleStatus s);
SampleStatus sample_status_from_string(const std::string& name);

/// Per-image average limits. A backward pass always costs one backward and
/// one forward unit.
struct Quota {
  std::uint64_t backward = 100;
  std::uint64_t forward = 200;
};

enum class ReallocationPolicy { even_split, proportional };

std::string to_string(ReallocationPolicy p);
ReallocationPolicy reallocation_policy_from_string(const std::string& name);

struct Allocation {
  std::uint64_t backward = 0;
  std::uint64_t forward = 0;
};

struct UsageReport {
  std::size_t images = 0;
  double avg_backward = 0.0;
  double avg_forward = 0.0;
  std::uint64_t max_backward = 0;
  std::uint64_t max_forward = 0;
  std::uint64_t total_backward = 0;
  std::uint64_t total_forward = 0;
  std::vector<std::uint64_t> backward;
  std::vector<std::uint64_t> forward;
};

struct ReallocationRecord {
  std::uint64_t moved_backward = 0;
  std::uint64_t moved_forward = 0;
  std::size_t receivers = 0;
  std::uint64_t total_backward_allocation = 0;
  std::uint64_t total_forward_allocation = 0;
};

/// Per-image forward/backward counters plus per-image allocations.
///
/// Every image starts with an allocation equal to the quota, so the sum of
/// allocations is exactly n * quota; reallocation moves unspent allocation
/// between images without changing that sum. Counters are atomic and may be
/// charged from parallel per-sample workers. Allocations change only in
/// reallocate(), which must run while no worker is charging.
///
/// In strict mode a charge that would take an image past its allocation
/// throws BudgetExceeded naming the current phase; otherwise the charge is
/// recorded and the dataset-level average is the only limit.
class BudgetLedger {
 public:
  BudgetLedger(std::size_t images, Quota quota = {}, bool strict = false);

  std::size_t size() const { return backward_.size(); }
  const Quota& quota() const { return quota_; }
  bool strict() const { return strict_; }

  void set_phase(std::string phase) { phase_ = std::move(phase); }
  const std::string& phase() const { return phase_; }

  void charge_forward(std::size_t image);
  void charge_backward(std::size_t image);
  void charge_forward(std::span<const std::size_t> images);
  void charge_backward(std::span<const std::size_t> images);

  std::uint64_t forward(std::size_t image) const { return forward_[image].load(); }
  std::uint64_t backward(std::size_t image) const { return backward_[image].load(); }

  Allocation allocation(std::size_t image) const { return {alloc_backward_[image], alloc_forward_[image]}; }
  std::uint64_t remaining_backward(std::size_t image) const;
  std::uint64_t remaining_forward(std::size_t image) const;
  /// A backward needs one unit of each allocation.
  bool can_backward(std::size_t image) const {
    return remaining_backward(image) >= 1 && remaining_forward(image) >= 1;
  }
  bool can_forward(std::size_t image) const { return remaining_forward(image) >= 1; }

  std::uint64_t total_backward_allocation() const;
  std::uint64_t total_forward_allocation() const;

  /// Moves the unspent allocation of every non-active image to the active
  /// ones. even_split gives each receiver pool / k with the remainder going
  /// one unit at a time to the lowest indices; proportional splits in
  /// proportion to the receivers' current allocations with the same
  /// remainder rule. No active images: nothing changes.
  ReallocationRecord reallocate(std::span<const SampleStatus> states, ReallocationPolicy policy);

  UsageReport usage() const;
  /// Dataset averages within the quota.
  bool within_quota() const;
  /// Throws BudgetExceeded when strict and the averages exceed the quota.
  void check_quota() const;

 private:
  void charge(std::size_t image, bool backward_pass);

  Quota quota_;
  bool strict_;
  std::string phase_ = "setup";
  std::vector<std::atomic<std::uint64_t>> forward_;
  std::vector<std::atomic<std::uint64_t>> backward_;
  std::vector<std::uint64_t> alloc_forward_;
  std::vector<std::uint64_t> alloc_backward_;
};

}  // namespace advbench
