#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace advbench {

/// Attack objectives. Every loss is maximized by the attacks.
enum class LossKind {
  cross_entropy,
  margin,           // CW: best wrong logit minus true logit
  margin_targeted,  // sum over targets of (z_t - z_y)
  dlr,
  dlr_targeted,
  lafeat,
  lafeat_targeted,
  md_phase,          // alternating margin components, indexed by (step, restart)
  rrt_cosine,        // cosine(z, reference)
  output_direction,  // w . z, the ODI objective
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::cross_entropy;
  /// Target classes for the targeted kinds. margin_targeted sums over all of
  /// them; dlr_targeted and lafeat_targeted take exactly one.
  std::vector<int> targets;
  /// Divisor t of the targeted LAFEAT objective.
  double temperature = 1.0;
  /// md_phase selector: step k in [0, K), K steps per restart, restart index r.
  int step = 0;
  int steps_per_restart = 1;
  int restart = 1;
  /// Reference logits for rrt_cosine, direction w for output_direction.
  std::vector<double> reference;

  static LossSpec cross_entropy() { return {}; }
  static LossSpec margin() { return with(LossKind::margin); }
  static LossSpec margin_targeted(std::vector<int> targets);
  static LossSpec dlr() { return with(LossKind::dlr); }
  static LossSpec dlr_targeted(int target);
  static LossSpec lafeat() { return with(LossKind::lafeat); }
  static LossSpec lafeat_targeted(int target, double temperature = 1.0);
  static LossSpec md_phase(int step, int steps_per_restart, int restart);
  static LossSpec rrt_cosine(std::vector<double> reference_logits);
  static LossSpec output_direction(std::vector<double> direction);

  /// Throws ConfigError when the spec cannot be evaluated for this
  /// (class count, label) pair.
  void validate(std::size_t num_classes, int label) const;

 private:
  static LossSpec with(LossKind k) {
    LossSpec s;
    s.kind = k;
    return s;
  }
};

/// Value and gradient with respect to the logits.
struct LossValue {
  double value = 0.0;
  std::vector<double> grad;
  /// The objective is undefined at this point: LAFEAT with a non-positive
  /// true-class margin, or cosine with a zero-norm logit vector.
  bool degenerate = false;
};

inline constexpr double kDlrStabilizer = 1e-12;
inline constexpr double kLafeatMarginFloor = 1e-12;

LossValue evaluate_loss(const LossSpec& spec, std::span<const double> z, int label);

/// Distance of z to the nearest point where the loss switches branch
/// (argmax or sort order changes, LAFEAT margin reaches zero). Infinity for
/// losses that are smooth in z.
double selection_gap(const LossSpec& spec, std::span<const double> z, int label);

// Scalar forms.
double log_sum_exp(std::span<const double> v);
double cross_entropy(std::span<const double> z, int label);
double margin_loss(std::span<const double> z, int label);
double dlr_loss(std::span<const double> z, int label);
double lafeat_loss(std::span<const double> z, int label);
double lafeat_targeted(std::span<const double> z, int label, int target, double temperature = 1.0);
double md_phase_loss(std::span<const double> z, int label, int step, int steps_per_restart,
                     int restart);
double rrt_cosine(std::span<const double> z, std::span<const double> reference);

}  // namespace advbench
