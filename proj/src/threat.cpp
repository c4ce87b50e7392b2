#include "advbench/threat.hpp"

#include <algorithm>
#include <cmath>

#include "advbench/errors.hpp"

namespace advbench {

ThreatModel::ThreatModel(double eps) : epsilon(eps) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive and finite");
}

void project_inplace(std::span<double> x_adv, std::span<const double> x_orig, const ThreatModel& tm) {
  if (x_adv.size() != x_orig.size()) throw ConfigError("projection shapes differ");
  for (std::size_t k = 0; k < x_adv.size(); ++k) {
    const double lo = std::max(x_orig[k] - tm.epsilon, tm.box_low);
    const double hi = std::min(x_orig[k] + tm.epsilon, tm.box_high);
    const double v = std::isnan(x_adv[k]) ? x_orig[k] : x_adv[k];
    x_adv[k] = std::min(std::max(v, lo), hi);
  }
}

std::vector<double> project(std::span<const double> x_adv, std::span<const double> x_orig, const ThreatModel& tm) {
  std::vector<double> out(x_adv.begin(), x_adv.end());
  project_inplace(out, x_orig, tm);
  return out;
}

std::vector<double> project_batch(std::span<const double> x_adv, const ImageBatch& orig, const ThreatModel& tm) {
  if (x_adv.size() != orig.data.size()) throw ConfigError("projection shapes differ");
  std::vector<double> out(x_adv.begin(), x_adv.end());
  for (std::size_t i = 0; i < orig.rows; ++i) {
    project_inplace(std::span<double>(out.data() + i * orig.dim, orig.dim), orig.row(i), tm);
  }
  return out;
}

bool is_feasible(std::span<const double> x_adv, std::span<const double> x_orig, const ThreatModel& tm,
                 double tol) {
  if (x_adv.size() != x_orig.size()) return false;
  for (std::size_t k = 0; k < x_adv.size(); ++k) {
    const double v = x_adv[k];
    if (!(std::abs(v - x_orig[k]) <= tm.epsilon + tol)) return false;
    if (!(v >= tm.box_low - tol && v <= tm.box_high + tol)) return false;
  }
  return true;
}

std::vector<bool> is_feasible_batch(std::span<const double> x_adv, const ImageBatch& orig, const ThreatModel& tm,
                                    double tol) {
  std::vector<bool> out(orig.rows, false);
  if (x_adv.size() != orig.data.size()) return out;
  for (std::size_t i = 0; i < orig.rows; ++i) {
    out[i] = is_feasible(x_adv.subspan(i * orig.dim, orig.dim), orig.row(i), tm, tol);
  }
  return out;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace advbench
