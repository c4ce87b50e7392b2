#include "advbench/batch.hpp"

#include <algorithm>
#include <string>

#include "advbench/errors.hpp"

namespace advbench {

void ImageBatch::validate() const {
  if (data.size() != rows * dim) throw ConfigError("batch storage does not match its shape");
  if (labels.size() != rows) throw ConfigError("batch needs one label per row");
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("batch value outside [0,1]: " + std::to_string(v));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

ImageBatch ImageBatch::select(std::span<const std::size_t> indices) const {
  ImageBatch out(indices.size(), dim, num_classes);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
    out.labels[k] = labels[indices[k]];
  }
  return out;
}

std::size_t argmax(std::span<const double> z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

bool misclassified(std::span<const double> z, int label) {
  return argmax(z) != static_cast<std::size_t>(label);
}

std::size_t best_wrong_class(std::span<const double> z, int label) {
  const auto y = static_cast<std::size_t>(label);
  std::size_t best = (y == 0) ? 1 : 0;
  for (std::size_t i = best + 1; i < z.size(); ++i) {
    if (i != y && z[i] > z[best]) best = i;
  }
  return best;
}

}  // namespace advbench
