#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace advbench {

/// Row-major (n, d) inputs in [0,1] with one label per row.
struct ImageBatch {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> data;
  std::vector<int> labels;

  ImageBatch() = default;
  ImageBatch(std::size_t n, std::size_t d, std::size_t classes)
      : rows(n), dim(d), num_classes(classes), data(n * d, 0.0), labels(n, 0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }

  bool empty() const { return rows == 0; }

  /// Throws ConfigError when a value leaves [0,1], a label is out of range,
  /// or the storage does not match (rows, dim).
  void validate() const;

  /// Copy of the selected rows, in the given order.
  ImageBatch select(std::span<const std::size_t> indices) const;
};

/// Row-major (n, C) pre-softmax scores.
struct Logits {
  std::size_t rows = 0;
  std::size_t num_classes = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * num_classes, num_classes};
  }
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> z);

/// argmax(z) != label.
bool misclassified(std::span<const double> z, int label);

/// Largest logit over classes other than `label`, ties to the lowest index.
std::size_t best_wrong_class(std::span<const double> z, int label);

}  // namespace advbench
