#pragma once

#include <cstddef>
#include <cstdint>

#include "advbench/batch.hpp"

namespace advbench {

/// Isotropic Gaussian clusters, one per class, clipped to [0,1]. Class
/// centres are uniform in [center_low, center_high]^d, redrawn until every
/// pair is at least min_separation apart (Euclidean); labels cycle 0..C-1.
/// Values are rounded to float32 so the batch survives a dataset-file
/// round trip unchanged.
struct BlobSpec {
  std::size_t rows = 256;
  std::size_t dim = 2;
  std::size_t classes = 2;
  double spread = 0.1;
  double center_low = 0.25;
  double center_high = 0.75;
  double min_separation = 0.2;
  std::uint64_t seed = 0;
};

ImageBatch gaussian_blobs(const BlobSpec& spec);

}  // namespace advbench
