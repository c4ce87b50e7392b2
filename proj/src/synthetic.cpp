#include "advbench/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "advbench/errors.hpp"
#include "advbench/rng.hpp"

namespace advbench {

ImageBatch gaussian_blobs(const BlobSpec& spec) {
  if (spec.dim == 0 || spec.classes < 2) throw ConfigError("blobs need dim >= 1 and at least 2 classes");
  if (spec.spread < 0.0 || spec.center_low > spec.center_high) throw ConfigError("invalid blob geometry");
  Rng centre_rng(spec.seed, 0, 0, stream::synthetic);
  std::vector<double> centres(spec.classes * spec.dim);
  auto separated = [&] {
    for (std::size_t a = 0; a < spec.classes; ++a) {
      for (std::size_t b = a + 1; b < spec.classes; ++b) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < spec.dim; ++k) {
          const double t = centres[a * spec.dim + k] - centres[b * spec.dim + k];
          d2 += t * t;
        }
        if (std::sqrt(d2) < spec.min_separation) return false;
      }
    }
    return true;
  };
  constexpr int kTries = 10000;
  int tries = 0;
  do {
    if (++tries > kTries) throw ConfigError("cannot place class centres at the requested separation");
    for (auto& c : centres) c = centre_rng.uniform(spec.center_low, spec.center_high);
  } while (!separated());
  ImageBatch batch(spec.rows, spec.dim, spec.classes);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    Rng rng(spec.seed, i + 1, 0, stream::synthetic);
    const std::size_t label = i % spec.classes;
    batch.labels[i] = static_cast<int>(label);
    for (std::size_t k = 0; k < spec.dim; ++k) {
      const double v = centres[label * spec.dim + k] + spec.spread * rng.normal();
      batch.data[i * spec.dim + k] = static_cast<double>(static_cast<float>(std::clamp(v, 0.0, 1.0)));
    }
  }
  return batch;
}

}  // namespace advbench
