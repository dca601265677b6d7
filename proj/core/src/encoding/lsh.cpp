#include "collapsar/encoding/lsh.hpp"

#include <cmath>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

LshConfig LshConfig::create(std::size_t n_bits, std::size_t dim, std::uint64_t seed) {
  if (n_bits < 1 || n_bits > 63) throw ConfigError("LSH n_bits must lie in [1, 63]");
  if (dim < 1) throw ConfigError("LSH input dim must be positive");
  LshConfig cfg;
  cfg.n_bits = n_bits;
  cfg.seed = seed;
  cfg.hyperplanes = Matrix(n_bits, dim);
  Rng rng(seed);
  for (std::size_t b = 0; b < n_bits; ++b) {
    auto row = cfg.hyperplanes.row(b);
    double norm = 0.0;
    while (norm < 1e-6) {
      for (double& v : row) v = rng.normal();
      norm = norm2(row);
    }
    for (double& v : row) v /= norm;
  }
  return cfg;
}

std::uint64_t lsh_semantic_id(std::span<const double> x, const LshConfig& cfg) {
  if (x.size() != cfg.dim()) throw EncodeError("LSH input dimension mismatch");
  if (!all_finite(x)) throw EncodeError("LSH input has non-finite entries");
  if (norm2(x) == 0.0) throw EncodeError("LSH input is the zero vector");
  std::uint64_t code = 0;
  for (std::size_t b = 0; b < cfg.n_bits; ++b) {
    if (dot(x, cfg.hyperplanes.row(b)) >= 0.0) code |= std::uint64_t{1} << b;
  }
  return code;
}

}  // namespace collapsar
