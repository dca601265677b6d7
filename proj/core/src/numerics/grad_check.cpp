#include "collapsar/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

double grad_check(const DifferentiableOp& op, std::span<const double> input, double eps,
                  std::uint64_t functional_seed) {
  if (!(eps > 0.0) || eps > 1e-3) throw InputError("grad_check: eps must lie in (0, 1e-3]");
  if (input.size() != op.input_size()) throw InputError("grad_check: input size mismatch");

  Vector weights(op.output_size(), 1.0);
  if (op.output_size() > 1) {
    Rng rng(functional_seed);
    for (double& w : weights) w = rng.uniform(-1.0, 1.0);
  }
  auto loss = [&](std::span<const double> x) {
    const Vector out = op.forward(x);
    const double value = dot(weights, out);
    if (!std::isfinite(value)) throw EvaluationError("grad_check: non-finite loss while probing");
    return value;
  };

  loss(input);
  const Vector analytic = op.backward(input, weights);
  if (analytic.size() != input.size()) throw InputError("grad_check: backward size mismatch");

  Vector probe(input.begin(), input.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    auto at = [&](double offset) {
      probe[i] = saved + offset;
      return loss(probe);
    };
    // Fourth-order central stencil: truncation O(eps^4), so a larger step
    // can be used and rounding noise stays small.
    const double near = at(eps) - at(-eps);
    const double far = at(2.0 * eps) - at(-2.0 * eps);
    probe[i] = saved;
    const double numeric = (8.0 * near - far) / (12.0 * eps);
    const double err = std::abs(analytic[i] - numeric) /
                       std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace collapsar
