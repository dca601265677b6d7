#include "collapsar/sequence/tim.hpp"

#include <cmath>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/ops.hpp"

namespace collapsar {

namespace {

struct Shifted {
  Matrix e;  // behaviors + temporal rows
  Vector v;  // target + temporal row 0
  std::vector<bool> mask;
  bool any = false;
};

Shifted shift(const TimInput& in) {
  const std::size_t n = in.behaviors.rows();
  const std::size_t k = in.behaviors.cols();
  if (in.buckets.size() != n) throw InputError("TIM: one bucket per behavior required");
  if (in.target.size() != k || in.temporal.cols() != k || in.temporal.rows() == 0) {
    throw InputError("TIM: embedding widths disagree");
  }
  if (!in.valid.empty() && in.valid.size() != n) throw InputError("TIM: mask length mismatch");
  Shifted s{Matrix(n, k), Vector(in.target.begin(), in.target.end()), {}, false};
  axpy(1.0, in.temporal.row(0), s.v);
  s.mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (in.buckets[i] >= in.temporal.rows()) throw InputError("TIM: bucket beyond temporal table");
    s.mask[i] = in.valid.empty() || in.valid[i];
    s.any = s.any || s.mask[i];
    auto row = s.e.row(i);
    const auto e = in.behaviors.row(i);
    const auto p = in.temporal.row(in.buckets[i]);
    for (std::size_t c = 0; c < k; ++c) row[c] = e[c] + p[c];
  }
  return s;
}

}  // namespace

TimOutput tim_forward(const TimInput& in) {
  const Shifted s = shift(in);
  const std::size_t n = s.e.rows();
  const std::size_t k = s.v.size();
  TimOutput out{Vector(k, 0.0), {}};
  if (!s.any) return out;
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  out.alpha.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.mask[i]) out.alpha[i] = dot(s.e.row(i), s.v) * scale;
  }
  masked_softmax(out.alpha, s.mask);
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.mask[i]) continue;
    const auto e = s.e.row(i);
    for (std::size_t c = 0; c < k; ++c) out.u[c] += out.alpha[i] * e[c] * s.v[c];
  }
  return out;
}

TimGrads tim_backward(const TimInput& in, const TimOutput& out, std::span<const double> upstream) {
  const Shifted s = shift(in);
  const std::size_t n = s.e.rows();
  const std::size_t k = s.v.size();
  if (upstream.size() != k) throw InputError("TIM: upstream width mismatch");
  TimGrads g{Matrix(n, k), Vector(k, 0.0), Matrix(in.temporal.rows(), k)};
  if (!s.any) return g;
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));

  Vector d_alpha(n, 0.0);
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.mask[i]) continue;
    const auto e = s.e.row(i);
    for (std::size_t c = 0; c < k; ++c) d_alpha[i] += upstream[c] * e[c] * s.v[c];
    weighted += out.alpha[i] * d_alpha[i];
  }
  Vector dv(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.mask[i]) continue;
    const double a = out.alpha[i];
    const double ds = a * (d_alpha[i] - weighted) * scale;
    const auto e = s.e.row(i);
    auto de = g.behaviors.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      de[c] = a * upstream[c] * s.v[c] + ds * s.v[c];
      dv[c] += a * upstream[c] * e[c] + ds * e[c];
    }
    axpy(1.0, de, g.temporal.row(in.buckets[i]));
  }
  g.target = dv;
  axpy(1.0, dv, g.temporal.row(0));
  return g;
}

TimDualOutput tim_dual(const Matrix& behaviors, const DualBuckets& buckets,
                       std::span<const double> target, const TemporalTables& tables,
                       const std::vector<bool>& valid) {
  TimDualOutput out;
  out.position = tim_forward({behaviors, buckets.position, target, tables.position, valid});
  out.interval = tim_forward({behaviors, buckets.interval, target, tables.interval, valid});
  out.u = out.position.u;
  out.u.insert(out.u.end(), out.interval.u.begin(), out.interval.u.end());
  return out;
}

TimDualGrads tim_dual_backward(const Matrix& behaviors, const DualBuckets& buckets,
                               std::span<const double> target, const TemporalTables& tables,
                               const std::vector<bool>& valid, const TimDualOutput& out,
                               std::span<const double> upstream) {
  const std::size_t k = target.size();
  if (upstream.size() != 2 * k) throw InputError("TIM dual: upstream width mismatch");
  TimGrads gp = tim_backward({behaviors, buckets.position, target, tables.position, valid},
                             out.position, upstream.first(k));
  TimGrads gi = tim_backward({behaviors, buckets.interval, target, tables.interval, valid},
                             out.interval, upstream.subspan(k));
  axpy(1.0, gi.behaviors.values(), gp.behaviors.values());
  axpy(1.0, gi.target, gp.target);
  return {std::move(gp.behaviors), std::move(gp.target),
          {std::move(gp.temporal), std::move(gi.temporal)}};
}

}  // namespace collapsar
