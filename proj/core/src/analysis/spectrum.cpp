#include "collapsar/analysis/spectrum.hpp"

#include "collapsar/errors.hpp"

namespace collapsar {

Spectrum singular_spectrum(const Matrix& e) { return svd(e).s; }

double information_abundance(const Spectrum& s) {
  const double top = s.max();
  if (!(top > 0.0)) throw AnalysisError("information abundance is undefined for a zero matrix");
  return s.l1() / top;
}

double information_abundance(const Matrix& e) {
  if (e.empty()) throw AnalysisError("information abundance is undefined for an empty matrix");
  return information_abundance(singular_spectrum(e));
}

}  // namespace collapsar
