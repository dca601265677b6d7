#pragma once

#include "collapsar/numerics/linalg.hpp"

namespace collapsar {

Spectrum singular_spectrum(const Matrix& e);

/// sum(sigma) / max(sigma), in [1, min(rows, cols)]. Throws AnalysisError
/// for an all-zero (or empty) matrix.
double information_abundance(const Spectrum& s);
double information_abundance(const Matrix& e);

}  // namespace collapsar
