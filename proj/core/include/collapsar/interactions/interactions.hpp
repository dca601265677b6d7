#pragma once

#include <span>
#include <utility>
#include <vector>

#include "collapsar/numerics/matrix.hpp"

// Explicit pairwise interactions. Every operator iterates strictly over
// pairs i < j, so a feature never interacts with itself. Feature values x
// default to 1 when the span is empty.
namespace collapsar {

/// Symmetric n x n weights stored as the upper triangle (diagonal included).
class SymmetricWeights {
 public:
  SymmetricWeights() = default;
  explicit SymmetricWeights(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * (n + 1) / 2, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t a, std::size_t b) { return data_[index(a, b)]; }
  double operator()(std::size_t a, std::size_t b) const { return data_[index(a, b)]; }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const SymmetricWeights&, const SymmetricWeights&) = default;

 private:
  std::size_t index(std::size_t a, std::size_t b) const noexcept {
    if (a > b) std::swap(a, b);
    return a * n_ - (a * (a + 1)) / 2 + b;
  }
  std::size_t n_ = 0;
  std::vector<double> data_;
};

enum class Reduce { vector, scalar };

/// General field-aware pair sum
///   sum_{i<j} x_i x_j w(cls_i, cls_j) * (copies_i[key_j] (.) copies_j[key_i])
/// where (.) is the Hadamard product. FM, FFM, FwFM and GwPFM are
/// instances of it. `r == nullptr` means w = 1.
struct FieldAwareInput {
  const std::vector<Matrix>& copies;
  std::span<const std::size_t> key;
  std::span<const std::size_t> cls;
  const SymmetricWeights* r = nullptr;
  std::span<const double> x = {};
};

Vector field_aware_vector(const FieldAwareInput& in);

struct FieldAwareGrads {
  std::vector<Matrix> copies;
  /// Empty (size 0) when the input had no weights.
  SymmetricWeights r;
};

FieldAwareGrads field_aware_backward(const FieldAwareInput& in, std::span<const double> upstream);

// -- FM ---------------------------------------------------------------------

/// Row i of `emb` is v_i.
double fm_score(const Matrix& emb, std::span<const double> x = {});
/// sum_{i<j} x_i x_j v_i (.) v_j.
Vector fm_vector(const Matrix& emb, std::span<const double> x = {});
/// Gradient of <upstream, fm_vector> wrt `emb`.
Matrix fm_backward(const Matrix& emb, std::span<const double> upstream,
                   std::span<const double> x = {});

// -- FFM --------------------------------------------------------------------

/// `copies[i]` row f is v_{i,f}; `fields[i]` is F(i).
double ffm_score(const std::vector<Matrix>& copies, std::span<const std::size_t> fields,
                 std::span<const double> x = {});

// -- FwFM -------------------------------------------------------------------

double fwfm_score(const Matrix& emb, std::span<const std::size_t> fields,
                  const SymmetricWeights& r, std::span<const double> x = {});

// -- GwPFM ------------------------------------------------------------------

/// `part_emb[i]` row p is e_{i,p}. Returns a K-vector (vector mode) or a
/// one-element vector holding the coordinate sum (scalar mode).
Vector gwpfm_interaction(const std::vector<Matrix>& part_emb, std::span<const std::size_t> parts,
                         std::span<const std::size_t> groups, const SymmetricWeights& r,
                         Reduce reduce, std::span<const double> x = {});

// -- Projected --------------------------------------------------------------

/// (e_i M) (.) e_j.
Vector projected_pair(std::span<const double> ei, std::span<const double> ej, const Matrix& m);

struct ProjectedPairGrads {
  Vector ei;
  Vector ej;
  Matrix m;
};
ProjectedPairGrads projected_pair_backward(std::span<const double> ei, std::span<const double> ej,
                                           const Matrix& m, std::span<const double> upstream);

/// Index of the projection for the field pair (a, b), a < b, among the
/// n(n-1)/2 pairs in row-major upper-triangle order.
std::size_t field_pair_index(std::size_t a, std::size_t b, std::size_t num_fields);

/// sum_{i<j} (e_i M_{ij}) (.) e_j with one matrix per field pair; rows of
/// `emb` are the fields in order.
Vector projected_interaction(const Matrix& emb, const std::vector<Matrix>& projections);

struct ProjectedGrads {
  Matrix emb;
  std::vector<Matrix> projections;
};
ProjectedGrads projected_interaction_backward(const Matrix& emb,
                                              const std::vector<Matrix>& projections,
                                              std::span<const double> upstream);

// -- Candidate scoring --------------------------------------------------------

/// Counts group-pair evaluations by phase.
struct PairEvalCounter {
  std::size_t part1 = 0;
  std::size_t cross = 0;
  std::size_t part2 = 0;
};

/// Features of one side of a request: per feature its part-copies
/// (rows = parts), part id, group id and value.
struct PartFeatures {
  std::vector<Matrix> copies;
  std::vector<std::size_t> parts;
  std::vector<std::size_t> groups;
  std::vector<double> x;
};

/// Part-1 (part id 0) state shared by all candidates of a request.
struct PartPooledRequest {
  std::size_t num_parts = 0;
  std::size_t num_groups = 0;
  std::size_t dim = 0;
  /// pooled[p] row g: sum over part-1 features of group g of x_i e_{i,p}.
  /// Sums rather than means so the decomposition reproduces the naive
  /// score exactly; a mean pool times the group count is the same value.
  std::vector<Matrix> pooled;
  /// Groups that contain at least one part-1 feature.
  std::vector<bool> present;
  /// The part-1 x part-1 term, evaluated once.
  Vector part1_term;
};

PartPooledRequest gwpfm_pool_request(const PartFeatures& user, const SymmetricWeights& r,
                                     std::size_t num_parts, PairEvalCounter& counter);

/// Scores each candidate (its part ids must be > 0) against the pooled
/// request. Equals gwpfm_interaction over the union of features.
std::vector<Vector> gwpfm_score_candidates(const PartPooledRequest& req,
                                           const std::vector<PartFeatures>& candidates,
                                           const SymmetricWeights& r, Reduce reduce,
                                           PairEvalCounter& counter);

}  // namespace collapsar
