#pragma once

#include <algorithm>
#include <vector>

#include "entx/matrix.hpp"
#include "entx/montecarlo.hpp"
#include "entx/state.hpp"

// Random generators for property tests and sampling demos. All draw from
// mc::TrialRng so results are reproducible per (seed, stream).

namespace entx::rnd {

/// Matrix with iid standard complex Gaussian entries.
inline ComplexMatrix random_matrix(Index rows, Index cols, mc::TrialRng& rng) {
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  return m;
}

/// Haar-distributed state on an M x N bipartite space.
inline BipartitePureState random_state(Index dim_a, Index dim_b, mc::TrialRng& rng) {
  return BipartitePureState::normalized(random_matrix(dim_a, dim_b, rng));
}

/// Descending probability vector of length `dim` with exactly `rank` nonzero
/// entries (rank = dim when omitted or out of range).
inline RealVector random_spectrum(Index dim, mc::TrialRng& rng, Index rank = -1) {
  if (dim < 1) throw DimensionMismatch("random_spectrum: dim must be >= 1");
  if (rank < 1 || rank > dim) rank = dim;
  RealVector p = RealVector::Zero(dim);
  double sum = 0.0;
  for (Index i = 0; i < rank; ++i) {
    double g = rng.normal();
    p(i) = g * g;  // chi-squared(1): strictly positive with probability 1
    sum += p(i);
  }
  for (Index i = 0; i < rank; ++i) p(i) /= sum;
  return sorted_descending(p);
}

/// Haar-distributed unitary via QR of a Gaussian matrix with the usual phase
/// correction from the sign of R's diagonal.
inline ComplexMatrix random_unitary(Index dim, mc::TrialRng& rng) {
  ComplexMatrix g = random_matrix(dim, dim, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < dim; ++k) {
    Complex d = r(k, k);
    double a = std::abs(d);
    q.col(k) *= (a > 0.0) ? d / a : Complex(1.0);
  }
  return q;
}

/// Diagonal contraction diag(c_1..c_d) with every c_i uniform in [0, 1].
inline RealVector random_contraction(Index dim, mc::TrialRng& rng) {
  RealVector c(dim);
  for (Index i = 0; i < dim; ++i) c(i) = rng.uniform();
  return c;
}

/// A pair (x, y) of descending probability vectors with x majorized by y:
/// y is drawn at random and x is a convex mix of random permutations of y,
/// which is always majorized by y.
inline std::pair<RealVector, RealVector> random_majorized_pair(Index dim, mc::TrialRng& rng,
                                                               Index terms = 4) {
  RealVector y = random_spectrum(dim, rng);
  RealVector x = RealVector::Zero(dim);
  std::vector<Index> perm(static_cast<std::size_t>(dim));
  RealVector w(terms);
  double wsum = 0.0;
  for (Index t = 0; t < terms; ++t) {
    w(t) = rng.uniform() + 1e-3;
    wsum += w(t);
  }
  for (Index t = 0; t < terms; ++t) {
    for (Index i = 0; i < dim; ++i) perm[static_cast<std::size_t>(i)] = i;
    // Fisher-Yates; first term stays identity so x keeps full support of y.
    if (t > 0) {
      for (Index i = dim - 1; i > 0; --i) {
        Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      }
    }
    for (Index i = 0; i < dim; ++i) x(i) += (w(t) / wsum) * y(perm[static_cast<std::size_t>(i)]);
  }
  return {sorted_descending(x), y};
}

}  // namespace entx::rnd
