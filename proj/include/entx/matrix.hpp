#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "entx/errors.hpp"

namespace entx {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Half-open row/column range [begin, end).
struct IndexRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Largest entry of |U^dag U - I|; 0 for a perfect unitary.
inline double unitarity_residual(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  ComplexMatrix g = u.adjoint() * u;
  g -= ComplexMatrix::Identity(u.rows(), u.cols());
  return max_abs(g);
}

inline double hermiticity_residual(const ComplexMatrix& m) {
  ComplexMatrix d = m - m.adjoint();
  return max_abs(d);
}

// Rectangular diagonal embedding of a real vector.
inline ComplexMatrix diagonal_embed(const RealVector& d, Index rows, Index cols) {
  ComplexMatrix m = ComplexMatrix::Zero(rows, cols);
  Index k = std::min(std::min<Index>(d.size(), rows), cols);
  for (Index i = 0; i < k; ++i) m(i, i) = d(i);
  return m;
}

// Pads both vectors with trailing zeros to a common length.
inline void pad_to_common(RealVector& a, RealVector& b) {
  Index n = std::max(a.size(), b.size());
  RealVector pa = RealVector::Zero(n), pb = RealVector::Zero(n);
  pa.head(a.size()) = a;
  pb.head(b.size()) = b;
  a.swap(pa);
  b.swap(pb);
}

inline RealVector sorted_descending(RealVector v) {
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  return v;
}

// Eigenvalues of a Hermitian matrix, descending.
inline RealVector hermitian_spectrum(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigensolver did not converge");
  return sorted_descending(es.eigenvalues());
}

// Completes a tall matrix with orthonormal columns to a square unitary whose
// leading columns are exactly the input columns. The caller is responsible
// for checking that the columns are orthonormal to its own tolerance.
inline ComplexMatrix orthonormal_completion(const ComplexMatrix& s) {
  if (s.rows() < s.cols() || s.cols() < 1)
    throw DimensionMismatch("orthonormal_completion: need a tall non-empty matrix");
  if (s.rows() == s.cols()) return s;
  Eigen::HouseholderQR<ComplexMatrix> qr(s);
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix u(s.rows(), s.rows());
  u.leftCols(s.cols()) = s;
  u.rightCols(s.rows() - s.cols()) = q.rightCols(s.rows() - s.cols());
  return u;
}

//------------------------------------------------------------------------------
// Permutations
//------------------------------------------------------------------------------

// A permutation of {0..d-1}. As a matrix it maps e_j to e_{map[j]},
// i.e. P(map[j], j) = 1 and (P x)_{map[j]} = x_j.
struct Permutation {
  std::vector<Index> map;

  static Permutation identity(Index d) {
    Permutation p;
    p.map.resize(static_cast<std::size_t>(d));
    std::iota(p.map.begin(), p.map.end(), Index{0});
    return p;
  }

  Index size() const { return static_cast<Index>(map.size()); }

  bool is_identity() const {
    for (std::size_t j = 0; j < map.size(); ++j)
      if (map[j] != static_cast<Index>(j)) return false;
    return true;
  }

  Permutation inverse() const {
    Permutation inv;
    inv.map.resize(map.size());
    for (std::size_t j = 0; j < map.size(); ++j)
      inv.map[static_cast<std::size_t>(map[j])] = static_cast<Index>(j);
    return inv;
  }

  ComplexMatrix matrix() const {
    Index d = size();
    ComplexMatrix p = ComplexMatrix::Zero(d, d);
    for (Index j = 0; j < d; ++j) p(map[static_cast<std::size_t>(j)], j) = 1.0;
    return p;
  }

  RealVector apply(const RealVector& x) const {
    RealVector y(x.size());
    for (Index j = 0; j < x.size(); ++j) y(map[static_cast<std::size_t>(j)]) = x(j);
    return y;
  }

  bool operator==(const Permutation& other) const { return map == other.map; }
};

}  // namespace entx
