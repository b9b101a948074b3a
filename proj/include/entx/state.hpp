#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "entx/matrix.hpp"

namespace entx {

namespace tol {
inline constexpr double normalization = 1e-12;
inline constexpr double unitarity = 1e-10;
inline constexpr double reconstruction = 1e-10;
inline constexpr double spectrum = 1e-9;
inline constexpr double zero = 1e-12;
}  // namespace tol

//==============================================================================
// Domain types
//==============================================================================

/// A normalized bipartite pure state, held as its coefficient matrix: the
/// M x N array of amplitudes over the two local bases. Local maps act by
/// left/right matrix multiplication on it. Immutable after construction.
class BipartitePureState {
public:
  /// Builds a state from a coefficient matrix whose squared entries sum to 1
  /// within 1e-12. Throws NotNormalized or DimensionMismatch otherwise.
  static BipartitePureState from_matrix(ComplexMatrix coeffs) {
    validate(coeffs);
    return BipartitePureState(std::move(coeffs));
  }

  /// Rescales an arbitrary nonzero coefficient matrix to unit norm.
  static BipartitePureState normalized(ComplexMatrix coeffs) {
    if (coeffs.size() == 0) throw DimensionMismatch("state: empty coefficient matrix");
    if (!coeffs.allFinite()) throw NotNormalized("state: non-finite amplitude");
    double n = coeffs.norm();
    if (n <= 0.0) throw NotNormalized("state: zero coefficient matrix");
    coeffs /= n;
    return BipartitePureState(std::move(coeffs));
  }

  Index dim_a() const { return coeffs_.rows(); }
  Index dim_b() const { return coeffs_.cols(); }
  const ComplexMatrix& coeffs() const { return coeffs_; }

  /// The state as a ket on the M*N product space, row-major (A index major).
  ComplexVector ket() const {
    ComplexVector v(coeffs_.size());
    Index k = 0;
    for (Index i = 0; i < coeffs_.rows(); ++i)
      for (Index j = 0; j < coeffs_.cols(); ++j) v(k++) = coeffs_(i, j);
    return v;
  }

private:
  explicit BipartitePureState(ComplexMatrix m) : coeffs_(std::move(m)) {}

  static void validate(const ComplexMatrix& coeffs) {
    if (coeffs.size() == 0) throw DimensionMismatch("state: empty coefficient matrix");
    if (!coeffs.allFinite()) throw NotNormalized("state: non-finite amplitude");
    double s = coeffs.squaredNorm();
    if (std::abs(s - 1.0) > tol::normalization)
      throw NotNormalized("state: squared amplitudes sum to " + std::to_string(s));
  }

  ComplexMatrix coeffs_;
};

/// Checks shape and normalization of a raw coefficient matrix.
inline BipartitePureState validate_state(const ComplexMatrix& raw, Index dim_a, Index dim_b,
                                         bool normalize = false) {
  if (raw.rows() != dim_a || raw.cols() != dim_b)
    throw DimensionMismatch("validate_state: expected " + std::to_string(dim_a) + "x" +
                            std::to_string(dim_b) + ", got " + std::to_string(raw.rows()) + "x" +
                            std::to_string(raw.cols()));
  return normalize ? BipartitePureState::normalized(raw) : BipartitePureState::from_matrix(raw);
}

/// Diagonal form of a coefficient matrix: Lambda = U^dag Lambda_d V with
/// descending coefficients. Zero coefficients are kept (padded form); the
/// count of nonzero ones is reported separately as the rank.
struct SchmidtForm {
  RealVector lambdas;           // descending, length min(M, N)
  Index rank = 0;               // number of lambdas above tolerance
  ComplexMatrix left_unitary;   // U, M x M
  ComplexMatrix right_unitary;  // V, N x N
  Index dim_a = 0;
  Index dim_b = 0;

  /// Lambda_d as an M x N rectangular diagonal matrix.
  ComplexMatrix diagonal() const { return diagonal_embed(lambdas, dim_a, dim_b); }
};

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
public:
  static DensityMatrix from_matrix(ComplexMatrix rho, double herm_tol = 1e-12,
                                   double trace_tol = 1e-12, double psd_tol = 1e-10) {
    if (rho.rows() != rho.cols() || rho.size() == 0)
      throw DimensionMismatch("density matrix must be square and non-empty");
    if (hermiticity_residual(rho) > herm_tol)
      throw NumericalFailure("density matrix is not Hermitian");
    double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > trace_tol)
      throw NotNormalized("density matrix trace is " + std::to_string(tr));
    RealVector spec = hermitian_spectrum(rho);
    if (spec(spec.size() - 1) < -psd_tol)
      throw NumericalFailure("density matrix has eigenvalue " +
                             std::to_string(spec(spec.size() - 1)));
    return DensityMatrix(std::move(rho), std::move(spec));
  }

  Index dim() const { return entries_.rows(); }
  const ComplexMatrix& entries() const { return entries_; }

  /// Eigenvalues, descending.
  const RealVector& spectrum() const { return spectrum_; }

private:
  DensityMatrix(ComplexMatrix m, RealVector spec)
      : entries_(std::move(m)), spectrum_(std::move(spec)) {}

  ComplexMatrix entries_;
  RealVector spectrum_;
};

enum class Side { A, B };

//==============================================================================
// Operations
//==============================================================================

/// Singular value decomposition of the coefficient matrix in the convention
/// Lambda = U^dag Lambda_d V. Deterministic for a fixed input: singular
/// values descending, ties kept in order of computation, and the phase of
/// each left singular vector fixed by making its first entry of magnitude
/// above 1e-12 real and positive.
inline SchmidtForm schmidt_decompose(const BipartitePureState& state, double tolerance = 1e-10) {
  if (tolerance <= 0.0) throw DimensionMismatch("schmidt_decompose: tolerance must be positive");
  const ComplexMatrix& lam = state.coeffs();
  Eigen::JacobiSVD<ComplexMatrix> svd(lam, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");

  ComplexMatrix ue = svd.matrixU();  // Lambda = ue * S * ve^dag
  ComplexMatrix ve = svd.matrixV();
  for (Index k = 0; k < ue.cols(); ++k) {
    Complex lead = 0.0;
    for (Index i = 0; i < ue.rows(); ++i) {
      if (std::abs(ue(i, k)) > 1e-12) {
        lead = ue(i, k);
        break;
      }
    }
    if (lead == Complex(0.0)) continue;
    Complex phase = std::conj(lead) / std::abs(lead);
    ue.col(k) *= phase;
    if (k < ve.cols()) ve.col(k) *= phase;
  }

  SchmidtForm form;
  form.lambdas = svd.singularValues();
  form.rank = 0;
  for (Index i = 0; i < form.lambdas.size(); ++i)
    if (form.lambdas(i) > tolerance) ++form.rank;
  form.left_unitary = ue.adjoint();
  form.right_unitary = ve.adjoint();
  form.dim_a = lam.rows();
  form.dim_b = lam.cols();
  return form;
}

/// Reduced density matrix of one party: Lambda Lambda^dag on side A,
/// Lambda^T Lambda^* on side B.
inline DensityMatrix reduced_density(const BipartitePureState& state, Side side) {
  const ComplexMatrix& lam = state.coeffs();
  ComplexMatrix rho = (side == Side::A) ? ComplexMatrix(lam * lam.adjoint())
                                        : ComplexMatrix(lam.transpose() * lam.conjugate());
  return DensityMatrix::from_matrix(std::move(rho), 1e-12, 1e-10, 1e-10);
}

/// Partial trace of a pure state on an arbitrary factorization. `dims` are
/// the factor dimensions (their product must equal psi.size()); `keep` lists
/// the factor indices to retain, in ascending order. The result is indexed
/// row-major over the kept factors in their original order.
inline DensityMatrix partial_trace(const ComplexVector& psi, const std::vector<Index>& dims,
                                   const std::vector<int>& keep) {
  Index total = 1;
  for (Index d : dims) {
    if (d < 1) throw DimensionMismatch("partial_trace: factor dimension < 1");
    total *= d;
  }
  if (total != psi.size())
    throw DimensionMismatch("partial_trace: factor dimensions do not multiply to state size");
  std::vector<bool> kept(dims.size(), false);
  for (int f : keep) {
    if (f < 0 || static_cast<std::size_t>(f) >= dims.size() || kept[static_cast<std::size_t>(f)])
      throw DimensionMismatch("partial_trace: bad keep index");
    kept[static_cast<std::size_t>(f)] = true;
  }
  for (std::size_t i = 1; i < keep.size(); ++i)
    if (keep[i] <= keep[i - 1]) throw DimensionMismatch("partial_trace: keep must be ascending");

  // Strides of each factor in the row-major global index.
  std::vector<Index> stride(dims.size());
  Index s = 1;
  for (std::size_t f = dims.size(); f-- > 0;) {
    stride[f] = s;
    s *= dims[f];
  }

  Index dim_keep = 1, dim_trace = 1;
  for (std::size_t f = 0; f < dims.size(); ++f) (kept[f] ? dim_keep : dim_trace) *= dims[f];

  // Global offsets of every kept multi-index and every traced multi-index.
  auto offsets = [&](bool want_kept) {
    std::vector<Index> off{0};
    for (std::size_t f = 0; f < dims.size(); ++f) {
      if (kept[f] != want_kept) continue;
      std::vector<Index> next;
      next.reserve(off.size() * static_cast<std::size_t>(dims[f]));
      for (Index base : off)
        for (Index x = 0; x < dims[f]; ++x) next.push_back(base + x * stride[f]);
      off.swap(next);
    }
    return off;
  };
  std::vector<Index> keep_off = offsets(true);
  std::vector<Index> trace_off = offsets(false);

  ComplexMatrix rho = ComplexMatrix::Zero(dim_keep, dim_keep);
  for (Index t = 0; t < dim_trace; ++t) {
    Index to = trace_off[static_cast<std::size_t>(t)];
    for (Index a = 0; a < dim_keep; ++a) {
      Complex va = psi(keep_off[static_cast<std::size_t>(a)] + to);
      if (va == Complex(0.0)) continue;
      for (Index b = 0; b < dim_keep; ++b)
        rho(a, b) += va * std::conj(psi(keep_off[static_cast<std::size_t>(b)] + to));
    }
  }
  return DensityMatrix::from_matrix(std::move(rho), 1e-10, 1e-10, 1e-10);
}

/// Partial trace of a bipartite state over one of its two factors (or none).
inline DensityMatrix partial_trace(const BipartitePureState& state, const std::vector<int>& keep) {
  return partial_trace(state.ket(), {state.dim_a(), state.dim_b()}, keep);
}

/// True when x is majorized by y (x precedes y): every prefix sum of the
/// descending sort of x is at most the corresponding prefix sum for y, up to
/// `tolerance`. Vectors are zero-padded to a common length first. Both must
/// be probability vectors.
inline bool majorizes(const RealVector& x, const RealVector& y, double tolerance = 1e-10) {
  auto check = [](const RealVector& v, const char* which) {
    double sum = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
      if (v(i) < -1e-12 || !std::isfinite(v(i)))
        throw NotNormalized(std::string("majorizes: ") + which + " has a negative entry");
      sum += v(i);
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw NotNormalized(std::string("majorizes: ") + which + " sums to " + std::to_string(sum));
  };
  check(x, "x");
  check(y, "y");
  RealVector xs = x, ys = y;
  pad_to_common(xs, ys);
  xs = sorted_descending(xs);
  ys = sorted_descending(ys);
  double px = 0.0, py = 0.0;
  for (Index i = 0; i < xs.size(); ++i) {
    px += xs(i);
    py += ys(i);
    if (px > py + tolerance) return false;
  }
  return true;
}

/// Squared inner product |<s1|s2>|^2 of two states on equal-dimension spaces.
inline double overlap(const BipartitePureState& s1, const BipartitePureState& s2) {
  if (s1.dim_a() != s2.dim_a() || s1.dim_b() != s2.dim_b())
    throw DimensionMismatch("overlap: states live on different spaces");
  Complex ip = (s1.coeffs().conjugate().cwiseProduct(s2.coeffs())).sum();
  return std::norm(ip);
}

struct LocalMapResult {
  double weight = 0.0;                      // squared norm of the mapped state
  std::optional<BipartitePureState> state;  // renormalized; empty when weight is 0
};

/// Applies local linear maps on both sides: Lambda -> opA * Lambda * opB^T.
/// The weight is the outcome probability when the maps are measurement
/// operators. A weight below 1e-24 yields a null result.
inline LocalMapResult apply_local(const BipartitePureState& state, const ComplexMatrix& op_a,
                                  const ComplexMatrix& op_b) {
  if (op_a.cols() != state.dim_a())
    throw DimensionMismatch("apply_local: opA has " + std::to_string(op_a.cols()) +
                            " columns, state dimA is " + std::to_string(state.dim_a()));
  if (op_b.cols() != state.dim_b())
    throw DimensionMismatch("apply_local: opB has " + std::to_string(op_b.cols()) +
                            " columns, state dimB is " + std::to_string(state.dim_b()));
  ComplexMatrix mapped = op_a * state.coeffs() * op_b.transpose();
  double weight = mapped.squaredNorm();
  LocalMapResult result;
  result.weight = weight;
  if (weight > 1e-24)
    result.state = BipartitePureState::normalized(std::move(mapped));
  else
    result.weight = 0.0;
  return result;
}

}  // namespace entx
