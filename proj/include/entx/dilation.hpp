#pragma once

#include <array>
#include <limits>
#include <optional>

#include "entx/state.hpp"

// Probabilistic single-copy transformation: a diagonal contraction scaled so
// that it maps the input Schmidt diagonal onto the target one, embedded as a
// block of a doubled-space unitary. Applying that unitary and reading off the
// two row blocks realizes the transformation with its optimal success
// probability, with no ancilla involved.

namespace entx::single {

/// Sentinel for "run at the optimal success probability".
inline constexpr double kAtOptimum = -1.0;

/// A diagonal contraction: entries cos(theta_i) in [0, 1], operator norm <= 1.
class Contraction {
public:
  Contraction() = default;

  explicit Contraction(RealVector diag, double tolerance = 1e-9) : diag_(std::move(diag)) {
    for (Index i = 0; i < diag_.size(); ++i) {
      double c = diag_(i);
      if (!std::isfinite(c) || c < -tolerance || c > 1.0 + tolerance)
        throw NotContraction("contraction entry " + std::to_string(c) + " outside [0, 1]");
      diag_(i) = std::clamp(c, 0.0, 1.0);
    }
  }

  Index dim() const { return diag_.size(); }
  const RealVector& diag() const { return diag_; }

  /// sin(theta_i) = sqrt(1 - cos^2), the diagonal of (I - A^dag A)^{1/2}.
  RealVector complement_diag() const {
    RealVector s(diag_.size());
    for (Index i = 0; i < diag_.size(); ++i) s(i) = std::sqrt(std::max(0.0, 1.0 - diag_(i) * diag_(i)));
    return s;
  }

  ComplexMatrix matrix() const { return diagonal_embed(diag_, dim(), dim()); }
  ComplexMatrix complement() const { return diagonal_embed(complement_diag(), dim(), dim()); }

private:
  RealVector diag_;
};

/// The contraction together with its doubled-space unitary extension. The
/// first block of rows carries the transformed (success) component, the
/// second the residual (failure) component.
struct DilationPlan {
  Contraction contraction;
  ComplexMatrix unitary;          // 2M x 2M
  double success_prob = -1.0;     // < 0 until a probability target is attached
  IndexRange success_rows;        // rows [0, M)
  IndexRange failure_rows;        // rows [M, 2M)
};

/// Result of running the doubled-space evolution on one copy.
struct TransformOutcome {
  double success_prob = 0.0;
  BipartitePureState success_state;                 // target frame re-applied
  std::optional<BipartitePureState> failure_state;  // input frame re-applied; empty at p = 1
  BipartitePureState output_state;                  // extended 2M x N state, Schmidt coordinates
  double residual_extractability = 0.0;  // best success probability extractable from failure branch
};

namespace detail {

/// Checks a Schmidt coefficient vector (nonnegative, squares summing to 1)
/// and returns it sorted descending with negative noise clamped to zero.
inline RealVector canonical_schmidt(RealVector v, const char* name) {
  double sq = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) < -1e-12)
      throw NotNormalized(std::string(name) + ": negative Schmidt coefficient");
    v(i) = std::max(0.0, v(i));
    sq += v(i) * v(i);
  }
  if (std::abs(sq - 1.0) > tol::normalization)
    throw NotNormalized(std::string(name) + ": squared coefficients sum to " + std::to_string(sq));
  return sorted_descending(std::move(v));
}

}  // namespace detail

/// Optimal success probability for transforming Schmidt spectrum `lambda`
/// into `sigma`: the smallest ratio lambda_k^2 / sigma_k^2 over the target's
/// support, clamped to [0, 1]. Zero when the target needs support the input
/// lacks; one when the spectra agree.
inline double optimal_probability(RealVector lambda, RealVector sigma) {
  lambda = detail::canonical_schmidt(std::move(lambda), "optimal_probability: input");
  sigma = detail::canonical_schmidt(std::move(sigma), "optimal_probability: target");
  pad_to_common(lambda, sigma);
  double p = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) <= tol::zero) continue;
    if (lambda(k) <= tol::zero) return 0.0;
    p = std::min(p, (lambda(k) * lambda(k)) / (sigma(k) * sigma(k)));
  }
  return std::min(p, 1.0);
}

inline double optimal_probability(const BipartitePureState& input,
                                  const BipartitePureState& target) {
  return optimal_probability(schmidt_decompose(input).lambdas, schmidt_decompose(target).lambdas);
}

/// The contraction realizing the transformation at success probability `p`:
/// cos(theta_i) = sqrt(p) sigma_i / lambda_i on the input's support, zero on
/// the target's null directions. Throws NotContraction when p exceeds the
/// optimum (some cosine would leave [0, 1]).
inline Contraction contraction_for(RealVector lambda, RealVector sigma, double p) {
  if (!(p > 0.0) || p > 1.0 + 1e-12)
    throw NotContraction("contraction_for: probability " + std::to_string(p) +
                         " outside (0, 1]");
  lambda = detail::canonical_schmidt(std::move(lambda), "contraction_for: input");
  sigma = detail::canonical_schmidt(std::move(sigma), "contraction_for: target");
  pad_to_common(lambda, sigma);
  double root_p = std::sqrt(std::min(p, 1.0));
  RealVector cosines = RealVector::Zero(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    if (sigma(i) <= tol::zero) continue;  // target null direction: cut it off
    if (lambda(i) <= tol::zero)
      throw NotContraction("contraction_for: target has support the input lacks");
    double c = root_p * sigma(i) / lambda(i);
    if (c > 1.0 + 1e-9)
      throw NotContraction("contraction_for: probability " + std::to_string(p) +
                           " exceeds the optimum (cosine " + std::to_string(c) + ")");
    cosines(i) = std::min(c, 1.0);
  }
  return Contraction(std::move(cosines));
}

/// Embeds the contraction A in the doubled-space unitary
/// [[A, -(I - A A^dag)^{1/2}], [(I - A^dag A)^{1/2}, A^dag]].
/// The returned plan carries the block geometry but no probability yet.
inline DilationPlan dilation_unitary(const Contraction& a) {
  Index m = a.dim();
  if (m < 1) throw NotContraction("dilation_unitary: empty contraction");
  const RealVector& c = a.diag();
  RealVector s = a.complement_diag();
  ComplexMatrix u = ComplexMatrix::Zero(2 * m, 2 * m);
  for (Index i = 0; i < m; ++i) {
    u(i, i) = c(i);
    u(i, m + i) = -s(i);
    u(m + i, i) = s(i);
    u(m + i, m + i) = c(i);
  }
  DilationPlan plan;
  plan.contraction = a;
  plan.unitary = std::move(u);
  plan.success_rows = IndexRange{0, m};
  plan.failure_rows = IndexRange{m, 2 * m};
  return plan;
}

/// Builds the full plan for `lambda` -> `sigma` at probability `p`
/// (kAtOptimum selects the optimal one).
inline DilationPlan make_dilation_plan(const RealVector& lambda, const RealVector& sigma,
                                       double p = kAtOptimum) {
  double p_opt = optimal_probability(lambda, sigma);
  if (p_opt <= 0.0)
    throw InfeasibleTarget("transformation impossible: target needs support the input lacks");
  double run_p = (p == kAtOptimum) ? p_opt : p;
  if (run_p > p_opt + 1e-12)
    throw NotContraction("requested probability " + std::to_string(run_p) +
                         " exceeds optimum " + std::to_string(p_opt));
  DilationPlan plan = dilation_unitary(contraction_for(lambda, sigma, run_p));
  plan.success_prob = run_p;
  return plan;
}

/// Runs the single-copy transformation of `input` into `target` at success
/// probability `p` (default: optimal). The pipeline Schmidt-decomposes both
/// states, applies the doubled-space unitary to the stacked Schmidt diagonal,
/// and splits the result by row blocks. The output state is reported in
/// Schmidt coordinates, where the two branches occupy disjoint row blocks;
/// the branch states are returned with the respective local Schmidt
/// unitaries re-applied so they compare directly against `target` and the
/// input-side residual.
inline TransformOutcome transform_single_copy(const BipartitePureState& input,
                                              const BipartitePureState& target,
                                              double p = kAtOptimum) {
  SchmidtForm sf = schmidt_decompose(input);
  SchmidtForm tf = schmidt_decompose(target);
  if (tf.rank > sf.rank)
    throw InfeasibleTarget("transform_single_copy: target Schmidt rank " +
                           std::to_string(tf.rank) + " exceeds input rank " +
                           std::to_string(sf.rank));

  RealVector lambda = sf.lambdas;
  RealVector sigma = tf.lambdas;
  pad_to_common(lambda, sigma);
  double p_opt = optimal_probability(lambda, sigma);
  if (p_opt <= 0.0)
    throw InfeasibleTarget("transform_single_copy: success probability is zero");
  double run_p = (p == kAtOptimum) ? p_opt : p;
  if (run_p > p_opt + 1e-12)
    throw NotContraction("transform_single_copy: probability " + std::to_string(run_p) +
                         " exceeds optimum " + std::to_string(p_opt));

  // Contraction over the input's Alice Schmidt space. Feasibility above
  // guarantees the target spectrum is zero beyond that space.
  Index m = sf.dim_a;
  RealVector lam_m = RealVector::Zero(m);
  RealVector sig_m = RealVector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    if (i < lambda.size()) lam_m(i) = lambda(i);
    if (i < sigma.size()) sig_m(i) = sigma(i);
  }
  Contraction a = contraction_for(lam_m, sig_m, run_p);
  DilationPlan plan = dilation_unitary(a);
  plan.success_prob = run_p;

  // Extended evolution on the stacked Schmidt diagonal (input diag over zeros).
  ComplexMatrix extended = ComplexMatrix::Zero(2 * m, sf.dim_b);
  extended.topRows(m) = diagonal_embed(sf.lambdas, m, sf.dim_b);
  extended = plan.unitary * extended;
  ComplexMatrix success_block = extended.topRows(m);
  ComplexMatrix failure_block = extended.bottomRows(m);

  double success_weight = success_block.squaredNorm();
  double failure_weight = failure_block.squaredNorm();
  if (std::abs(success_weight - run_p) > 1e-10)
    throw NumericalFailure("transform_single_copy: success weight " +
                           std::to_string(success_weight) + " deviates from plan probability");

  // Success branch in the target frame: its amplitudes are the target's
  // Schmidt coefficients, so re-applying the target unitaries rebuilds the
  // target state itself.
  Index dt = std::min(tf.dim_a, tf.dim_b);
  RealVector success_diag = RealVector::Zero(dt);
  for (Index i = 0; i < dt && i < m && i < sf.dim_b; ++i)
    success_diag(i) = success_block(i, i).real();
  success_diag /= std::sqrt(success_weight);
  BipartitePureState success_state = BipartitePureState::normalized(
      tf.left_unitary.adjoint() * diagonal_embed(success_diag, tf.dim_a, tf.dim_b) *
      tf.right_unitary);

  // Failure branch in the input frame.
  std::optional<BipartitePureState> failure_state;
  if (failure_weight > 1e-24)
    failure_state = BipartitePureState::normalized(sf.left_unitary.adjoint() * failure_block *
                                                   sf.right_unitary);

  BipartitePureState output_state = BipartitePureState::normalized(std::move(extended));

  // How much success probability toward the target is left in the failure
  // branch; zero at the optimum.
  double residual = std::numeric_limits<double>::infinity();
  const RealVector& cosines = a.diag();
  for (Index k = 0; k < m; ++k) {
    if (sig_m(k) <= tol::zero) continue;
    double sin_sq = std::max(0.0, 1.0 - cosines(k) * cosines(k));
    residual = std::min(residual, sin_sq * lam_m(k) * lam_m(k) / (sig_m(k) * sig_m(k)));
  }
  if (!std::isfinite(residual)) residual = 0.0;

  return TransformOutcome{run_p, std::move(success_state), std::move(failure_state),
                          std::move(output_state), residual};
}

/// Entanglement concentration: transform into the maximally entangled state
/// of `m` levels on the same spaces. The optimal probability is m times the
/// m-th squared Schmidt coefficient.
inline TransformOutcome concentrate(const BipartitePureState& input, Index m) {
  SchmidtForm sf = schmidt_decompose(input);
  if (m < 1 || m > sf.rank)
    throw InfeasibleTarget("concentrate: level count " + std::to_string(m) +
                           " outside [1, rank=" + std::to_string(sf.rank) + "]");
  RealVector me = RealVector::Zero(std::min(sf.dim_a, sf.dim_b));
  for (Index i = 0; i < m; ++i) me(i) = 1.0 / std::sqrt(static_cast<double>(m));
  BipartitePureState target =
      BipartitePureState::normalized(diagonal_embed(me, sf.dim_a, sf.dim_b));
  return transform_single_copy(input, target);
}

/// The four orthogonal components produced when both parties apply
/// contractions to the Schmidt-diagonal form of `input`, in the order
/// (A, B), (A, B~), (A~, B), (A~, B~) with X~ the complement (I - X^2)^{1/2}.
struct BilateralComponents {
  std::array<LocalMapResult, 4> parts;
  double total_weight() const {
    double t = 0.0;
    for (const auto& part : parts) t += part.weight;
    return t;
  }
};

inline BilateralComponents bilateral_transform(const BipartitePureState& input,
                                               const Contraction& a, const Contraction& b) {
  SchmidtForm sf = schmidt_decompose(input);
  if (a.dim() != sf.dim_a)
    throw DimensionMismatch("bilateral_transform: Alice contraction dimension " +
                            std::to_string(a.dim()) + " != " + std::to_string(sf.dim_a));
  if (b.dim() != sf.dim_b)
    throw DimensionMismatch("bilateral_transform: Bob contraction dimension " +
                            std::to_string(b.dim()) + " != " + std::to_string(sf.dim_b));
  BipartitePureState schmidt_state =
      BipartitePureState::normalized(diagonal_embed(sf.lambdas, sf.dim_a, sf.dim_b));
  BilateralComponents out;
  out.parts[0] = apply_local(schmidt_state, a.matrix(), b.matrix());
  out.parts[1] = apply_local(schmidt_state, a.matrix(), b.complement());
  out.parts[2] = apply_local(schmidt_state, a.complement(), b.matrix());
  out.parts[3] = apply_local(schmidt_state, a.complement(), b.complement());
  return out;
}

}  // namespace entx::single
