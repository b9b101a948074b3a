#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "entx/dilation.hpp"
#include "entx/state.hpp"

// Deterministic transformation from several identical copies. Once the copy
// count n satisfies 1/n <= optimal single-copy probability, branch
// probabilities summing to one can be spread over the copies; the combined
// output collapses, under a unitary on Alice's side alone, to a state whose
// Alice marginal matches the target exactly. Bob's side is modeled as the
// labeled N^n product space with explicit symmetrization where needed.

namespace entx::multi {

/// Hard cap on the labeled Bob space N^n.
inline constexpr Index kDefaultSizeCap = 4096;

/// Slack used when comparing 1/n against the optimal probability, so that
/// exact integer ratios are not lost to rounding.
inline constexpr double kCopySlack = 1e-12;

/// Exact yield ratio (target copies per input copy).
struct Rational {
  long long num = 0;
  long long den = 1;
};

enum class YieldVerdict { Zero, One, Boundary };

struct MultiCopyPlan {
  Index copies = 1;                  // n
  Index min_feasible = 1;            // smallest workable copy count
  std::vector<double> branch_probs;  // p_i, one per copy, summing to 1
  ComplexMatrix delta;               // M x N^n collapsed coefficient block
  ComplexMatrix omega;               // (n M) x N^n combined output coefficients
  ComplexMatrix merge_unitary;       // (n M) x (n M); first block column stacks sqrt(p_i) I
  Index dim_a = 0;                   // M
  Index dim_b = 0;                   // N of a single copy
  RealVector sigma;                  // target Schmidt coefficients
};

struct MultiCopyResult {
  DensityMatrix rho_a_out;                    // block-diag(target spectrum, 0, ..., 0)
  BipartitePureState projected;               // M x N^n state selected by the leading block
  std::vector<DensityMatrix> pair_marginals;  // (Alice, Bob slot s) in the labeled model
};

/// Eigenvalues of the distinguishable-relabeling variant next to the
/// reference spectrum the indistinguishable construction guarantees.
struct SpectrumReport {
  RealVector spectrum;   // descending, length n M
  RealVector reference;  // target squared coefficients, zero padded
  double max_deviation = 0.0;
};

/// Smallest copy count n with 1/n within the optimal single-copy success
/// probability, i.e. the smallest n for which a valid branch distribution
/// exists.
inline Index min_copies(const RealVector& lambda, const RealVector& sigma) {
  double p_opt = single::optimal_probability(lambda, sigma);
  if (p_opt <= 0.0)
    throw InfeasibleTarget("min_copies: transformation impossible at any copy count");
  Index n = std::max<Index>(1, static_cast<Index>(std::floor(1.0 / (p_opt + kCopySlack))));
  while (1.0 / static_cast<double>(n) > p_opt + kCopySlack) ++n;
  return n;
}

/// Dichotomy for an exact yield ratio K: achievable with certainty below
/// 1/n_min, impossible above it, and explicitly marked on the boundary.
inline YieldVerdict feasible_yield(const RealVector& lambda, const RealVector& sigma, Index n,
                                   Rational yield) {
  if (n < 1) throw DimensionMismatch("feasible_yield: copy count must be >= 1");
  if (yield.den == 0) throw DimensionMismatch("feasible_yield: zero denominator");
  if (yield.den < 0) {
    yield.num = -yield.num;
    yield.den = -yield.den;
  }
  if (yield.num <= 0) throw DimensionMismatch("feasible_yield: yield must be positive");
  long long n_min = static_cast<long long>(min_copies(lambda, sigma));
  long long lhs = yield.num * n_min;  // compare K with 1/n_min exactly
  if (lhs < yield.den) return YieldVerdict::One;
  if (lhs > yield.den) return YieldVerdict::Zero;
  return YieldVerdict::Boundary;
}

/// Equal-split branch probabilities over n copies; the last entry closes the
/// sum to exactly one. Fails when a single branch would have to exceed the
/// optimal probability.
inline std::vector<double> plan_distribution(Index n, double p_opt) {
  if (n < 1) throw InfeasibleDistribution("plan_distribution: copy count must be >= 1");
  if (p_opt <= 0.0)
    throw InfeasibleTarget("plan_distribution: transformation impossible at any copy count");
  double share = 1.0 / static_cast<double>(n);
  if (share > p_opt + kCopySlack)
    throw InfeasibleDistribution("plan_distribution: " + std::to_string(n) +
                                 " copies cannot carry probability 1 at per-branch cap " +
                                 std::to_string(p_opt));
  std::vector<double> probs(static_cast<std::size_t>(n), share);
  probs.back() = 1.0 - share * static_cast<double>(n - 1);
  return probs;
}

namespace detail {

inline Index checked_power(Index base, Index exp, Index cap) {
  Index value = 1;
  for (Index i = 0; i < exp; ++i) {
    if (value > cap / base)
      throw DimensionOverflow("labeled Bob space exceeds the size cap of " + std::to_string(cap));
    value *= base;
  }
  return value;
}

inline void check_distribution(const std::vector<double>& probs, const RealVector& lambda,
                               const RealVector& sigma) {
  if (probs.empty()) throw DimensionMismatch("branch distribution is empty");
  double p_opt = single::optimal_probability(lambda, sigma);
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw InfeasibleDistribution("branch probabilities must be positive");
    if (p > p_opt + kCopySlack)
      throw InfeasibleDistribution("branch probability " + std::to_string(p) +
                                   " exceeds the optimum " + std::to_string(p_opt));
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw NotNormalized("branch probabilities sum to " + std::to_string(sum));
}

}  // namespace detail

struct OmegaMatrices {
  ComplexMatrix delta;  // M x N^n
  ComplexMatrix omega;  // (n M) x N^n
};

/// Builds the collapsed block Delta (each target level smeared uniformly over
/// the matching band of Bob labels) and the combined output coefficients
/// (stacked sqrt(p_i) Delta).
inline OmegaMatrices build_omega(const RealVector& lambda, const RealVector& sigma,
                                 const std::vector<double>& probs, Index dim_a, Index dim_b,
                                 Index size_cap = kDefaultSizeCap) {
  detail::check_distribution(probs, lambda, sigma);
  if (dim_a < 1 || dim_b < 1) throw DimensionMismatch("build_omega: dimensions must be >= 1");
  if (sigma.size() > std::min(dim_a, dim_b))
    throw DimensionMismatch("build_omega: target spectrum longer than min(M, N)");
  Index n = static_cast<Index>(probs.size());
  Index bob_dim = detail::checked_power(dim_b, n, size_cap);
  Index band = bob_dim / dim_b;  // N^(n-1)

  OmegaMatrices out;
  out.delta = ComplexMatrix::Zero(dim_a, bob_dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(band));
  for (Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) <= tol::zero) continue;
    for (Index c = k * band; c < (k + 1) * band; ++c) out.delta(k, c) = sigma(k) * scale;
  }

  out.omega = ComplexMatrix::Zero(n * dim_a, bob_dim);
  for (Index i = 0; i < n; ++i)
    out.omega.middleRows(i * dim_a, dim_a) =
        std::sqrt(probs[static_cast<std::size_t>(i)]) * out.delta;
  return out;
}

/// The block unitary whose first M columns stack sqrt(p_i) I; applied from
/// the left (adjointed) it concentrates the combined output on one block.
inline ComplexMatrix assemble_merge_unitary(const std::vector<double>& probs, Index dim) {
  if (probs.empty() || dim < 1)
    throw DimensionMismatch("assemble_merge_unitary: empty distribution or dimension");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw NotNormalized("assemble_merge_unitary: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw NotNormalized("assemble_merge_unitary: probabilities sum to " + std::to_string(sum));
  Index n = static_cast<Index>(probs.size());
  ComplexMatrix stacked(n * dim, dim);
  for (Index i = 0; i < n; ++i)
    stacked.middleRows(i * dim, dim) =
        std::sqrt(probs[static_cast<std::size_t>(i)]) *
        ComplexMatrix::Identity(dim, dim);
  return orthonormal_completion(stacked);
}

/// Assembles the full plan for turning `copies` input copies into the target
/// with certainty. `copies` = 0 selects the minimum feasible count.
inline MultiCopyPlan make_multicopy_plan(const RealVector& lambda, const RealVector& sigma,
                                         Index dim_a, Index dim_b, Index copies = 0,
                                         Index size_cap = kDefaultSizeCap) {
  MultiCopyPlan plan;
  plan.min_feasible = min_copies(lambda, sigma);
  plan.copies = (copies == 0) ? plan.min_feasible : copies;
  double p_opt = single::optimal_probability(lambda, sigma);
  plan.branch_probs = plan_distribution(plan.copies, p_opt);
  OmegaMatrices mats = build_omega(lambda, sigma, plan.branch_probs, dim_a, dim_b, size_cap);
  plan.delta = std::move(mats.delta);
  plan.omega = std::move(mats.omega);
  plan.merge_unitary = assemble_merge_unitary(plan.branch_probs, dim_a);
  plan.dim_a = dim_a;
  plan.dim_b = dim_b;
  plan.sigma = sigma;
  return plan;
}

/// Runs the merge unitary over the combined output and checks the advertised
/// collapse: Alice's marginal becomes the target spectrum on the leading
/// block, the selected block is the normalized Delta state, and each labeled
/// Bob slot pairs with Alice through a partial trace.
inline MultiCopyResult finalize_multicopy(const MultiCopyPlan& plan) {
  ComplexMatrix rho = plan.merge_unitary.adjoint() * (plan.omega * plan.omega.adjoint()) *
                      plan.merge_unitary;
  DensityMatrix rho_a_out = DensityMatrix::from_matrix(std::move(rho), 1e-10, 1e-10, 1e-10);

  ComplexMatrix evolved = plan.merge_unitary.adjoint() * plan.omega;
  ComplexMatrix block = evolved.topRows(plan.dim_a);
  double weight = block.squaredNorm();
  if (std::abs(weight - 1.0) > 1e-10)
    throw NumericalFailure("finalize_multicopy: leading block carries weight " +
                           std::to_string(weight));
  BipartitePureState projected = BipartitePureState::normalized(std::move(block));

  Index n = plan.copies;
  std::vector<Index> factors(static_cast<std::size_t>(n) + 1, plan.dim_b);
  factors[0] = plan.dim_a;
  ComplexVector ket = projected.ket();
  std::vector<DensityMatrix> marginals;
  marginals.reserve(static_cast<std::size_t>(n));
  for (Index slot = 0; slot < n; ++slot)
    marginals.push_back(partial_trace(ket, factors, {0, static_cast<int>(slot) + 1}));

  return MultiCopyResult{std::move(rho_a_out), std::move(projected), std::move(marginals)};
}

/// Averages a state on (Alice, Bob slots) over all orderings of the Bob
/// slots. Used to inspect the indistinguishable-particle reading of the
/// output; feasible only for small slot counts.
inline BipartitePureState symmetrize_labels(const BipartitePureState& state, Index dim_b,
                                            Index copies) {
  if (copies < 1 || copies > 8)
    throw DimensionOverflow("symmetrize_labels: slot count outside [1, 8]");
  Index bob_dim = state.dim_b();
  Index expected = 1;
  for (Index i = 0; i < copies; ++i) expected *= dim_b;
  if (expected != bob_dim)
    throw DimensionMismatch("symmetrize_labels: Bob dimension is not dim_b^copies");

  // Digit strides of each slot in the column index (first slot most
  // significant).
  std::vector<Index> stride(static_cast<std::size_t>(copies));
  Index s = 1;
  for (Index i = copies; i-- > 0;) {
    stride[static_cast<std::size_t>(i)] = s;
    s *= dim_b;
  }

  std::vector<Index> order(static_cast<std::size_t>(copies));
  std::iota(order.begin(), order.end(), Index{0});
  ComplexMatrix sum = ComplexMatrix::Zero(state.dim_a(), bob_dim);
  const ComplexMatrix& coeffs = state.coeffs();
  do {
    for (Index c = 0; c < bob_dim; ++c) {
      // Column c's digits rerouted through the current slot ordering.
      Index mapped = 0;
      for (Index slot = 0; slot < copies; ++slot) {
        Index digit = (c / stride[static_cast<std::size_t>(slot)]) % dim_b;
        mapped += digit * stride[static_cast<std::size_t>(order[static_cast<std::size_t>(slot)])];
      }
      sum.col(mapped) += coeffs.col(c);
    }
  } while (std::next_permutation(order.begin(), order.end()));

  double norm = sum.norm();
  if (norm <= 1e-12)
    throw NumericalFailure("symmetrize_labels: state has no symmetric component");
  return BipartitePureState::normalized(std::move(sum));
}

/// Spectrum of the combined output when each branch block is relabeled by its
/// own permutation of Bob's labels, as happens for distinguishable carriers.
/// A common relabeling leaves the spectrum at the target values; genuinely
/// different ones pull it away.
inline SpectrumReport distinguishable_omega(const RealVector& lambda, const RealVector& sigma,
                                            const std::vector<double>& probs,
                                            const std::vector<Permutation>& relabelings,
                                            Index dim_a, Index dim_b,
                                            Index size_cap = kDefaultSizeCap) {
  OmegaMatrices mats = build_omega(lambda, sigma, probs, dim_a, dim_b, size_cap);
  Index n = static_cast<Index>(probs.size());
  if (static_cast<Index>(relabelings.size()) != n)
    throw DimensionMismatch("distinguishable_omega: need one relabeling per branch");
  Index bob_dim = mats.delta.cols();
  ComplexMatrix variant(n * dim_a, bob_dim);
  for (Index i = 0; i < n; ++i) {
    const Permutation& v = relabelings[static_cast<std::size_t>(i)];
    if (v.size() != bob_dim)
      throw DimensionMismatch("distinguishable_omega: relabeling must act on the labeled space");
    variant.middleRows(i * dim_a, dim_a) = std::sqrt(probs[static_cast<std::size_t>(i)]) *
                                           (mats.delta * v.matrix());
  }

  SpectrumReport report;
  report.spectrum = hermitian_spectrum(variant * variant.adjoint());
  report.reference = RealVector::Zero(n * dim_a);
  for (Index k = 0; k < sigma.size() && k < report.reference.size(); ++k)
    report.reference(k) = sigma(k) * sigma(k);
  report.reference = sorted_descending(report.reference);
  report.max_deviation = 0.0;
  for (Index i = 0; i < report.spectrum.size(); ++i)
    report.max_deviation =
        std::max(report.max_deviation, std::abs(report.spectrum(i) - report.reference(i)));
  return report;
}

/// Swap of two Bob slots as a permutation of the labeled product space.
inline Permutation slot_swap(Index dim_b, Index copies, Index first, Index second) {
  if (first < 0 || second < 0 || first >= copies || second >= copies)
    throw DimensionMismatch("slot_swap: slot index out of range");
  Index bob_dim = 1;
  std::vector<Index> stride(static_cast<std::size_t>(copies));
  for (Index i = copies; i-- > 0;) {
    stride[static_cast<std::size_t>(i)] = bob_dim;
    bob_dim *= dim_b;
  }
  Permutation p;
  p.map.resize(static_cast<std::size_t>(bob_dim));
  for (Index c = 0; c < bob_dim; ++c) {
    Index d1 = (c / stride[static_cast<std::size_t>(first)]) % dim_b;
    Index d2 = (c / stride[static_cast<std::size_t>(second)]) % dim_b;
    Index mapped = c + (d2 - d1) * stride[static_cast<std::size_t>(first)] +
                   (d1 - d2) * stride[static_cast<std::size_t>(second)];
    p.map[static_cast<std::size_t>(c)] = mapped;
  }
  return p;
}

}  // namespace entx::multi
