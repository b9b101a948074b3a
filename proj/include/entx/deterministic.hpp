#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "entx/dilation.hpp"
#include "entx/montecarlo.hpp"
#include "entx/state.hpp"

// Deterministic single-copy transformation. When the input's squared Schmidt
// vector is majorized by the target's, a doubly stochastic matrix bridges the
// two spectra; its decomposition into permutations yields a complete
// measurement whose every branch lands on the target once Bob applies a
// branch-dependent relabeling that Alice communicates to him.

namespace entx::det {

inline constexpr double kBirkhoffZero = 1e-12;

/// One convex term of a doubly stochastic matrix: weight times a permutation.
struct BirkhoffTerm {
  double weight = 0.0;
  Permutation perm;
};

/// Everything needed to run the deterministic protocol on Schmidt spectra
/// padded to a common dimension d.
struct DeterministicPlan {
  RealVector lambda;                      // input Schmidt coefficients, descending, length d
  RealVector sigma;                       // target Schmidt coefficients, descending, length d
  RealMatrix bridge;                      // d x d doubly stochastic, lambda^2 = bridge sigma^2
  std::vector<BirkhoffTerm> terms;        // bridge = sum of weight * permutation
  std::vector<ComplexMatrix> povm;        // measurement operators, one per term
  ComplexMatrix unitary;                  // (n d) x (n d); first d columns stack the povm
  std::vector<Permutation> bob_corrections;  // relabeling Bob applies on branch i
  std::vector<double> branch_probs;       // Birkhoff weights = branch probabilities

  Index dim() const { return lambda.size(); }
  Index branches() const { return static_cast<Index>(terms.size()); }
};

/// Record of one sampled protocol run.
struct ProtocolTrace {
  int branch = 0;
  int classical_bits_sent = 0;
  Permutation bob_applied;
  BipartitePureState final_state;
  double final_overlap_with_target = 0.0;
};

/// Bits needed to tell Bob which branch occurred.
inline int classical_bits(Index branches) {
  if (branches <= 1) return 0;
  int bits = 0;
  Index span = 1;
  while (span < branches) {
    span *= 2;
    ++bits;
  }
  return bits;
}

namespace detail {

inline RealVector canonical_probability(RealVector v, const char* name) {
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) < -1e-12)
      throw NotNormalized(std::string(name) + ": negative entry");
    v(i) = std::max(0.0, v(i));
    sum += v(i);
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw NotNormalized(std::string(name) + ": entries sum to " + std::to_string(sum));
  return sorted_descending(std::move(v));
}

}  // namespace detail

/// Builds a doubly stochastic matrix D with lambdaSq = D sigmaSq, as a
/// product of at most d-1 T-transforms (convex mixes of the identity and one
/// transposition). Requires lambdaSq to be majorized by sigmaSq.
inline RealMatrix doubly_stochastic_bridge(RealVector lambda_sq, RealVector sigma_sq,
                                           double tolerance = 1e-12) {
  lambda_sq = detail::canonical_probability(std::move(lambda_sq), "bridge: input spectrum");
  sigma_sq = detail::canonical_probability(std::move(sigma_sq), "bridge: target spectrum");
  pad_to_common(lambda_sq, sigma_sq);
  if (!majorizes(lambda_sq, sigma_sq))
    throw NotMajorized("bridge: input spectrum is not majorized by the target spectrum");

  Index d = lambda_sq.size();
  RealMatrix bridge = RealMatrix::Identity(d, d);
  RealVector cur = sigma_sq;
  for (Index step = 0; step < 2 * d; ++step) {
    // Largest j with cur_j above the goal, then the first later index below it.
    Index j = -1, k = -1;
    for (Index i = 0; i < d; ++i)
      if (cur(i) - lambda_sq(i) > 0.5 * tolerance) j = i;
    if (j < 0) break;  // converged
    for (Index i = j + 1; i < d && k < 0; ++i)
      if (lambda_sq(i) - cur(i) > 0.0) k = i;
    if (k < 0) throw NumericalFailure("bridge: no transfer partner; spectra inconsistent");

    double excess = cur(j) - lambda_sq(j);
    double deficit = lambda_sq(k) - cur(k);
    double delta = std::min(excess, deficit);
    double spread = cur(j) - cur(k);
    double t = (spread > 0.0) ? std::clamp(1.0 - delta / spread, 0.0, 1.0) : 1.0;
    RealMatrix tt = RealMatrix::Identity(d, d);
    tt(j, j) = t;
    tt(k, k) = t;
    tt(j, k) = 1.0 - t;
    tt(k, j) = 1.0 - t;
    bridge = tt * bridge;
    cur(j) -= delta;
    cur(k) += delta;
  }

  if (max_abs(RealMatrix(bridge * sigma_sq - lambda_sq)) > 1e-10)
    throw NumericalFailure("bridge: T-transform chain did not reach the input spectrum");
  return bridge;
}

namespace detail {

// Kuhn's augmenting-path matching on the positive-entry bipartite graph.
inline bool kuhn_augment(const RealMatrix& m, double zero, Index row, std::vector<char>& visited,
                         std::vector<Index>& col_to_row) {
  Index d = m.cols();
  for (Index c = 0; c < d; ++c) {
    if (m(row, c) <= zero || visited[static_cast<std::size_t>(c)]) continue;
    visited[static_cast<std::size_t>(c)] = 1;
    if (col_to_row[static_cast<std::size_t>(c)] < 0 ||
        kuhn_augment(m, zero, col_to_row[static_cast<std::size_t>(c)], visited, col_to_row)) {
      col_to_row[static_cast<std::size_t>(c)] = row;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Greedy Birkhoff decomposition: repeatedly find a perfect matching among
/// the positive entries, peel off the minimal matched value times that
/// permutation, and stop when the residual vanishes.
inline std::vector<BirkhoffTerm> birkhoff_decompose(const RealMatrix& matrix,
                                                    double tolerance = kBirkhoffZero) {
  Index d = matrix.rows();
  if (d < 1 || matrix.cols() != d)
    throw DimensionMismatch("birkhoff_decompose: matrix must be square and non-empty");
  for (Index r = 0; r < d; ++r) {
    double row_sum = matrix.row(r).sum();
    double col_sum = matrix.col(r).sum();
    if (matrix.row(r).minCoeff() < -1e-10 || std::abs(row_sum - 1.0) > 1e-8 ||
        std::abs(col_sum - 1.0) > 1e-8)
      throw NumericalFailure("birkhoff_decompose: matrix is not doubly stochastic");
  }

  RealMatrix residual = matrix.cwiseMax(0.0);
  std::vector<BirkhoffTerm> terms;
  Index max_steps = d * d - d + 2;
  for (Index step = 0; step < max_steps; ++step) {
    if (max_abs(residual) <= tolerance) break;

    std::vector<Index> col_to_row(static_cast<std::size_t>(d), -1);
    for (Index r = 0; r < d; ++r) {
      std::vector<char> visited(static_cast<std::size_t>(d), 0);
      if (!detail::kuhn_augment(residual, tolerance, r, visited, col_to_row))
        throw NumericalFailure("birkhoff_decompose: residual admits no perfect matching");
    }

    BirkhoffTerm term;
    term.perm.map.resize(static_cast<std::size_t>(d));
    double delta = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < d; ++c) {
      Index r = col_to_row[static_cast<std::size_t>(c)];
      term.perm.map[static_cast<std::size_t>(c)] = r;  // permutation sends e_c to e_r
      delta = std::min(delta, residual(r, c));
    }
    term.weight = delta;
    for (Index c = 0; c < d; ++c)
      residual(term.perm.map[static_cast<std::size_t>(c)], c) -= delta;
    terms.push_back(std::move(term));
  }
  if (max_abs(residual) > tolerance)
    throw NumericalFailure("birkhoff_decompose: residual mass left after maximal step count");

  double total = 0.0;
  for (const auto& term : terms) total += term.weight;
  if (std::abs(total - 1.0) > 1e-10)
    throw NumericalFailure("birkhoff_decompose: weights sum to " + std::to_string(total));
  return terms;
}

/// Measurement operators and Bob-side relabelings from a Birkhoff
/// decomposition. The ith operator carries sqrt(weight_i) times the ratio of
/// the relabeled target coefficients over the input ones; on directions where
/// both spectra vanish it carries sqrt(weight_i) so that the set stays
/// complete. Applied to the input's Schmidt diagonal, operator i produces the
/// target diagonal with Bob's labels permuted; the stored correction is the
/// permutation Bob applies to undo that.
struct PovmSet {
  std::vector<ComplexMatrix> elements;
  std::vector<Permutation> bob_corrections;
  std::vector<double> weights;
};

inline PovmSet build_povm(const RealVector& lambda, const RealVector& sigma,
                          const std::vector<BirkhoffTerm>& terms) {
  Index d = lambda.size();
  if (sigma.size() != d)
    throw DimensionMismatch("build_povm: spectra must share the padded dimension");
  if (terms.empty()) throw DimensionMismatch("build_povm: no decomposition terms");
  PovmSet set;
  for (const auto& term : terms) {
    if (term.perm.size() != d)
      throw DimensionMismatch("build_povm: permutation dimension mismatch");
    ComplexMatrix a = ComplexMatrix::Zero(d, d);
    double root_w = std::sqrt(term.weight);
    for (Index j = 0; j < d; ++j) {
      Index r = term.perm.map[static_cast<std::size_t>(j)];
      if (sigma(j) > tol::zero) {
        if (lambda(r) <= tol::zero)
          throw SingularInput("build_povm: zero input coefficient on needed support");
        a(j, r) = root_w * sigma(j) / lambda(r);
      } else if (lambda(r) <= tol::zero) {
        a(j, r) = root_w;  // null-direction completion
      }
    }
    set.elements.push_back(std::move(a));
    set.bob_corrections.push_back(term.perm.inverse());
    set.weights.push_back(term.weight);
  }
  return set;
}

/// Stacks the measurement operators into an isometry and completes it to a
/// square unitary whose first block column is exactly that stack.
inline ComplexMatrix assemble_measurement_unitary(const std::vector<ComplexMatrix>& povm) {
  if (povm.empty()) throw DimensionMismatch("assemble_measurement_unitary: empty set");
  Index d = povm.front().rows();
  Index n = static_cast<Index>(povm.size());
  ComplexMatrix stacked(n * d, d);
  for (Index i = 0; i < n; ++i) {
    const ComplexMatrix& a = povm[static_cast<std::size_t>(i)];
    if (a.rows() != d || a.cols() != d)
      throw DimensionMismatch("assemble_measurement_unitary: operators must share a square shape");
    stacked.middleRows(i * d, d) = a;
  }
  ComplexMatrix gram = stacked.adjoint() * stacked;
  gram -= ComplexMatrix::Identity(d, d);
  if (max_abs(gram) > 1e-8)
    throw NotIsometry("assemble_measurement_unitary: operators are not complete");
  return orthonormal_completion(stacked);
}

/// Builds the full deterministic plan for the given Schmidt coefficient
/// vectors (amplitudes, not squares), padded to at least `dim` levels.
inline DeterministicPlan make_deterministic_plan(RealVector lambda, RealVector sigma,
                                                 Index dim = 0) {
  lambda = single::detail::canonical_schmidt(std::move(lambda), "deterministic plan: input");
  sigma = single::detail::canonical_schmidt(std::move(sigma), "deterministic plan: target");
  pad_to_common(lambda, sigma);
  if (lambda.size() < dim) {
    RealVector pad = RealVector::Zero(dim);
    pad.head(lambda.size()) = lambda;
    lambda = pad;
    pad = RealVector::Zero(dim);
    pad.head(sigma.size()) = sigma;
    sigma = pad;
  } else if (dim > 0 && lambda.size() > dim) {
    // Only zero padding may be dropped when shrinking to the caller's space.
    for (Index i = dim; i < lambda.size(); ++i)
      if (lambda(i) > tol::zero || sigma(i) > tol::zero)
        throw DimensionMismatch("deterministic plan: spectra exceed the requested dimension");
    lambda.conservativeResize(dim);
    sigma.conservativeResize(dim);
  }

  DeterministicPlan plan;
  plan.bridge =
      doubly_stochastic_bridge(lambda.cwiseProduct(lambda), sigma.cwiseProduct(sigma));
  plan.terms = birkhoff_decompose(plan.bridge);
  PovmSet set = build_povm(lambda, sigma, plan.terms);
  plan.lambda = std::move(lambda);
  plan.sigma = std::move(sigma);
  plan.povm = std::move(set.elements);
  plan.bob_corrections = std::move(set.bob_corrections);
  plan.branch_probs = std::move(set.weights);
  plan.unitary = assemble_measurement_unitary(plan.povm);
  return plan;
}

namespace detail {

// Restricts a plan-level permutation to Bob's actual dimension: it must agree
// with the plan permutation on the target's support; elsewhere the images are
// filled in ascending order.
inline Permutation fit_permutation(const Permutation& perm, const RealVector& support,
                                   Index dim_out) {
  Permutation out;
  out.map.assign(static_cast<std::size_t>(dim_out), -1);
  std::vector<char> used(static_cast<std::size_t>(dim_out), 0);
  for (Index j = 0; j < perm.size() && j < dim_out; ++j) {
    if (j >= support.size() || support(j) <= tol::zero) continue;
    Index image = perm.map[static_cast<std::size_t>(j)];
    if (image >= dim_out)
      throw NumericalFailure("fit_permutation: support image exceeds Bob's dimension");
    out.map[static_cast<std::size_t>(j)] = image;
    used[static_cast<std::size_t>(image)] = 1;
  }
  Index next = 0;
  for (std::size_t j = 0; j < out.map.size(); ++j) {
    if (out.map[j] >= 0) continue;
    while (used[static_cast<std::size_t>(next)]) ++next;
    out.map[j] = next;
    used[static_cast<std::size_t>(next)] = 1;
  }
  return out;
}

}  // namespace detail

/// Deterministic outcome of one branch: weight, Bob's applied relabeling, and
/// the final state (target frame re-applied). Suppressing the correction
/// reproduces the state Bob holds before reading Alice's message.
struct BranchOutcome {
  double weight = 0.0;
  Permutation bob_applied;
  BipartitePureState final_state;
  double overlap_with_target = 0.0;
};

inline BranchOutcome apply_branch(const DeterministicPlan& plan, const SchmidtForm& input_form,
                                  const SchmidtForm& target_form,
                                  const BipartitePureState& target, Index branch,
                                  bool apply_correction = true) {
  if (branch < 0 || branch >= plan.branches())
    throw DimensionMismatch("apply_branch: branch index out of range");
  Index m = input_form.dim_a;
  Index nb = input_form.dim_b;
  if (plan.dim() != m)
    throw DimensionMismatch("apply_branch: plan dimension does not match the input state");

  const ComplexMatrix& op = plan.povm[static_cast<std::size_t>(branch)];
  ComplexMatrix coeff = op * input_form.diagonal();
  double weight = coeff.squaredNorm();

  Permutation correction = detail::fit_permutation(
      plan.bob_corrections[static_cast<std::size_t>(branch)].inverse(), plan.sigma, nb);
  correction = correction.inverse();
  if (apply_correction) coeff = coeff * correction.matrix().transpose();

  // Hand the branch back in the target's own frame.
  ComplexMatrix embedded = ComplexMatrix::Zero(target_form.dim_a, target_form.dim_b);
  for (Index r = 0; r < target_form.dim_a && r < coeff.rows(); ++r)
    for (Index c = 0; c < target_form.dim_b && c < coeff.cols(); ++c) embedded(r, c) = coeff(r, c);
  BipartitePureState final_state = BipartitePureState::normalized(
      target_form.left_unitary.adjoint() * embedded * target_form.right_unitary);

  BranchOutcome out{weight, std::move(correction), std::move(final_state), 0.0};
  out.overlap_with_target = overlap(out.final_state, target);
  return out;
}

/// Runs the deterministic protocol once: samples a branch with its exact
/// probability, applies the branch operator and Bob's communicated
/// correction, and reports the final state and the message size.
inline ProtocolTrace run_deterministic(const BipartitePureState& input,
                                       const BipartitePureState& target, std::uint64_t seed) {
  SchmidtForm sf = schmidt_decompose(input);
  SchmidtForm tf = schmidt_decompose(target);
  DeterministicPlan plan = make_deterministic_plan(sf.lambdas, tf.lambdas, sf.dim_a);

  // Exact branch probabilities from the state; they must match the Birkhoff
  // weights or the construction is broken.
  std::vector<double> weights(static_cast<std::size_t>(plan.branches()), 0.0);
  ComplexMatrix diag = sf.diagonal();
  for (Index i = 0; i < plan.branches(); ++i) {
    weights[static_cast<std::size_t>(i)] =
        (plan.povm[static_cast<std::size_t>(i)] * diag).squaredNorm();
    if (std::abs(weights[static_cast<std::size_t>(i)] -
                 plan.branch_probs[static_cast<std::size_t>(i)]) > 1e-10)
      throw NumericalFailure("run_deterministic: branch probability deviates from its weight");
  }

  mc::TrialRng rng(seed);
  int branch = mc::sample_outcome(weights, rng);
  BranchOutcome outcome = apply_branch(plan, sf, tf, target, branch);

  ProtocolTrace trace{branch, classical_bits(plan.branches()), std::move(outcome.bob_applied),
                      std::move(outcome.final_state), outcome.overlap_with_target};
  return trace;
}

}  // namespace entx::det
