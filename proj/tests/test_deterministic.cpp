#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "entx/entx.hpp"

using namespace entx;
using Catch::Matchers::WithinAbs;

namespace {

RealVector amps(std::initializer_list<double> squared) {
  RealVector v(static_cast<Index>(squared.size()));
  Index i = 0;
  for (double s : squared) v(i++) = std::sqrt(s);
  return v;
}

RealVector vec(std::initializer_list<double> xs) {
  RealVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

BipartitePureState diag_state(const RealVector& lambdas, Index rows = 0, Index cols = 0) {
  Index r = rows ? rows : lambdas.size();
  Index c = cols ? cols : lambdas.size();
  return BipartitePureState::normalized(diagonal_embed(lambdas, r, c));
}

const det::BirkhoffTerm* find_term(const std::vector<det::BirkhoffTerm>& terms,
                                   const Permutation& perm) {
  for (const auto& t : terms)
    if (t.perm == perm) return &t;
  return nullptr;
}

Permutation swap2() {
  Permutation p;
  p.map = {1, 0};
  return p;
}

}  // namespace

TEST_CASE("doubly stochastic bridge on reference spectra") {
  RealMatrix d = det::doubly_stochastic_bridge(vec({0.6, 0.4}), vec({0.8, 0.2}));
  RealMatrix expect(2, 2);
  expect << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  CHECK(max_abs(RealMatrix(d - expect)) <= 1e-12);

  RealMatrix same = det::doubly_stochastic_bridge(vec({0.7, 0.3}), vec({0.7, 0.3}));
  CHECK(max_abs(RealMatrix(same - RealMatrix::Identity(2, 2))) <= 1e-12);

  RealMatrix flat = det::doubly_stochastic_bridge(vec({0.5, 0.5}), vec({1.0, 0.0}));
  RealMatrix half(2, 2);
  half << 0.5, 0.5, 0.5, 0.5;
  CHECK(max_abs(RealMatrix(flat - half)) <= 1e-12);

  CHECK_THROWS_AS(det::doubly_stochastic_bridge(vec({0.8, 0.2}), vec({0.6, 0.4})),
                  NotMajorized);
}

TEST_CASE("doubly stochastic bridge properties on random majorized pairs") {
  mc::TrialRng rng(11);
  for (int t = 0; t < 30; ++t) {
    Index dim = 2 + static_cast<Index>(rng.below(5));
    auto [lam2, sig2] = rnd::random_majorized_pair(dim, rng);
    RealMatrix d = det::doubly_stochastic_bridge(lam2, sig2);
    // Maps the target spectrum to the input spectrum.
    CHECK(max_abs(RealVector(d * sig2 - lam2)) <= 1e-10);
    // Doubly stochastic with nonnegative entries.
    for (Index r = 0; r < dim; ++r) {
      CHECK_THAT(d.row(r).sum(), WithinAbs(1.0, 1e-10));
      CHECK_THAT(d.col(r).sum(), WithinAbs(1.0, 1e-10));
    }
    CHECK(d.minCoeff() >= -1e-12);
  }
}

TEST_CASE("birkhoff decomposition of reference matrices") {
  auto id_terms = det::birkhoff_decompose(RealMatrix::Identity(3, 3));
  REQUIRE(id_terms.size() == 1);
  CHECK_THAT(id_terms[0].weight, WithinAbs(1.0, 1e-12));
  CHECK(id_terms[0].perm.is_identity());

  RealMatrix bridge(2, 2);
  bridge << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  auto terms = det::birkhoff_decompose(bridge);
  REQUIRE(terms.size() == 2);
  const det::BirkhoffTerm* id = find_term(terms, Permutation::identity(2));
  const det::BirkhoffTerm* sw = find_term(terms, swap2());
  REQUIRE(id != nullptr);
  REQUIRE(sw != nullptr);
  CHECK_THAT(id->weight, WithinAbs(2.0 / 3.0, 1e-12));
  CHECK_THAT(sw->weight, WithinAbs(1.0 / 3.0, 1e-12));

  RealMatrix half(2, 2);
  half << 0.5, 0.5, 0.5, 0.5;
  auto even = det::birkhoff_decompose(half);
  REQUIRE(even.size() == 2);
  CHECK_THAT(even[0].weight, WithinAbs(0.5, 1e-12));
  CHECK_THAT(even[1].weight, WithinAbs(0.5, 1e-12));
}

TEST_CASE("birkhoff decomposition rejects non-doubly-stochastic input") {
  RealMatrix rows_off(2, 2);
  rows_off << 0.6, 0.6, 0.4, 0.4;
  CHECK_THROWS_AS(det::birkhoff_decompose(rows_off), NumericalFailure);
  RealMatrix negative(2, 2);
  negative << 1.2, -0.2, -0.2, 1.2;
  CHECK_THROWS_AS(det::birkhoff_decompose(negative), NumericalFailure);
  CHECK_THROWS_AS(det::birkhoff_decompose(RealMatrix::Ones(2, 3)), DimensionMismatch);
}

TEST_CASE("birkhoff decomposition reconstructs random bridges") {
  mc::TrialRng rng(13);
  for (int t = 0; t < 25; ++t) {
    Index dim = 2 + static_cast<Index>(rng.below(5));
    auto [lam2, sig2] = rnd::random_majorized_pair(dim, rng);
    RealMatrix d = det::doubly_stochastic_bridge(lam2, sig2);
    auto terms = det::birkhoff_decompose(d);
    RealMatrix recon = RealMatrix::Zero(dim, dim);
    double wsum = 0.0;
    for (const auto& term : terms) {
      CHECK(term.weight > 0.0);
      recon += term.weight * term.perm.matrix().real();
      wsum += term.weight;
    }
    CHECK(max_abs(RealMatrix(recon - d)) <= 1e-10);
    CHECK_THAT(wsum, WithinAbs(1.0, 1e-10));
    // Caratheodory-style bound on the number of terms.
    CHECK(static_cast<Index>(terms.size()) <= (dim - 1) * (dim - 1) + 1);
  }
}

TEST_CASE("measurement operators for the two-branch reference pair") {
  RealVector lambda = amps({0.6, 0.4});
  RealVector sigma = amps({0.8, 0.2});
  auto terms = det::birkhoff_decompose(det::doubly_stochastic_bridge(
      lambda.cwiseProduct(lambda), sigma.cwiseProduct(sigma)));
  det::PovmSet set = det::build_povm(lambda, sigma, terms);
  REQUIRE(set.elements.size() == 2);

  for (std::size_t i = 0; i < terms.size(); ++i) {
    const ComplexMatrix& a = set.elements[i];
    if (terms[i].perm.is_identity()) {
      CHECK_THAT(set.weights[i], WithinAbs(2.0 / 3.0, 1e-12));
      CHECK_THAT(std::abs(a(0, 0)), WithinAbs(std::sqrt(8.0 / 9.0), 1e-12));
      CHECK_THAT(std::abs(a(1, 1)), WithinAbs(std::sqrt(1.0 / 3.0), 1e-12));
      CHECK_THAT(std::abs(a(0, 1)) + std::abs(a(1, 0)), WithinAbs(0.0, 1e-15));
    } else {
      CHECK_THAT(set.weights[i], WithinAbs(1.0 / 3.0, 1e-12));
      CHECK_THAT(std::abs(a(0, 1)), WithinAbs(std::sqrt(2.0 / 3.0), 1e-12));
      CHECK_THAT(std::abs(a(1, 0)), WithinAbs(1.0 / 3.0, 1e-12));
      CHECK_THAT(std::abs(a(0, 0)) + std::abs(a(1, 1)), WithinAbs(0.0, 1e-15));
    }
  }

  // Completeness: the operators form a measurement.
  ComplexMatrix total = ComplexMatrix::Zero(2, 2);
  for (const auto& a : set.elements) total += a.adjoint() * a;
  CHECK(max_abs(ComplexMatrix(total - ComplexMatrix::Identity(2, 2))) <= 1e-12);

  // Each branch sends the Schmidt diagonal to the (relabeled) target diagonal
  // with its Birkhoff weight, and Bob's stored correction undoes the
  // relabeling exactly.
  ComplexMatrix lam_d = diagonal_embed(lambda, 2, 2);
  ComplexMatrix sig_d = diagonal_embed(sigma, 2, 2);
  for (std::size_t i = 0; i < set.elements.size(); ++i) {
    ComplexMatrix branch = set.elements[i] * lam_d;
    CHECK_THAT(branch.squaredNorm(), WithinAbs(set.weights[i], 1e-12));
    ComplexMatrix rho = branch * branch.adjoint();
    CHECK(max_abs(ComplexMatrix(rho - set.weights[i] * sig_d * sig_d.adjoint())) <= 1e-12);
    ComplexMatrix corrected = branch * set.bob_corrections[i].matrix().transpose();
    CHECK(max_abs(ComplexMatrix(corrected - std::sqrt(set.weights[i]) * sig_d)) <= 1e-12);
  }
}

TEST_CASE("measurement operators for the balanced-to-skew pair") {
  RealVector lambda = amps({0.5, 0.5});
  RealVector sigma = amps({0.8, 0.2});
  det::DeterministicPlan plan = det::make_deterministic_plan(lambda, sigma);
  REQUIRE(plan.branches() == 2);
  CHECK_THAT(plan.branch_probs[0], WithinAbs(0.5, 1e-12));
  CHECK_THAT(plan.branch_probs[1], WithinAbs(0.5, 1e-12));
  for (Index i = 0; i < 2; ++i) {
    const auto& term = plan.terms[static_cast<std::size_t>(i)];
    const auto& a = plan.povm[static_cast<std::size_t>(i)];
    if (term.perm.is_identity()) {
      CHECK_THAT(std::abs(a(0, 0)), WithinAbs(std::sqrt(0.8), 1e-12));
      CHECK_THAT(std::abs(a(1, 1)), WithinAbs(std::sqrt(0.2), 1e-12));
    } else {
      CHECK_THAT(std::abs(a(0, 1)), WithinAbs(std::sqrt(0.8), 1e-12));
      CHECK_THAT(std::abs(a(1, 0)), WithinAbs(std::sqrt(0.2), 1e-12));
    }
  }
}

TEST_CASE("identical spectra need a single trivial branch") {
  det::DeterministicPlan plan = det::make_deterministic_plan(amps({0.7, 0.3}), amps({0.7, 0.3}));
  REQUIRE(plan.branches() == 1);
  CHECK_THAT(plan.branch_probs[0], WithinAbs(1.0, 1e-12));
  CHECK(max_abs(ComplexMatrix(plan.povm[0] - ComplexMatrix::Identity(2, 2))) <= 1e-12);
  CHECK(det::classical_bits(plan.branches()) == 0);
}

TEST_CASE("rank-dropping target handles null levels") {
  // Bell to product: sigma places nothing on the second level.
  det::DeterministicPlan plan = det::make_deterministic_plan(amps({0.5, 0.5}), amps({1.0, 0.0}));
  REQUIRE(plan.branches() == 2);
  ComplexMatrix total = ComplexMatrix::Zero(2, 2);
  for (const auto& a : plan.povm) total += a.adjoint() * a;
  CHECK(max_abs(ComplexMatrix(total - ComplexMatrix::Identity(2, 2))) <= 1e-12);
  for (Index i = 0; i < 2; ++i)
    CHECK_THAT(plan.branch_probs[static_cast<std::size_t>(i)], WithinAbs(0.5, 1e-12));

  // A target level with weight on an input null level is unreachable.
  std::vector<det::BirkhoffTerm> manual{{1.0, Permutation::identity(2)}};
  CHECK_THROWS_AS(det::build_povm(amps({1.0, 0.0}), amps({0.5, 0.5}), manual), SingularInput);
}

TEST_CASE("measurement unitary embeds the operator stack isometrically") {
  det::DeterministicPlan plan = det::make_deterministic_plan(amps({0.6, 0.4}), amps({0.8, 0.2}));
  REQUIRE(plan.unitary.rows() == 4);
  CHECK(unitarity_residual(plan.unitary) <= 1e-10);
  for (Index i = 0; i < plan.branches(); ++i) {
    ComplexMatrix block = plan.unitary.block(2 * i, 0, 2, 2);
    CHECK(max_abs(ComplexMatrix(block - plan.povm[static_cast<std::size_t>(i)])) <= 1e-12);
  }

  std::vector<ComplexMatrix> trivial{ComplexMatrix::Identity(3, 3)};
  CHECK(max_abs(ComplexMatrix(det::assemble_measurement_unitary(trivial) -
                              ComplexMatrix::Identity(3, 3))) <= 1e-12);

  std::vector<ComplexMatrix> incomplete{0.5 * ComplexMatrix::Identity(2, 2),
                                        0.5 * ComplexMatrix::Identity(2, 2)};
  CHECK_THROWS_AS(det::assemble_measurement_unitary(incomplete), NotIsometry);
}

TEST_CASE("plan construction validates spectra and dimensions") {
  CHECK_THROWS_AS(det::make_deterministic_plan(amps({0.8, 0.2}), amps({0.6, 0.4})),
                  NotMajorized);
  CHECK_THROWS_AS(det::make_deterministic_plan(amps({0.9, 0.2}), amps({0.8, 0.2})),
                  NotNormalized);

  // Padding to the caller's larger space.
  det::DeterministicPlan padded =
      det::make_deterministic_plan(amps({0.6, 0.4}), amps({0.8, 0.2}), 3);
  CHECK(padded.dim() == 3);
  ComplexMatrix total = ComplexMatrix::Zero(3, 3);
  for (const auto& a : padded.povm) total += a.adjoint() * a;
  CHECK(max_abs(ComplexMatrix(total - ComplexMatrix::Identity(3, 3))) <= 1e-12);

  // Shrinking is allowed only over zero padding.
  CHECK_NOTHROW(det::make_deterministic_plan(amps({0.6, 0.4, 0.0}), amps({0.8, 0.2}), 2));
  CHECK_THROWS_AS(det::make_deterministic_plan(amps({0.5, 0.3, 0.2}), amps({0.8, 0.1, 0.1}), 2),
                  DimensionMismatch);
}

TEST_CASE("every branch reaches the target after Bob's relabeling") {
  BipartitePureState in = diag_state(amps({0.6, 0.4}));
  BipartitePureState tgt = diag_state(amps({0.8, 0.2}));
  SchmidtForm sf = schmidt_decompose(in);
  SchmidtForm tf = schmidt_decompose(tgt);
  det::DeterministicPlan plan = det::make_deterministic_plan(sf.lambdas, tf.lambdas, sf.dim_a);

  double total = 0.0;
  for (Index b = 0; b < plan.branches(); ++b) {
    det::BranchOutcome out = det::apply_branch(plan, sf, tf, tgt, b);
    CHECK_THAT(out.weight, WithinAbs(plan.branch_probs[static_cast<std::size_t>(b)], 1e-12));
    CHECK(out.overlap_with_target >= 1.0 - 1e-9);
    total += out.weight;
  }
  CHECK_THAT(total, WithinAbs(1.0, 1e-12));

  // Not every branch is aligned before the correction: the swap branch lands
  // on a state orthogonal to the target here (no diagonal fixed points).
  for (Index b = 0; b < plan.branches(); ++b) {
    if (plan.terms[static_cast<std::size_t>(b)].perm.is_identity()) continue;
    det::BranchOutcome raw = det::apply_branch(plan, sf, tf, tgt, b, false);
    CHECK_THAT(raw.overlap_with_target, WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("uncorrected branch overlap equals the fixed-point weight squared") {
  mc::TrialRng rng(17);
  for (int t = 0; t < 15; ++t) {
    Index dim = 2 + static_cast<Index>(rng.below(4));
    auto [lam2, sig2] = rnd::random_majorized_pair(dim, rng);
    RealVector lambda(dim), sigma(dim);
    for (Index i = 0; i < dim; ++i) {
      lambda(i) = std::sqrt(lam2(i));
      sigma(i) = std::sqrt(sig2(i));
    }
    BipartitePureState in = diag_state(lambda);
    BipartitePureState tgt = diag_state(sigma);
    SchmidtForm sf = schmidt_decompose(in);
    SchmidtForm tf = schmidt_decompose(tgt);
    det::DeterministicPlan plan = det::make_deterministic_plan(sf.lambdas, tf.lambdas, sf.dim_a);
    for (Index b = 0; b < plan.branches(); ++b) {
      const Permutation& perm = plan.terms[static_cast<std::size_t>(b)].perm;
      double fixed = 0.0;
      for (Index j = 0; j < dim; ++j)
        if (perm.map[static_cast<std::size_t>(j)] == j) fixed += sig2(j);
      det::BranchOutcome raw = det::apply_branch(plan, sf, tf, tgt, b, false);
      CHECK_THAT(raw.overlap_with_target, WithinAbs(fixed * fixed, 1e-9));
    }
  }
}

TEST_CASE("protocol run reaches the target deterministically") {
  BipartitePureState in = diag_state(amps({0.6, 0.4}));
  BipartitePureState tgt = diag_state(amps({0.8, 0.2}));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    det::ProtocolTrace trace = det::run_deterministic(in, tgt, seed);
    CHECK(trace.final_overlap_with_target >= 1.0 - 1e-9);
    CHECK(trace.classical_bits_sent == 1);
    CHECK((trace.branch == 0 || trace.branch == 1));
    CHECK(trace.bob_applied.size() == 2);
  }

  det::ProtocolTrace same = det::run_deterministic(in, in, 3);
  CHECK(same.branch == 0);
  CHECK(same.classical_bits_sent == 0);
  CHECK(same.final_overlap_with_target >= 1.0 - 1e-9);
}

TEST_CASE("protocol run works in rotated frames and rectangular spaces") {
  mc::TrialRng rng(19);
  for (int t = 0; t < 8; ++t) {
    Index dim = 2 + static_cast<Index>(rng.below(3));
    auto [lam2, sig2] = rnd::random_majorized_pair(dim, rng);
    RealVector lambda(dim), sigma(dim);
    for (Index i = 0; i < dim; ++i) {
      lambda(i) = std::sqrt(lam2(i));
      sigma(i) = std::sqrt(sig2(i));
    }
    // Bob's space is one level larger than Alice's; frames are random.
    ComplexMatrix ua = rnd::random_unitary(dim, rng);
    ComplexMatrix ub = rnd::random_unitary(dim + 1, rng);
    ComplexMatrix in_m = ua * diagonal_embed(lambda, dim, dim + 1) * ub;
    ComplexMatrix tgt_m = ua.adjoint() * diagonal_embed(sigma, dim, dim + 1) * ub.adjoint();
    BipartitePureState in = BipartitePureState::normalized(in_m);
    BipartitePureState tgt = BipartitePureState::normalized(tgt_m);
    det::ProtocolTrace trace = det::run_deterministic(in, tgt, 42 + static_cast<std::uint64_t>(t));
    CHECK(trace.final_overlap_with_target >= 1.0 - 1e-9);
    CHECK(trace.bob_applied.size() == dim + 1);
  }
}

TEST_CASE("branch-count to message-size conversion") {
  CHECK(det::classical_bits(0) == 0);
  CHECK(det::classical_bits(1) == 0);
  CHECK(det::classical_bits(2) == 1);
  CHECK(det::classical_bits(3) == 2);
  CHECK(det::classical_bits(4) == 2);
  CHECK(det::classical_bits(5) == 3);
}

TEST_CASE("corrections differ across branches when spectra differ") {
  det::DeterministicPlan plan = det::make_deterministic_plan(amps({0.6, 0.4}), amps({0.8, 0.2}));
  REQUIRE(plan.bob_corrections.size() == 2);
  CHECK_FALSE(plan.bob_corrections[0] == plan.bob_corrections[1]);
}
