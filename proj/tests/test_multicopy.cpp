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

const RealVector kSkew = amps({0.8, 0.2});
const RealVector kMild = amps({0.75, 0.25});
const RealVector kBell = amps({0.5, 0.5});

}  // namespace

TEST_CASE("minimum copy count from the single-copy optimum") {
  CHECK(multi::min_copies(kSkew, kBell) == 3);   // p_opt = 0.4 -> 1/3
  CHECK(multi::min_copies(kMild, kBell) == 2);   // p_opt = 0.5 -> 1/2 exactly
  CHECK(multi::min_copies(kBell, kBell) == 1);   // already there
  CHECK(multi::min_copies(kBell, kSkew) == 2);   // p_opt = 0.625
  CHECK_THROWS_AS(multi::min_copies(amps({1.0, 0.0}), kBell), InfeasibleTarget);
}

TEST_CASE("minimum copy count matches the direct search") {
  mc::TrialRng rng(23);
  for (int t = 0; t < 20; ++t) {
    Index d = 2 + static_cast<Index>(rng.below(4));
    RealVector lam2 = rnd::random_spectrum(d, rng);
    RealVector sig2 = rnd::random_spectrum(d, rng);
    RealVector lambda(d), sigma(d);
    for (Index i = 0; i < d; ++i) {
      lambda(i) = std::sqrt(lam2(i));
      sigma(i) = std::sqrt(sig2(i));
    }
    double p = single::optimal_probability(lambda, sigma);
    if (p <= 0.0) continue;
    Index direct = 1;
    while (1.0 / static_cast<double>(direct) > p + 1e-12) ++direct;
    CHECK(multi::min_copies(lambda, sigma) == direct);
  }
}

TEST_CASE("exact yield verdicts around the threshold") {
  // Threshold here is 1/3 target per copy.
  CHECK(multi::feasible_yield(kSkew, kBell, 1, {3, 10}) == multi::YieldVerdict::One);
  CHECK(multi::feasible_yield(kSkew, kBell, 1, {2, 5}) == multi::YieldVerdict::Zero);
  CHECK(multi::feasible_yield(kSkew, kBell, 1, {1, 3}) == multi::YieldVerdict::Boundary);
  // Sign normalization of the rational.
  CHECK(multi::feasible_yield(kSkew, kBell, 1, {-1, -3}) == multi::YieldVerdict::Boundary);
  CHECK_THROWS_AS(multi::feasible_yield(kSkew, kBell, 1, {1, -3}), DimensionMismatch);
  CHECK_THROWS_AS(multi::feasible_yield(kSkew, kBell, 1, {1, 0}), DimensionMismatch);
  CHECK_THROWS_AS(multi::feasible_yield(kSkew, kBell, 0, {1, 3}), DimensionMismatch);
}

TEST_CASE("branch distribution shares the copies evenly") {
  std::vector<double> probs = multi::plan_distribution(3, 0.4);
  REQUIRE(probs.size() == 3);
  CHECK_THAT(probs[0], WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(probs[1], WithinAbs(1.0 / 3.0, 1e-15));
  double sum = probs[0] + probs[1] + probs[2];
  CHECK(sum == 1.0);  // exact by construction

  std::vector<double> one = multi::plan_distribution(1, 1.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 1.0);

  // Two copies are not enough at p_opt = 0.4.
  CHECK_THROWS_AS(multi::plan_distribution(2, 0.4), InfeasibleDistribution);
  CHECK_THROWS_AS(multi::plan_distribution(0, 0.4), InfeasibleDistribution);
}

TEST_CASE("collapsed block smears target levels over label bands") {
  std::vector<double> probs{0.5, 0.5};
  multi::OmegaMatrices mats = multi::build_omega(kMild, kBell, probs, 2, 2);
  ComplexMatrix expect(2, 4);
  expect << 0.5, 0.5, 0.0, 0.0,  //
      0.0, 0.0, 0.5, 0.5;
  CHECK(max_abs(ComplexMatrix(mats.delta - expect)) <= 1e-12);

  // Delta Delta^dag is the target reduced density.
  ComplexMatrix rho = mats.delta * mats.delta.adjoint();
  CHECK(max_abs(ComplexMatrix(rho - 0.5 * ComplexMatrix::Identity(2, 2))) <= 1e-12);

  // Omega stacks sqrt(p_i) Delta and is normalized overall.
  REQUIRE(mats.omega.rows() == 4);
  CHECK(max_abs(ComplexMatrix(mats.omega.topRows(2) - std::sqrt(0.5) * mats.delta)) <= 1e-12);
  CHECK_THAT(mats.omega.squaredNorm(), WithinAbs(1.0, 1e-10));

  // One copy degenerates to the plain Schmidt diagonal.
  multi::OmegaMatrices single_copy = multi::build_omega(kBell, kBell, {1.0}, 2, 2);
  CHECK(max_abs(ComplexMatrix(single_copy.delta - diagonal_embed(kBell, 2, 2))) <= 1e-12);

  // Three copies spread each level over N^2 = 4 labels.
  multi::OmegaMatrices three =
      multi::build_omega(kSkew, kBell, multi::plan_distribution(3, 0.4), 2, 2);
  REQUIRE(three.delta.cols() == 8);
  CHECK_THAT(std::abs(three.delta(0, 0)), WithinAbs(std::sqrt(0.5) / 2.0, 1e-12));
  CHECK_THAT(std::abs(three.delta(1, 4)), WithinAbs(std::sqrt(0.5) / 2.0, 1e-12));
  CHECK_THAT(std::abs(three.delta(0, 4)), WithinAbs(0.0, 1e-15));
}

TEST_CASE("collapsed block construction validates sizes") {
  RealVector long_sigma = amps({0.4, 0.3, 0.3});
  CHECK_THROWS_AS(multi::build_omega(long_sigma, long_sigma, {0.5, 0.5}, 2, 2),
                  DimensionMismatch);
  // An over-long target also kills the single-copy optimum itself.
  CHECK_THROWS_AS(multi::build_omega(kSkew, long_sigma, {0.5, 0.5}, 2, 2),
                  InfeasibleDistribution);
  // The labeled Bob space must stay within the cap.
  CHECK_THROWS_AS(multi::build_omega(kBell, kBell, std::vector<double>(13, 1.0 / 13.0), 2, 2),
                  DimensionOverflow);
  CHECK_NOTHROW(multi::build_omega(kBell, kBell, {0.5, 0.5}, 2, 2, 4));
  CHECK_THROWS_AS(multi::build_omega(kBell, kBell, {0.5, 0.5}, 2, 2, 3), DimensionOverflow);
}

TEST_CASE("merge unitary concentrates equal blocks") {
  ComplexMatrix trivial = multi::assemble_merge_unitary({1.0}, 2);
  CHECK(max_abs(ComplexMatrix(trivial - ComplexMatrix::Identity(2, 2))) <= 1e-12);

  ComplexMatrix pair = multi::assemble_merge_unitary({0.5, 0.5}, 1);
  REQUIRE(pair.rows() == 2);
  CHECK(unitarity_residual(pair) <= 1e-10);
  CHECK_THAT(std::abs(pair(0, 0)), WithinAbs(std::sqrt(0.5), 1e-12));
  CHECK_THAT(std::abs(pair(1, 0)), WithinAbs(std::sqrt(0.5), 1e-12));

  std::vector<double> thirds(3, 1.0 / 3.0);
  thirds[2] = 1.0 - 2.0 / 3.0;
  ComplexMatrix six = multi::assemble_merge_unitary(thirds, 2);
  REQUIRE(six.rows() == 6);
  CHECK(unitarity_residual(six) <= 1e-10);
  for (Index i = 0; i < 3; ++i)
    CHECK(max_abs(ComplexMatrix(six.block(2 * i, 0, 2, 2) -
                                std::sqrt(thirds[static_cast<std::size_t>(i)]) *
                                    ComplexMatrix::Identity(2, 2))) <= 1e-10);

  CHECK_THROWS_AS(multi::assemble_merge_unitary({0.5, 0.4}, 2), NotNormalized);
  CHECK_THROWS_AS(multi::assemble_merge_unitary({}, 2), DimensionMismatch);
}

TEST_CASE("three copies convert the skew pair with certainty") {
  multi::MultiCopyPlan plan = multi::make_multicopy_plan(kSkew, kBell, 2, 2);
  CHECK(plan.copies == 3);
  CHECK(plan.min_feasible == 3);
  REQUIRE(plan.branch_probs.size() == 3);

  multi::MultiCopyResult result = multi::finalize_multicopy(plan);

  // Alice's output marginal is the target spectrum on the leading block.
  ComplexMatrix expect_rho = ComplexMatrix::Zero(6, 6);
  expect_rho(0, 0) = expect_rho(1, 1) = 0.5;
  CHECK(max_abs(ComplexMatrix(result.rho_a_out.entries() - expect_rho)) <= 1e-10);

  // The selected block is exactly the collapsed state.
  BipartitePureState delta_state = BipartitePureState::normalized(plan.delta);
  CHECK_THAT(overlap(result.projected, delta_state), WithinAbs(1.0, 1e-10));

  // Slot-one pairing carries the full target correlations.
  REQUIRE(result.pair_marginals.size() == 3);
  ComplexVector pair_ket = ComplexVector::Zero(4);
  pair_ket(0) = pair_ket(3) = std::sqrt(0.5);
  ComplexMatrix bell_proj = pair_ket * pair_ket.adjoint();
  CHECK(max_abs(ComplexMatrix(result.pair_marginals[0].entries() - bell_proj)) <= 1e-10);

  // Later slots factor into the spectrum times a uniform-label projector.
  ComplexMatrix uniform = ComplexMatrix::Constant(2, 2, 0.5);
  ComplexMatrix later = ComplexMatrix::Zero(4, 4);
  later.block(0, 0, 2, 2) = 0.5 * uniform;
  later.block(2, 2, 2, 2) = 0.5 * uniform;
  CHECK(max_abs(ComplexMatrix(result.pair_marginals[1].entries() - later)) <= 1e-10);
  CHECK(max_abs(ComplexMatrix(result.pair_marginals[2].entries() - later)) <= 1e-10);
}

TEST_CASE("single copy of a matching input needs no work") {
  multi::MultiCopyPlan plan = multi::make_multicopy_plan(kBell, kBell, 2, 2);
  CHECK(plan.copies == 1);
  multi::MultiCopyResult result = multi::finalize_multicopy(plan);
  ComplexMatrix sig = diagonal_embed(kBell, 2, 2);
  CHECK(max_abs(ComplexMatrix(result.rho_a_out.entries() - sig * sig.adjoint())) <= 1e-10);
}

TEST_CASE("plans below the feasible copy count are rejected") {
  CHECK_THROWS_AS(multi::make_multicopy_plan(kSkew, kBell, 2, 2, 2), InfeasibleDistribution);
  // An explicit larger count is fine.
  multi::MultiCopyPlan plan = multi::make_multicopy_plan(kSkew, kBell, 2, 2, 4);
  CHECK(plan.copies == 4);
  CHECK(plan.min_feasible == 3);
  multi::MultiCopyResult result = multi::finalize_multicopy(plan);
  CHECK_THAT(result.rho_a_out.entries()(0, 0).real(), WithinAbs(0.5, 1e-10));
}

TEST_CASE("label symmetrization makes every slot marginal equal") {
  multi::MultiCopyPlan plan = multi::make_multicopy_plan(kMild, kBell, 2, 2);
  multi::MultiCopyResult result = multi::finalize_multicopy(plan);
  BipartitePureState sym = multi::symmetrize_labels(result.projected, 2, plan.copies);

  std::vector<Index> factors{2, 2, 2};
  ComplexVector ket = sym.ket();
  DensityMatrix slot1 = partial_trace(ket, factors, {0, 1});
  DensityMatrix slot2 = partial_trace(ket, factors, {0, 2});
  CHECK(max_abs(ComplexMatrix(slot1.entries() - slot2.entries())) <= 1e-10);

  CHECK_THROWS_AS(multi::symmetrize_labels(result.projected, 2, 9), DimensionOverflow);
  CHECK_THROWS_AS(multi::symmetrize_labels(result.projected, 3, 2), DimensionMismatch);
}

TEST_CASE("slot swap relabels the product space") {
  Permutation swap = multi::slot_swap(2, 2, 0, 1);
  REQUIRE(swap.size() == 4);
  CHECK(swap.map == std::vector<Index>{0, 2, 1, 3});
  // Involution.
  Permutation twice;
  twice.map.resize(4);
  for (Index c = 0; c < 4; ++c)
    twice.map[static_cast<std::size_t>(c)] =
        swap.map[static_cast<std::size_t>(swap.map[static_cast<std::size_t>(c)])];
  CHECK(twice.is_identity());
  CHECK(multi::slot_swap(2, 2, 0, 0).is_identity());
  CHECK_THROWS_AS(multi::slot_swap(2, 2, 0, 2), DimensionMismatch);
}

TEST_CASE("per-branch relabelings are detectable for distinguishable carriers") {
  std::vector<double> probs{0.5, 0.5};
  std::vector<Permutation> common{Permutation::identity(4), Permutation::identity(4)};
  multi::SpectrumReport same =
      multi::distinguishable_omega(kMild, kBell, probs, common, 2, 2);
  CHECK(same.max_deviation <= 1e-10);

  // Both branches relabeled the same way: still indistinguishable in spectrum.
  Permutation swap = multi::slot_swap(2, 2, 0, 1);
  multi::SpectrumReport both{
      multi::distinguishable_omega(kMild, kBell, probs, {swap, swap}, 2, 2)};
  CHECK(both.max_deviation <= 1e-10);

  // Genuinely different relabelings shift the spectrum: the witness.
  multi::SpectrumReport witness = multi::distinguishable_omega(
      kMild, kBell, probs, {Permutation::identity(4), swap}, 2, 2);
  CHECK(witness.max_deviation > 1e-3);
  REQUIRE(witness.spectrum.size() == 4);
  CHECK_THAT(witness.spectrum(0), WithinAbs(0.5, 1e-9));
  CHECK_THAT(witness.spectrum(1), WithinAbs(0.25, 1e-9));
  CHECK_THAT(witness.spectrum(2), WithinAbs(0.25, 1e-9));
  CHECK_THAT(witness.spectrum(3), WithinAbs(0.0, 1e-9));

  CHECK_THROWS_AS(multi::distinguishable_omega(kMild, kBell, probs, {swap}, 2, 2),
                  DimensionMismatch);
  CHECK_THROWS_AS(multi::distinguishable_omega(kMild, kBell, probs,
                                               {Permutation::identity(2), swap}, 2, 2),
                  DimensionMismatch);
}

TEST_CASE("multi-copy pipeline is consistent on random spectra") {
  mc::TrialRng rng(29);
  for (int t = 0; t < 10; ++t) {
    Index d = 2 + static_cast<Index>(rng.below(2));
    RealVector lam2 = rnd::random_spectrum(d, rng);
    RealVector sig2 = rnd::random_spectrum(d, rng);
    RealVector lambda(d), sigma(d);
    for (Index i = 0; i < d; ++i) {
      lambda(i) = std::sqrt(lam2(i));
      sigma(i) = std::sqrt(sig2(i));
    }
    double p = single::optimal_probability(lambda, sigma);
    if (p <= 0.1) continue;  // keep the labeled space small
    multi::MultiCopyPlan plan = multi::make_multicopy_plan(lambda, sigma, d, d);
    CHECK(plan.copies == multi::min_copies(lambda, sigma));
    multi::MultiCopyResult result = multi::finalize_multicopy(plan);
    RealVector spec = result.rho_a_out.spectrum();
    for (Index i = 0; i < d; ++i) CHECK_THAT(spec(i), WithinAbs(sig2(i), 1e-9));
    for (Index i = d; i < spec.size(); ++i) CHECK_THAT(spec(i), WithinAbs(0.0, 1e-9));
  }
}
