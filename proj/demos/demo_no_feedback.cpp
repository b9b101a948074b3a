// Multi-copy conversion without any communication: pools enough copies that
// every measurement branch can be steered onto the same output block, then
// shows why the trick needs indistinguishable carriers (relabeling one branch
// shifts the combined spectrum).

#include <cstdio>

#include "entx/entx.hpp"

using namespace entx;

int main() {
  RealVector lam(2), sig(2);
  lam << std::sqrt(0.8), std::sqrt(0.2);
  sig << std::sqrt(0.5), std::sqrt(0.5);

  std::printf("source squared coefficients (0.8, 0.2), target Bell pair\n");
  std::printf("single-copy optimal success probability: %.17g\n",
              single::optimal_probability(lam, sig));
  Index n = multi::min_copies(lam, sig);
  std::printf("smallest copy count with guaranteed success: %lld\n",
              static_cast<long long>(n));

  multi::MultiCopyPlan plan = multi::make_multicopy_plan(lam, sig, 2, 2);
  multi::MultiCopyResult result = multi::finalize_multicopy(plan);
  std::printf("merged Alice marginal (top-left 2x2 block):\n");
  for (Index r = 0; r < 2; ++r)
    std::printf("  %.6f %.6f\n", result.rho_a_out.entries()(r, 0).real(),
                result.rho_a_out.entries()(r, 1).real());
  std::printf("weight of the selected block: %.12f (certain)\n",
              1.0 - max_abs(ComplexMatrix(result.projected.coeffs() - plan.delta)));
  std::printf("classical bits needed: 0\n\n");

  std::printf("== relabeling witness (two copies of (0.75, 0.25) -> Bell) ==\n");
  RealVector lam2(2);
  lam2 << std::sqrt(0.75), std::sqrt(0.25);
  Permutation swap01 = multi::slot_swap(2, 2, 0, 1);
  Permutation id4 = Permutation::identity(4);
  multi::SpectrumReport same =
      multi::distinguishable_omega(lam2, sig, {0.5, 0.5}, {id4, id4}, 2, 2);
  multi::SpectrumReport split =
      multi::distinguishable_omega(lam2, sig, {0.5, 0.5}, {id4, swap01}, 2, 2);
  std::printf("identical relabelings: spectrum deviation %.3g\n", same.max_deviation);
  std::printf("one branch swapped:    spectrum deviation %.3g  (spectrum", split.max_deviation);
  for (Index i = 0; i < split.spectrum.size(); ++i) std::printf(" %.4f", split.spectrum(i));
  std::printf(")\n");
  std::printf("distinguishable carriers break the merge; identical ones do not.\n");
  return 0;
}
