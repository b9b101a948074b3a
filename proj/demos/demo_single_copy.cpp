// Walks one unbalanced pair through the probabilistic and the deterministic
// single-copy protocols, printing every intermediate quantity.

#include <cstdio>

#include "entx/entx.hpp"

using namespace entx;

namespace {

BipartitePureState diag_state(std::initializer_list<double> squared) {
  RealVector v(static_cast<Index>(squared.size()));
  Index i = 0;
  for (double s : squared) v(i++) = std::sqrt(s);
  return BipartitePureState::from_matrix(diagonal_embed(v, v.size(), v.size()));
}

void print_vector(const char* label, const RealVector& v) {
  std::printf("%s:", label);
  for (Index i = 0; i < v.size(); ++i) std::printf(" %.6f", v(i));
  std::printf("\n");
}

}  // namespace

int main() {
  std::printf("== probabilistic conversion: squared coefficients (0.8, 0.2) -> Bell ==\n");
  BipartitePureState input = diag_state({0.8, 0.2});
  BipartitePureState bell = diag_state({0.5, 0.5});

  double p_opt = single::optimal_probability(input, bell);
  std::printf("optimal success probability: %.17g\n", p_opt);

  single::TransformOutcome out = single::transform_single_copy(input, bell);
  SchmidtForm sf = schmidt_decompose(input);
  SchmidtForm tf = schmidt_decompose(bell);
  single::DilationPlan plan = single::make_dilation_plan(sf.lambdas, tf.lambdas);
  print_vector("contraction diagonal", plan.contraction.diag());
  std::printf("success overlap with target: %.17g\n", overlap(out.success_state, bell));
  if (out.failure_state) {
    SchmidtForm ff = schmidt_decompose(*out.failure_state);
    print_vector("failure-branch Schmidt coefficients", ff.lambdas);
  }
  std::printf("extractable success probability left in the failure branch: %.3g\n\n",
              out.residual_extractability);

  std::printf("== deterministic conversion: (0.6, 0.4) -> (0.8, 0.2) ==\n");
  BipartitePureState from = diag_state({0.6, 0.4});
  BipartitePureState to = diag_state({0.8, 0.2});
  SchmidtForm ff = schmidt_decompose(from);
  SchmidtForm tt = schmidt_decompose(to);
  det::DeterministicPlan dplan = det::make_deterministic_plan(ff.lambdas, tt.lambdas);
  std::printf("branches: %lld, message size: %d bit(s)\n",
              static_cast<long long>(dplan.branches()), det::classical_bits(dplan.branches()));
  for (Index i = 0; i < dplan.branches(); ++i) {
    det::BranchOutcome b = det::apply_branch(dplan, ff, tt, to, i);
    det::BranchOutcome raw = det::apply_branch(dplan, ff, tt, to, i, false);
    std::printf("branch %lld: probability %.6f, overlap %.12f (without relabeling: %.6f)\n",
                static_cast<long long>(i), b.weight, b.overlap_with_target,
                raw.overlap_with_target);
  }
  det::ProtocolTrace trace = det::run_deterministic(from, to, 1);
  std::printf("sampled run: branch %lld, %d bit(s) sent, final overlap %.12f\n",
              static_cast<long long>(trace.branch), trace.classical_bits_sent,
              trace.final_overlap_with_target);
  return 0;
}
