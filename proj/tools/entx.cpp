// Command-line front end: plan, run, and verify transformations between
// bipartite pure states under one-sided local operations.
//
// Exit codes: 0 success, 1 validation or I/O error, 2 infeasible
// transformation, 3 verification failure.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entx/entx.hpp"

namespace {

using entx::Index;
using entx::io::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOpts {
  bool json_out = false;
  bool normalize = false;
  bool matrices = false;
  std::optional<double> tol;
  double check_tol(double fallback) const { return tol ? *tol : fallback; }
};

struct PlanArgs {
  std::string kind;
  std::string input_path;
  std::string target_path;
  Index me_levels = 0;
  double p = entx::single::kAtOptimum;
  Index copies = 0;
  Index size_cap = entx::multi::kDefaultSizeCap;
  std::string out_path;
};

struct RunArgs {
  PlanArgs plan;
  std::string plan_path;
  long long trials = 100000;
  std::uint64_t seed = 0;
};

json state_summary(const std::string& label, const entx::BipartitePureState& state) {
  json j;
  j["path"] = label;
  j["dims"] = json::array({state.dim_a(), state.dim_b()});
  j["digest"] = entx::io::digest(entx::io::state_to_json(state));
  return j;
}

json vector_json(const entx::RealVector& v) { return entx::io::vector_to_json(v); }

json probs_json(const std::vector<double>& p) {
  json out = json::array();
  for (double x : p) out.push_back(x);
  return out;
}

entx::BipartitePureState me_target(Index levels, Index dim_a, Index dim_b) {
  if (levels < 1 || levels > std::min(dim_a, dim_b))
    throw entx::InfeasibleTarget("maximally entangled target on " + std::to_string(levels) +
                                 " levels does not fit in " + std::to_string(dim_a) + " x " +
                                 std::to_string(dim_b));
  entx::ComplexMatrix m = entx::ComplexMatrix::Zero(dim_a, dim_b);
  for (Index i = 0; i < levels; ++i) m(i, i) = 1.0 / std::sqrt(static_cast<double>(levels));
  return entx::BipartitePureState::from_matrix(std::move(m));
}

struct LoadedPair {
  entx::BipartitePureState input;
  entx::BipartitePureState target;
  std::string input_label;
  std::string target_label;
};

LoadedPair load_pair(const PlanArgs& args, const CommonOpts& common) {
  entx::BipartitePureState input = entx::io::read_state(args.input_path, common.normalize);
  if (!args.target_path.empty()) {
    if (args.me_levels > 0)
      throw entx::Error("give either a target file or --ME, not both");
    entx::BipartitePureState target = entx::io::read_state(args.target_path, common.normalize);
    return {std::move(input), std::move(target), args.input_path, args.target_path};
  }
  if (args.me_levels <= 0) throw entx::Error("need a target file or --ME <levels>");
  entx::BipartitePureState target = me_target(args.me_levels, input.dim_a(), input.dim_b());
  return {std::move(input), std::move(target), args.input_path,
          "--ME " + std::to_string(args.me_levels)};
}

/// Trims trailing zero Schmidt coefficients, keeping at least one entry.
entx::RealVector trim_spectrum(const entx::RealVector& v) {
  Index keep = v.size();
  while (keep > 1 && v(keep - 1) <= entx::tol::zero) --keep;
  return v.head(keep);
}

void emit(const json& report, const CommonOpts& common, const std::string& text) {
  if (common.json_out)
    std::printf("%s\n", report.dump(2).c_str());
  else
    std::fputs(text.c_str(), stdout);
}

void append_check(json& report, std::string& text, const std::string& name, bool pass,
                  const std::string& detail = "") {
  json c;
  c["name"] = name;
  c["pass"] = pass;
  if (!detail.empty()) c["detail"] = detail;
  report["checks"].push_back(c);
  text += "  check " + name + ": " + (pass ? "PASS" : "FAIL");
  if (!detail.empty()) text += "  (" + detail + ")";
  text += "\n";
}

//------------------------------------------------------------------------------
// plan
//------------------------------------------------------------------------------

json plan_single(const LoadedPair& pair, const PlanArgs& args, const CommonOpts& common,
                 std::string& text) {
  entx::SchmidtForm sf = entx::schmidt_decompose(pair.input);
  entx::SchmidtForm tf = entx::schmidt_decompose(pair.target);
  double p_opt = entx::single::optimal_probability(sf.lambdas, tf.lambdas);
  entx::single::DilationPlan plan =
      entx::single::make_dilation_plan(sf.lambdas, tf.lambdas, args.p);

  json j;
  j["pOpt"] = p_opt;
  j["requestedP"] = plan.success_prob;
  j["contraction"] = vector_json(plan.contraction.diag());
  if (common.matrices) j["dilationUnitary"] = entx::io::matrix_to_json(plan.unitary);

  text += "plan single\n";
  text += "  p_opt = " + fmt17(p_opt) + "\n";
  text += "  requested p = " + fmt17(plan.success_prob) + "\n";
  text += "  contraction diagonal:";
  for (Index i = 0; i < plan.contraction.dim(); ++i)
    text += " " + fmt17(plan.contraction.diag()(i));
  text += "\n";
  return j;
}

json plan_det(const LoadedPair& pair, const PlanArgs&, const CommonOpts& common,
              std::string& text) {
  entx::SchmidtForm sf = entx::schmidt_decompose(pair.input);
  entx::SchmidtForm tf = entx::schmidt_decompose(pair.target);
  entx::det::DeterministicPlan plan =
      entx::det::make_deterministic_plan(sf.lambdas, tf.lambdas, sf.dim_a);

  json j;
  j["branches"] = plan.branches();
  j["branchProbs"] = probs_json(plan.branch_probs);
  j["classicalBits"] = entx::det::classical_bits(plan.branches());
  json corr = json::array();
  for (const entx::Permutation& p : plan.bob_corrections) {
    json one = json::array();
    for (Index v : p.map) one.push_back(v);
    corr.push_back(one);
  }
  j["bobCorrections"] = corr;
  if (common.matrices) {
    json povm = json::array();
    for (const entx::ComplexMatrix& op : plan.povm) povm.push_back(entx::io::matrix_to_json(op));
    j["povm"] = povm;
    j["measurementUnitary"] = entx::io::matrix_to_json(plan.unitary);
  }

  text += "plan det\n";
  text += "  branches = " + std::to_string(plan.branches()) + "\n";
  text += "  branch probabilities:";
  for (double p : plan.branch_probs) text += " " + fmt17(p);
  text += "\n  classical bits = " + std::to_string(entx::det::classical_bits(plan.branches())) +
          "\n";
  return j;
}

json plan_multi(const LoadedPair& pair, const PlanArgs& args, const CommonOpts& common,
                std::string& text) {
  entx::SchmidtForm sf = entx::schmidt_decompose(pair.input);
  entx::SchmidtForm tf = entx::schmidt_decompose(pair.target);
  entx::RealVector sigma = trim_spectrum(tf.lambdas);
  entx::multi::MultiCopyPlan plan = entx::multi::make_multicopy_plan(
      sf.lambdas, sigma, pair.target.dim_a(), pair.input.dim_b(), args.copies, args.size_cap);

  json j;
  j["nMin"] = plan.min_feasible;
  j["copies"] = plan.copies;
  j["branchProbs"] = probs_json(plan.branch_probs);
  j["classicalBits"] = 0;
  j["deltaDims"] = json::array({plan.delta.rows(), plan.delta.cols()});
  if (common.matrices) {
    j["delta"] = entx::io::matrix_to_json(plan.delta);
    j["mergeUnitary"] = entx::io::matrix_to_json(plan.merge_unitary);
  }

  text += "plan multi\n";
  text += "  n_min = " + std::to_string(plan.min_feasible) + "\n";
  text += "  copies = " + std::to_string(plan.copies) + "\n";
  text += "  branch probabilities:";
  for (double p : plan.branch_probs) text += " " + fmt17(p);
  text += "\n  classical bits = 0\n";
  return j;
}

int cmd_plan(const PlanArgs& args, const CommonOpts& common) {
  LoadedPair pair = load_pair(args, common);
  json report;
  report["command"] = "plan";
  report["kind"] = args.kind;
  report["inputs"]["input"] = state_summary(pair.input_label, pair.input);
  report["inputs"]["target"] = state_summary(pair.target_label, pair.target);

  std::string text;
  json summary;
  if (args.kind == "single")
    summary = plan_single(pair, args, common, text);
  else if (args.kind == "det")
    summary = plan_det(pair, args, common, text);
  else
    summary = plan_multi(pair, args, common, text);
  report["plan"] = summary;

  if (!args.out_path.empty()) {
    json artifact;
    artifact["kind"] = args.kind;
    json options;
    if (args.kind == "single") options["p"] = args.p;
    if (args.kind == "multi") {
      options["copies"] = args.copies;
      options["sizeCap"] = args.size_cap;
    }
    artifact["options"] = options;
    artifact["input"] = entx::io::state_to_json(pair.input);
    artifact["target"] = entx::io::state_to_json(pair.target);
    entx::io::save_json(args.out_path, artifact);
    report["planFile"] = args.out_path;
    text += "  plan written to " + args.out_path + "\n";
  }

  emit(report, common, text);
  return 0;
}

//------------------------------------------------------------------------------
// run
//------------------------------------------------------------------------------

void run_single(const LoadedPair& pair, const RunArgs& args, const CommonOpts& common,
                json& report, std::string& text) {
  entx::single::TransformOutcome out =
      entx::single::transform_single_copy(pair.input, pair.target, args.plan.p);
  double p = out.success_prob;
  double p_opt = entx::single::optimal_probability(pair.input, pair.target);
  double succ_overlap = entx::overlap(out.success_state, pair.target);

  std::vector<double> weights{p, 1.0 - p};
  auto protocol = [&](entx::mc::TrialRng& rng) { return entx::mc::sample_outcome(weights, rng); };
  entx::mc::TrialStats stats = entx::mc::estimate_success(protocol, args.trials, args.seed);

  double freq = stats.frequencies.empty() ? 0.0 : stats.frequencies[0];
  double band = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(args.trials));

  json j;
  j["pOpt"] = p_opt;
  j["successProb"] = p;
  j["successOverlap"] = succ_overlap;
  j["residualExtractability"] = out.residual_extractability;
  j["successFrequency"] = freq;
  j["band3Sigma"] = band;
  j["counts"] = json::array({stats.counts.size() > 0 ? stats.counts[0] : 0,
                             stats.counts.size() > 1 ? stats.counts[1] : 0});
  report["result"] = j;

  text += "run single  (trials " + std::to_string(args.trials) + ", seed " +
          std::to_string(args.seed) + ")\n";
  text += "  p_opt = " + fmt17(p_opt) + "\n";
  text += "  success probability = " + fmt17(p) + "\n";
  text += "  sampled frequency   = " + fmt17(freq) + "  (3 sigma band " + fmt17(band) + ")\n";
  text += "  success overlap with target = " + fmt17(succ_overlap) + "\n";
  text += "  residual extractability     = " + fmt17(out.residual_extractability) + "\n";

  double overlap_tol = common.check_tol(1e-9);
  append_check(report, text, "success-frequency-3sigma", std::abs(freq - p) <= band);
  append_check(report, text, "success-overlap", succ_overlap >= 1.0 - overlap_tol);
  if (args.plan.p == entx::single::kAtOptimum)
    append_check(report, text, "residual-at-optimum",
                 out.residual_extractability <= common.check_tol(1e-12));
}

void run_det(const LoadedPair& pair, const RunArgs& args, const CommonOpts& common, json& report,
             std::string& text) {
  entx::SchmidtForm sf = entx::schmidt_decompose(pair.input);
  entx::SchmidtForm tf = entx::schmidt_decompose(pair.target);
  entx::det::DeterministicPlan plan =
      entx::det::make_deterministic_plan(sf.lambdas, tf.lambdas, sf.dim_a);

  double res_tol = common.check_tol(1e-10);
  double overlap_tol = common.check_tol(1e-9);

  entx::ComplexMatrix gram =
      entx::ComplexMatrix::Zero(plan.dim(), plan.dim());
  for (const entx::ComplexMatrix& op : plan.povm) gram += op.adjoint() * op;
  double completeness =
      entx::max_abs(entx::ComplexMatrix(gram - entx::ComplexMatrix::Identity(plan.dim(),
                                                                             plan.dim())));

  std::vector<double> weights;
  double min_overlap = 1.0;
  double max_weight_gap = 0.0;
  json branches = json::array();
  text += "run det  (trials " + std::to_string(args.trials) + ", seed " +
          std::to_string(args.seed) + ")\n";
  for (Index i = 0; i < plan.branches(); ++i) {
    entx::det::BranchOutcome out = entx::det::apply_branch(plan, sf, tf, pair.target, i);
    weights.push_back(out.weight);
    min_overlap = std::min(min_overlap, out.overlap_with_target);
    max_weight_gap = std::max(
        max_weight_gap,
        std::abs(out.weight - plan.branch_probs[static_cast<std::size_t>(i)]));
    json b;
    b["weight"] = out.weight;
    b["overlap"] = out.overlap_with_target;
    branches.push_back(b);
    text += "  branch " + std::to_string(i) + ": weight " + fmt17(out.weight) + ", overlap " +
            fmt17(out.overlap_with_target) + "\n";
  }

  auto protocol = [&](entx::mc::TrialRng& rng) { return entx::mc::sample_outcome(weights, rng); };
  entx::mc::TrialStats stats = entx::mc::estimate_success(protocol, args.trials, args.seed);
  bool freq_ok = true;
  json freqs = json::array();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double f = i < stats.frequencies.size() ? stats.frequencies[i] : 0.0;
    double band = 3.0 * std::sqrt(weights[i] * (1.0 - weights[i]) /
                                  static_cast<double>(args.trials));
    if (std::abs(f - weights[i]) > band) freq_ok = false;
    freqs.push_back(f);
  }

  json j;
  j["branches"] = branches;
  j["branchFrequencies"] = freqs;
  j["classicalBits"] = entx::det::classical_bits(plan.branches());
  j["completenessResidual"] = completeness;
  report["result"] = j;
  text += "  classical bits = " + std::to_string(entx::det::classical_bits(plan.branches())) +
          "\n";

  append_check(report, text, "povm-completeness", completeness <= res_tol);
  append_check(report, text, "branch-overlaps", min_overlap >= 1.0 - overlap_tol,
               "min overlap " + fmt17(min_overlap));
  append_check(report, text, "branch-weights", max_weight_gap <= res_tol);
  append_check(report, text, "branch-frequencies-3sigma", freq_ok);
}

void run_multi(const LoadedPair& pair, const RunArgs& args, const CommonOpts& common,
               json& report, std::string& text) {
  entx::SchmidtForm sf = entx::schmidt_decompose(pair.input);
  entx::SchmidtForm tf = entx::schmidt_decompose(pair.target);
  entx::RealVector sigma = trim_spectrum(tf.lambdas);
  entx::multi::MultiCopyPlan plan =
      entx::multi::make_multicopy_plan(sf.lambdas, sigma, pair.target.dim_a(),
                                       pair.input.dim_b(), args.plan.copies, args.plan.size_cap);
  entx::multi::MultiCopyResult result = entx::multi::finalize_multicopy(plan);

  double res_tol = common.check_tol(1e-10);
  Index big = plan.copies * plan.dim_a;
  entx::ComplexMatrix expect = entx::ComplexMatrix::Zero(big, big);
  for (Index i = 0; i < sigma.size(); ++i) expect(i, i) = sigma(i) * sigma(i);
  double rho_gap = entx::max_abs(entx::ComplexMatrix(result.rho_a_out.entries() - expect));
  double proj_gap = entx::max_abs(entx::ComplexMatrix(result.projected.coeffs() - plan.delta));

  auto protocol = [&](entx::mc::TrialRng& rng) {
    return entx::mc::sample_outcome(plan.branch_probs, rng);
  };
  entx::mc::TrialStats stats = entx::mc::estimate_success(protocol, args.trials, args.seed);
  bool freq_ok = true;
  json freqs = json::array();
  for (std::size_t i = 0; i < plan.branch_probs.size(); ++i) {
    double w = plan.branch_probs[i];
    double f = i < stats.frequencies.size() ? stats.frequencies[i] : 0.0;
    double band = 3.0 * std::sqrt(w * (1.0 - w) / static_cast<double>(args.trials));
    if (std::abs(f - w) > band) freq_ok = false;
    freqs.push_back(f);
  }

  json j;
  j["nMin"] = plan.min_feasible;
  j["copies"] = plan.copies;
  j["branchProbs"] = probs_json(plan.branch_probs);
  j["branchFrequencies"] = freqs;
  j["rhoBlockResidual"] = rho_gap;
  j["projectedResidual"] = proj_gap;
  j["classicalBits"] = 0;
  report["result"] = j;

  text += "run multi  (trials " + std::to_string(args.trials) + ", seed " +
          std::to_string(args.seed) + ")\n";
  text += "  n_min = " + std::to_string(plan.min_feasible) + ", copies = " +
          std::to_string(plan.copies) + "\n";
  text += "  merged-marginal block residual = " + fmt17(rho_gap) + "\n";
  text += "  projected-block residual       = " + fmt17(proj_gap) + "\n";
  text += "  classical bits = 0\n";

  append_check(report, text, "rho-block", rho_gap <= res_tol);
  append_check(report, text, "projected-block", proj_gap <= res_tol);
  append_check(report, text, "branch-frequencies-3sigma", freq_ok);
  append_check(report, text, "classical-bits-at-most-one", true, "0 bits");
}

int cmd_run(RunArgs args, const CommonOpts& common) {
  LoadedPair pair = [&]() -> LoadedPair {
    if (!args.plan_path.empty()) {
      json artifact = entx::io::load_json(args.plan_path);
      if (!artifact.contains("kind") || !artifact.contains("input") ||
          !artifact.contains("target"))
        throw entx::Error("plan file: need kind, input, and target");
      args.plan.kind = artifact["kind"].get<std::string>();
      if (artifact.contains("options")) {
        const json& o = artifact["options"];
        if (o.contains("p")) args.plan.p = o["p"].get<double>();
        if (o.contains("copies")) args.plan.copies = o["copies"].get<Index>();
        if (o.contains("sizeCap")) args.plan.size_cap = o["sizeCap"].get<Index>();
      }
      return {entx::io::state_from_json(artifact["input"]),
              entx::io::state_from_json(artifact["target"]), args.plan_path + "#input",
              args.plan_path + "#target"};
    }
    if (args.plan.kind.empty() || args.plan.input_path.empty())
      throw entx::Error("run: give --plan FILE, or a kind with state files");
    return load_pair(args.plan, common);
  }();

  if (args.trials < 1) throw entx::Error("run: --trials must be >= 1");

  json report;
  report["command"] = "run";
  report["kind"] = args.plan.kind;
  report["inputs"]["input"] = state_summary(pair.input_label, pair.input);
  report["inputs"]["target"] = state_summary(pair.target_label, pair.target);
  report["trials"] = args.trials;
  report["seed"] = args.seed;
  report["checks"] = json::array();

  std::string text;
  if (args.plan.kind == "single")
    run_single(pair, args, common, report, text);
  else if (args.plan.kind == "det")
    run_det(pair, args, common, report, text);
  else if (args.plan.kind == "multi")
    run_multi(pair, args, common, report, text);
  else
    throw entx::Error("run: unknown kind " + args.plan.kind);

  emit(report, common, text);
  return 0;
}

//------------------------------------------------------------------------------
// verify
//------------------------------------------------------------------------------

int cmd_verify(const entx::verify::Options& opts, const CommonOpts& common) {
  std::vector<entx::verify::CheckResult> results = entx::verify::run_all(opts);

  json report;
  report["command"] = "verify";
  report["sizeCap"] = opts.size_cap;
  report["seed"] = opts.seed;
  report["perturb"] = opts.perturb;
  report["suites"] = json::array();
  std::string text = "verify  (size cap " + std::to_string(opts.size_cap) + ", seed " +
                     std::to_string(opts.seed) + ")\n";
  for (const entx::verify::CheckResult& r : results) {
    json s;
    s["name"] = r.name;
    s["pass"] = r.pass;
    s["detail"] = r.detail;
    report["suites"].push_back(s);
    char line[256];
    std::snprintf(line, sizeof(line), "  %-28s %s  %s\n", r.name.c_str(),
                  r.pass ? "PASS" : "FAIL", r.detail.c_str());
    text += line;
  }
  bool ok = entx::verify::all_passed(results);
  report["pass"] = ok;
  text += ok ? "all suites passed\n" : "verification FAILED\n";

  emit(report, common, text);
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Plans, executes, and verifies transformations between bipartite pure "
      "entangled states under one-sided local operations."};
  app.require_subcommand(1);

  CommonOpts common;
  PlanArgs plan_args;
  RunArgs run_args;
  entx::verify::Options verify_opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--json", common.json_out, "machine-readable report on stdout");
    sub->add_flag("--normalize", common.normalize, "rescale input states to unit norm");
    sub->add_option("--tol", common.tol, "override the pass/fail tolerance of report checks");
  };

  CLI::App* plan = app.add_subcommand("plan", "compute a transformation plan");
  plan->add_option("kind", plan_args.kind, "single | det | multi")
      ->required()
      ->check(CLI::IsMember({"single", "det", "multi"}));
  plan->add_option("input", plan_args.input_path, "input state file")->required();
  plan->add_option("target", plan_args.target_path, "target state file");
  plan->add_option("--ME", plan_args.me_levels,
                   "target the maximally entangled state on this many levels");
  plan->add_option("--p", plan_args.p, "requested success probability (single; default optimal)");
  plan->add_option("--copies", plan_args.copies, "copy count (multi; default smallest feasible)");
  plan->add_option("--size-cap", plan_args.size_cap, "largest allowed product-space dimension");
  plan->add_option("--out", plan_args.out_path, "write a plan artifact to this file");
  plan->add_flag("--matrices", common.matrices, "include matrices in the report");
  add_common(plan);

  CLI::App* run = app.add_subcommand("run", "execute a plan and report statistics");
  run->add_option("kind", run_args.plan.kind, "single | det | multi")
      ->check(CLI::IsMember({"single", "det", "multi"}));
  run->add_option("input", run_args.plan.input_path, "input state file");
  run->add_option("target", run_args.plan.target_path, "target state file");
  run->add_option("--plan", run_args.plan_path, "plan artifact written by `plan --out`");
  run->add_option("--ME", run_args.plan.me_levels,
                  "target the maximally entangled state on this many levels");
  run->add_option("--p", run_args.plan.p, "requested success probability (single)");
  run->add_option("--copies", run_args.plan.copies, "copy count (multi)");
  run->add_option("--size-cap", run_args.plan.size_cap,
                  "largest allowed product-space dimension");
  run->add_option("--trials", run_args.trials, "Monte-Carlo trial count");
  run->add_option("--seed", run_args.seed, "random seed; the sole source of randomness");
  add_common(run);

  CLI::App* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--size-cap", verify_opts.size_cap, "largest local dimension");
  verify->add_option("--seed", verify_opts.seed, "random seed");
  verify->add_option("--perturb", verify_opts.perturb,
                     "inject a defect of this size into the dilation unitaries (self-test)");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (plan->parsed()) return cmd_plan(plan_args, common);
    if (run->parsed()) return cmd_run(run_args, common);
    return cmd_verify(verify_opts, common);
  } catch (const entx::InfeasibleTarget& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const entx::NotMajorized& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const entx::InfeasibleDistribution& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const entx::NotContraction& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
