#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "dualframe/estimation.hpp"
#include "dualframe/io.hpp"
#include "dualframe/simulator.hpp"

namespace df = dualframe;
using df::io::JsonWriter;

namespace {

struct Options {
  std::string povm_path;
  std::string ensemble_path;
  std::string observable_path;
  std::string dual_path;
  std::string out_path;
  std::string kind = "optimal";
  std::string mode = "per_state";
  std::uint64_t shots = 100000;
  int repetitions = 100;
  std::uint64_t seed = 0;
  bool min_formula = false;
  bool allow_zero_weights = false;
  df::Tolerances tol;
};

void add_tolerance_flags(CLI::App* cmd, df::Tolerances& tol) {
  cmd->add_option("--tol-herm", tol.herm, "Hermiticity tolerance");
  cmd->add_option("--tol-psd", tol.psd, "relative positivity tolerance");
  cmd->add_option("--tol-trace", tol.trace, "trace/probability-sum tolerance");
  cmd->add_option("--tol-complete", tol.complete,
                  "identity-resolution tolerance");
  cmd->add_option("--tol-ortho", tol.ortho, "basis orthonormality tolerance");
  cmd->add_option("--tol-span", tol.span, "span membership tolerance");
  cmd->add_option("--rank-cutoff", tol.rank_cutoff,
                  "relative singular-value cutoff");
  cmd->add_option("--tol-dual", tol.dual, "dual identity tolerance");
  cmd->add_option("--tol-consistency", tol.consistency,
                  "relative cross-check tolerance");
  cmd->add_option("--tol-weight", tol.weight, "zero-weight threshold");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    df::io::write_text_atomic(out_path, text + "\n");
  }
}

int emit_error(const Options& opt, const df::Error& e, int code) {
  JsonWriter w;
  w.begin_object();
  w.key("error").begin_object();
  w.key("kind").value(e.kind());
  w.key("message").value(std::string_view(e.what()));
  if (const auto* d = dynamic_cast<const df::InvalidDual*>(&e)) {
    w.key("residual").value(d->residual());
  } else if (const auto* s = dynamic_cast<const df::NotInSpan*>(&e)) {
    w.key("residual").value(s->residual());
  } else if (const auto* z = dynamic_cast<const df::ZeroWeightOutcome*>(&e)) {
    w.key("indices").begin_array();
    for (df::Index i : z->indices()) {
      w.value(static_cast<std::int64_t>(i));
    }
    w.end_array();
  }
  w.end_object();
  w.end_object();
  emit(opt.out_path, w.str());
  std::cerr << "error: " << e.what() << "\n";
  return code;
}

// Outcome weights used for diagnostics: from the ensemble when one is
// given, uniform otherwise.
df::OutcomeWeights diagnostic_weights(const df::Povm& povm,
                                      const std::optional<df::Ensemble>& ens,
                                      const df::Tolerances& tol) {
  if (ens) return df::outcome_weights(povm, *ens, tol);
  df::OutcomeWeights w;
  const df::Index n = povm.n_outcomes();
  w.values = df::RVector::Constant(n, 1.0 / static_cast<double>(n));
  return w;
}

struct ResolvedDual {
  df::DualFrame dual;
  df::CoefficientMap map;  // analysis + weights attached
  std::string kind_label;
};

ResolvedDual resolve_dual(const Options& opt, const df::Povm& povm,
                          const std::optional<df::Ensemble>& ensemble) {
  if (!opt.dual_path.empty()) {
    df::DualFrame dual = df::io::load_dual(opt.dual_path);
    df::CoefficientMap map =
        df::analysis_from_dual(df::synthesis_map(povm), dual, opt.tol);
    map.weights = diagnostic_weights(povm, ensemble, opt.tol).values;
    return {std::move(dual), std::move(map), "file"};
  }
  if (opt.kind == "optimal") {
    if (!ensemble) {
      throw df::ParseError("optimal dual requires --ensemble");
    }
    df::OptimalDual result =
        df::optimal_dual(povm, *ensemble, opt.allow_zero_weights, opt.tol);
    return {std::move(result.dual), std::move(result.map), "optimal"};
  }
  if (opt.kind == "canonical") {
    const df::OperatorSpan span = df::span_basis(povm, opt.tol);
    df::FrameAnalysis analysis = df::analyze_frame(povm, span, opt.tol);
    df::CoefficientMap map = df::analysis_from_dual(
        df::synthesis_map(povm), analysis.canonical_dual, opt.tol);
    map.weights = diagnostic_weights(povm, ensemble, opt.tol).values;
    return {std::move(analysis.canonical_dual), std::move(map), "canonical"};
  }
  throw df::ParseError("unknown dual kind '" + opt.kind + "'");
}

int run_validate(const Options& opt) {
  auto [dim, candidates] = df::io::load_povm_raw(opt.povm_path);
  try {
    const df::Povm povm = df::validate_povm(candidates, opt.tol);
    const df::OperatorSpan span = df::span_basis(povm, opt.tol);
    JsonWriter w;
    w.begin_object();
    w.key("valid").value(true);
    w.key("n_outcomes").value(static_cast<std::int64_t>(povm.n_outcomes()));
    w.key("dim").value(static_cast<std::int64_t>(povm.dim));
    w.key("span_rank").value(static_cast<std::int64_t>(span.rank));
    w.key("informationally_complete")
        .value(df::is_informationally_complete(span));
    w.key("warnings").begin_array();
    for (df::Index i : povm.zero_elements) {
      w.value("element " + std::to_string(i) +
              " is numerically zero and can never fire");
    }
    w.end_array();
    w.key("tolerances");
    df::io::write_tolerances(w, opt.tol);
    w.end_object();
    emit(opt.out_path, w.str());
    return 0;
  } catch (const df::PovmValidationError& e) {
    JsonWriter w;
    w.begin_object();
    w.key("valid").value(false);
    w.key("n_outcomes").value(static_cast<std::int64_t>(e.n_outcomes()));
    w.key("dim").value(static_cast<std::int64_t>(e.dim()));
    w.key("errors").begin_array();
    for (const auto& v : e.violations()) {
      w.begin_object();
      w.key("kind").value(v.kind);
      if (v.index >= 0) {
        w.key("index").value(static_cast<std::int64_t>(v.index));
      }
      w.key(v.kind == "IncompleteSum" ? "deviation" : "value").value(v.value);
      w.end_object();
    }
    w.end_array();
    w.key("tolerances");
    df::io::write_tolerances(w, opt.tol);
    w.end_object();
    emit(opt.out_path, w.str());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_dual(const Options& opt) {
  const df::Povm povm = df::io::load_povm(opt.povm_path, opt.tol);
  std::optional<df::Ensemble> ensemble;
  if (!opt.ensemble_path.empty()) {
    ensemble = df::io::load_ensemble(opt.ensemble_path, opt.tol);
  }
  Options resolved = opt;
  if (resolved.kind == "optimal" && !ensemble) {
    throw df::ParseError("--kind optimal requires --ensemble");
  }
  ResolvedDual rd = resolve_dual(resolved, povm, ensemble);
  const df::OperatorSpan span = df::span_basis(povm, opt.tol);
  const double verify_residual = df::verify_dual(povm, rd.dual, span);
  df::OutcomeWeights weights = diagnostic_weights(povm, ensemble, opt.tol);
  const double eq12_residual = df::min_norm_residual(rd.map, weights);

  JsonWriter w;
  w.begin_object();
  w.key("dim").value(static_cast<std::int64_t>(rd.dual.dim));
  w.key("kind").value(df::to_string(rd.dual.kind));
  w.key("elements").begin_array();
  for (const auto& d : rd.dual.elements) df::io::write_matrix(w, d);
  w.end_array();
  w.key("diagnostics").begin_object();
  w.key("verify_residual").value(verify_residual);
  w.key("eq12_residual").value(eq12_residual);
  w.end_object();
  w.key("tolerances");
  df::io::write_tolerances(w, opt.tol);
  w.end_object();
  emit(opt.out_path, w.str());
  return 0;
}

void write_noise_diagnostics(JsonWriter& w, const ResolvedDual& rd,
                             const df::OutcomeWeights& weights,
                             const df::OperatorSpan& span,
                             const df::Tolerances& tol) {
  w.key("diagnostics").begin_object();
  w.key("eq12_residual").value(df::min_norm_residual(rd.map, weights));
  df::CoefficientMap map = rd.map;
  map.weights = weights.values;
  w.key("eq15_residual")
      .value(df::optimality_identity_residual(map, span, tol));
  w.key("span_rank").value(static_cast<std::int64_t>(span.rank));
  w.key("zero_weight_indices").begin_array();
  for (df::Index i : weights.zero_mask) {
    w.value(static_cast<std::int64_t>(i));
  }
  w.end_array();
  w.key("pi_definition").value("born probabilities of the ensemble average "
                               "state");
  w.end_object();
}

int run_noise(const Options& opt) {
  const df::Povm povm = df::io::load_povm(opt.povm_path, opt.tol);
  const df::Ensemble ensemble =
      df::io::load_ensemble(opt.ensemble_path, opt.tol);
  const df::CMatrix x = df::io::load_operator(opt.observable_path);
  const df::OperatorSpan span = df::span_basis(povm, opt.tol);
  const df::OutcomeWeights weights =
      df::outcome_weights(povm, ensemble, opt.tol);

  JsonWriter w;
  w.begin_object();
  if (opt.min_formula) {
    const df::MinNoise mn =
        df::min_noise(povm, ensemble, x, opt.allow_zero_weights, opt.tol);
    Options with_optimal = opt;
    with_optimal.kind = "optimal";
    with_optimal.dual_path.clear();
    ResolvedDual rd = resolve_dual(with_optimal, povm, ensemble);
    const df::NoiseReport via_dual =
        df::noise(povm, rd.dual, ensemble, x, opt.tol);
    const double cross = std::abs(mn.delta - via_dual.delta) /
                         std::max(1.0, std::abs(mn.delta));
    w.key("delta").value(mn.delta);
    w.key("second_moment_term").value(mn.quadratic_term);
    w.key("ensemble_square_term").value(mn.ensemble_square_term);
    w.key("dual_kind").value("optimal");
    w.key("cross_check_residual").value(cross);
    write_noise_diagnostics(w, rd, weights, span, opt.tol);
  } else {
    std::optional<df::Ensemble> ens = ensemble;
    ResolvedDual rd = resolve_dual(opt, povm, ens);
    const df::NoiseReport report =
        df::noise(povm, rd.dual, ensemble, x, opt.tol);
    w.key("delta").value(report.delta);
    w.key("second_moment_term").value(report.second_moment_term);
    w.key("ensemble_square_term").value(report.ensemble_square_term);
    w.key("dual_kind").value(df::to_string(report.dual_kind));
    write_noise_diagnostics(w, rd, weights, span, opt.tol);
  }
  w.key("tolerances");
  df::io::write_tolerances(w, opt.tol);
  w.end_object();
  emit(opt.out_path, w.str());
  return 0;
}

int run_simulate(const Options& opt) {
  const df::Povm povm = df::io::load_povm(opt.povm_path, opt.tol);
  const df::Ensemble ensemble =
      df::io::load_ensemble(opt.ensemble_path, opt.tol);
  const df::CMatrix x = df::io::load_operator(opt.observable_path);
  std::optional<df::Ensemble> ens = ensemble;
  ResolvedDual rd = resolve_dual(opt, povm, ens);
  const df::SimulationResult result = df::run_experiment(
      povm, ensemble, rd.dual, x, opt.shots, opt.repetitions, opt.seed,
      df::sampling_mode_from_string(opt.mode), opt.tol);

  JsonWriter w;
  w.begin_object();
  w.key("estimate");
  df::io::write_complex(w, result.estimate);
  w.key("true_value");
  df::io::write_complex(w, result.true_value);
  w.key("empirical_variance_times_n").value(result.empirical_variance_times_n);
  w.key("analytic_delta").value(result.analytic_delta);
  w.key("reference_variance").value(result.reference_variance);
  w.key("mode").value(df::to_string(result.mode));
  w.key("shots").value(result.shots);
  w.key("repetitions").value(static_cast<std::int64_t>(result.repetitions));
  w.key("seed").value(result.seed);
  w.key("dual_kind").value(df::to_string(rd.dual.kind));
  w.key("tolerances");
  df::io::write_tolerances(w, opt.tol);
  w.end_object();
  emit(opt.out_path, w.str());
  return 0;
}

int run_check(const Options& opt) {
  const df::Povm povm = df::io::load_povm(opt.povm_path, opt.tol);
  const df::DualFrame dual = df::io::load_dual(opt.dual_path);
  std::optional<df::Ensemble> ensemble;
  if (!opt.ensemble_path.empty()) {
    ensemble = df::io::load_ensemble(opt.ensemble_path, opt.tol);
  }
  const df::OperatorSpan span = df::span_basis(povm, opt.tol);
  const double verify_residual = df::verify_dual(povm, dual, span);

  df::CoefficientMap map = with_analysis_rows(df::synthesis_map(povm), dual);
  const df::OutcomeWeights weights =
      diagnostic_weights(povm, ensemble, opt.tol);
  map.weights = weights.values;
  const double eq12_residual = df::min_norm_residual(map, weights);
  const double eq15_residual =
      df::optimality_identity_residual(map, span, opt.tol);

  const bool dual_ok = verify_residual <= opt.tol.dual;
  const bool eq12_ok = eq12_residual <= opt.tol.dual;
  const bool eq15_ok = eq15_residual <= opt.tol.dual;
  const bool pass = dual_ok && eq12_ok && eq15_ok;

  JsonWriter w;
  w.begin_object();
  w.key("verify_residual").value(verify_residual);
  w.key("eq12_residual").value(eq12_residual);
  w.key("eq15_residual").value(eq15_residual);
  w.key("checks").begin_object();
  w.key("dual_identity").value(dual_ok);
  w.key("min_norm_condition").value(eq12_ok);
  w.key("resolution_identity").value(eq15_ok);
  w.end_object();
  w.key("pass").value(pass);
  w.key("weights_source").value(ensemble ? "ensemble" : "uniform");
  w.key("tolerances");
  df::io::write_tolerances(w, opt.tol);
  w.end_object();
  emit(opt.out_path, w.str());
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dualframe: optimal data processing for POVM measurement "
               "statistics"};
  app.require_subcommand(1);
  Options opt;

  auto* validate = app.add_subcommand(
      "validate", "validate a measurement file and report its span");
  validate->add_option("--povm", opt.povm_path, "measurement file")
      ->required();
  validate->add_option("--out", opt.out_path, "output path (default stdout)");
  add_tolerance_flags(validate, opt.tol);

  auto* dual = app.add_subcommand(
      "dual", "compute a dual frame (processing operators) for a measurement");
  dual->add_option("--povm", opt.povm_path, "measurement file")->required();
  dual->add_option("--ensemble", opt.ensemble_path, "ensemble file");
  dual->add_option("--kind", opt.kind, "canonical|optimal")
      ->default_val("canonical")
      ->check(CLI::IsMember({"canonical", "optimal"}));
  dual->add_flag("--allow-zero-weights", opt.allow_zero_weights,
                 "pin processing of zero-weight outcomes to zero");
  dual->add_option("--out", opt.out_path, "output path (default stdout)");
  add_tolerance_flags(dual, opt.tol);

  auto* noise_cmd = app.add_subcommand(
      "noise", "evaluate the statistical error of the estimator");
  noise_cmd->add_option("--povm", opt.povm_path, "measurement file")
      ->required();
  noise_cmd->add_option("--ensemble", opt.ensemble_path, "ensemble file")
      ->required();
  noise_cmd
      ->add_option("--observable", opt.observable_path, "target operator file")
      ->required();
  noise_cmd->add_option("--kind", opt.kind, "canonical|optimal")
      ->default_val("optimal")
      ->check(CLI::IsMember({"canonical", "optimal"}));
  auto* noise_dual_opt =
      noise_cmd->add_option("--dual", opt.dual_path, "dual frame file");
  noise_cmd->add_flag("--min", opt.min_formula,
                      "evaluate the closed-form minimum and cross-check it "
                      "against the optimal dual");
  noise_cmd->add_flag("--allow-zero-weights", opt.allow_zero_weights,
                      "drop zero-weight outcomes from the optimization");
  noise_cmd->add_option("--out", opt.out_path, "output path (default stdout)");
  add_tolerance_flags(noise_cmd, opt.tol);

  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo validation of the analytic noise");
  simulate->add_option("--povm", opt.povm_path, "measurement file")
      ->required();
  simulate->add_option("--ensemble", opt.ensemble_path, "ensemble file")
      ->required();
  simulate
      ->add_option("--observable", opt.observable_path, "target operator file")
      ->required();
  simulate->add_option("--kind", opt.kind, "canonical|optimal")
      ->default_val("optimal")
      ->check(CLI::IsMember({"canonical", "optimal"}));
  auto* sim_dual_opt =
      simulate->add_option("--dual", opt.dual_path, "dual frame file");
  simulate->add_option("--shots", opt.shots, "shots per replica")->required();
  simulate->add_option("--reps", opt.repetitions, "number of replicas")
      ->required();
  simulate->add_option("--seed", opt.seed, "base RNG seed")
      ->envname("DUALFRAME_SEED");
  simulate->add_option("--mode", opt.mode, "per_state|pooled")
      ->default_val("per_state")
      ->check(CLI::IsMember({"per_state", "pooled"}));
  simulate->add_flag("--allow-zero-weights", opt.allow_zero_weights,
                     "drop zero-weight outcomes from the optimization");
  simulate->add_option("--out", opt.out_path, "output path (default stdout)");
  add_tolerance_flags(simulate, opt.tol);

  auto* check = app.add_subcommand(
      "check", "verify a dual frame file against a measurement");
  check->add_option("--povm", opt.povm_path, "measurement file")->required();
  check->add_option("--dual", opt.dual_path, "dual frame file")->required();
  check->add_option("--ensemble", opt.ensemble_path,
                    "ensemble file (uniform weights when absent)");
  check->add_option("--out", opt.out_path, "output path (default stdout)");
  add_tolerance_flags(check, opt.tol);

  (void)noise_dual_opt;
  (void)sim_dual_opt;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (validate->parsed()) return run_validate(opt);
    if (dual->parsed()) return run_dual(opt);
    if (noise_cmd->parsed()) return run_noise(opt);
    if (simulate->parsed()) return run_simulate(opt);
    if (check->parsed()) return run_check(opt);
  } catch (const df::ParseError& e) {
    return emit_error(opt, e, 2);
  } catch (const df::Error& e) {
    return emit_error(opt, e, 1);
  }
  return 2;
}
