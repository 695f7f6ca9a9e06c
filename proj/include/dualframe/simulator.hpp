#pragma once

#include <cstdint>

#include "dualframe/estimation.hpp"

namespace dualframe {

// Counter-based pseudo-random generator (SplitMix64): output k is a
// fixed 64-bit mix of seed + k*gamma, so streams are cheap to split by
// seed offset and identical inputs reproduce identical draws on every
// platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double next_double();

 private:
  std::uint64_t state_;
};

struct OutcomeCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  std::string state_label;
};

// `shots` i.i.d. draws from the Born distribution of rho.
OutcomeCounts sample_outcomes(const Povm& povm, const DensityMatrix& rho,
                              std::uint64_t shots, std::uint64_t seed,
                              const Tolerances& tol = {},
                              const std::string& state_label = "state");

// Two-stage sampling: draw a state index from the ensemble weights,
// then an outcome from that state (marginally: sampling the average
// state). Single-state ensembles skip the state draw, so their stream
// coincides with sample_outcomes.
OutcomeCounts sample_ensemble(const Ensemble& ensemble, const Povm& povm,
                              std::uint64_t shots, std::uint64_t seed,
                              const Tolerances& tol = {});

enum class SamplingMode { per_state, pooled };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& s);

struct SimulationResult {
  Complex estimate;    // mean of the replica estimators
  Complex true_value;  // ensemble average of Tr[rho_k X]
  // n x sample variance of the replica estimators (per-state mode:
  // weighted average of per-state replica variances).
  double empirical_variance_times_n = 0;
  // Analytic per-state noise of the dual (what per-state mode estimates).
  double analytic_delta = 0;
  // Convention-matched analytic value for the chosen mode; equals
  // analytic_delta in per-state mode, and the categorical variance of
  // the pooled single-shot estimator in pooled mode.
  double reference_variance = 0;
  std::uint64_t shots = 0;
  int repetitions = 0;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::per_state;
};

// Runs `repetitions` independent estimator replicas of `shots` each
// (replica r uses stream seed + r) and compares their spread against
// the analytic noise. Replicas are merged in index order, so the result
// is reproducible bit-for-bit.
SimulationResult run_experiment(const Povm& povm, const Ensemble& ensemble,
                                const DualFrame& dual, const CMatrix& x,
                                std::uint64_t shots, int repetitions,
                                std::uint64_t seed, SamplingMode mode,
                                const Tolerances& tol = {});

}  // namespace dualframe
