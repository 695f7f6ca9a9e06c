#include "dualframe/simulator.hpp"

#include <cmath>
#include <utility>

namespace dualframe {

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitMix64::next_double() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::per_state ? "per_state" : "pooled";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "per_state") return SamplingMode::per_state;
  if (s == "pooled") return SamplingMode::pooled;
  throw ParseError("unknown sampling mode '" + s + "'");
}

namespace {

// Streams for nearby seeds (replica r uses seed + r) alias nearby points
// of the same counter sequence; one scrambling pass over the seed puts
// every stream on a well-separated orbit.
SplitMix64 stream_rng(std::uint64_t seed) {
  return SplitMix64(SplitMix64(seed).next());
}

// Inverse-CDF categorical sampler over a fixed probability vector.
struct Categorical {
  RVector cumulative;

  explicit Categorical(const RVector& p) : cumulative(p.size()) {
    double acc = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
      acc += p(i);
      cumulative(i) = acc;
    }
  }

  Index draw(SplitMix64& rng) const {
    const double u = rng.next_double();
    for (Index i = 0; i < cumulative.size(); ++i) {
      if (u < cumulative(i)) return i;
    }
    return cumulative.size() - 1;
  }
};

std::vector<std::uint64_t> draw_counts(const Categorical& dist,
                                       std::uint64_t shots,
                                       SplitMix64& rng) {
  std::vector<std::uint64_t> counts(dist.cumulative.size(), 0);
  for (std::uint64_t s = 0; s < shots; ++s) counts[dist.draw(rng)]++;
  return counts;
}

}  // namespace

OutcomeCounts sample_outcomes(const Povm& povm, const DensityMatrix& rho,
                              std::uint64_t shots, std::uint64_t seed,
                              const Tolerances& tol,
                              const std::string& state_label) {
  if (shots < 1) {
    throw Error("InvalidArgument", "sample_outcomes: shots must be >= 1");
  }
  const Categorical dist(born_probabilities(povm, rho, tol));
  SplitMix64 rng = stream_rng(seed);
  return OutcomeCounts{draw_counts(dist, shots, rng), shots, seed,
                       state_label};
}

OutcomeCounts sample_ensemble(const Ensemble& ensemble, const Povm& povm,
                              std::uint64_t shots, std::uint64_t seed,
                              const Tolerances& tol) {
  if (shots < 1) {
    throw Error("InvalidArgument", "sample_ensemble: shots must be >= 1");
  }
  if (ensemble.n_states() == 1) {
    OutcomeCounts counts =
        sample_outcomes(povm, ensemble.states[0], shots, seed, tol);
    counts.state_label = "ensemble";
    return counts;
  }
  const Categorical state_dist(ensemble.weights);
  std::vector<Categorical> outcome_dists;
  outcome_dists.reserve(ensemble.states.size());
  for (const auto& state : ensemble.states) {
    outcome_dists.emplace_back(born_probabilities(povm, state, tol));
  }
  SplitMix64 rng = stream_rng(seed);
  std::vector<std::uint64_t> counts(povm.n_outcomes(), 0);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const Index k = state_dist.draw(rng);
    counts[outcome_dists[static_cast<std::size_t>(k)].draw(rng)]++;
  }
  return OutcomeCounts{std::move(counts), shots, seed, "ensemble"};
}

SimulationResult run_experiment(const Povm& povm, const Ensemble& ensemble,
                                const DualFrame& dual, const CMatrix& x,
                                std::uint64_t shots, int repetitions,
                                std::uint64_t seed, SamplingMode mode,
                                const Tolerances& tol) {
  if (shots < 1) {
    throw Error("InvalidArgument", "run_experiment: shots must be >= 1");
  }
  if (repetitions < 2) {
    throw Error("InvalidArgument",
                "run_experiment: need at least 2 repetitions");
  }
  const OperatorSpan span = span_basis(povm, tol);
  const auto projection = project_onto_span(span, x);
  if (projection.residual > tol.span * hs_norm(x)) {
    throw NotInSpan(projection.residual);
  }
  const double dual_residual = verify_dual(povm, dual, span);
  if (dual_residual > tol.dual) throw InvalidDual(dual_residual);

  const CVector coeff = expansion_coefficients(dual, x).values;
  const OutcomeWeights weights = outcome_weights(povm, ensemble, tol);
  const Index n_states = ensemble.n_states();
  const Index n_outcomes = povm.n_outcomes();

  Complex true_value = 0.0;
  for (Index k = 0; k < n_states; ++k) {
    true_value += ensemble.weights(k) * (ensemble.states[k].op * x).trace();
  }

  std::vector<Categorical> outcome_dists;
  outcome_dists.reserve(ensemble.states.size());
  for (const auto& state : ensemble.states) {
    outcome_dists.emplace_back(born_probabilities(povm, state, tol));
  }
  const Categorical state_dist(ensemble.weights);
  const double inv_shots = 1.0 / static_cast<double>(shots);

  const int reps = repetitions;
  CVector replica_estimates(reps);
  // Per-state replica means, used only in per-state mode.
  CMatrix state_means(n_states, reps);

  for (int r = 0; r < reps; ++r) {
    SplitMix64 rng = stream_rng(seed + static_cast<std::uint64_t>(r));
    if (mode == SamplingMode::per_state) {
      Complex estimate = 0.0;
      for (Index k = 0; k < n_states; ++k) {
        const auto counts =
            draw_counts(outcome_dists[static_cast<std::size_t>(k)], shots,
                        rng);
        Complex mean = 0.0;
        for (Index i = 0; i < n_outcomes; ++i) {
          mean += coeff(i) * (static_cast<double>(counts[i]) * inv_shots);
        }
        state_means(k, r) = mean;
        estimate += ensemble.weights(k) * mean;
      }
      replica_estimates(r) = estimate;
    } else {
      std::vector<std::uint64_t> counts(n_outcomes, 0);
      if (n_states == 1) {
        counts = draw_counts(outcome_dists[0], shots, rng);
      } else {
        for (std::uint64_t s = 0; s < shots; ++s) {
          const Index k = state_dist.draw(rng);
          counts[outcome_dists[static_cast<std::size_t>(k)].draw(rng)]++;
        }
      }
      Complex estimate = 0.0;
      for (Index i = 0; i < n_outcomes; ++i) {
        estimate += coeff(i) * (static_cast<double>(counts[i]) * inv_shots);
      }
      replica_estimates(r) = estimate;
    }
  }

  const Complex estimate = replica_estimates.mean();
  double variance_times_n = 0.0;
  if (mode == SamplingMode::per_state) {
    for (Index k = 0; k < n_states; ++k) {
      const Complex mean = state_means.row(k).mean();
      double acc = 0.0;
      for (int r = 0; r < reps; ++r) {
        acc += std::norm(state_means(k, r) - mean);
      }
      variance_times_n += ensemble.weights(k) * acc / (reps - 1);
    }
  } else {
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
      acc += std::norm(replica_estimates(r) - estimate);
    }
    variance_times_n = acc / (reps - 1);
  }
  variance_times_n *= static_cast<double>(shots);

  const double analytic_delta = noise(povm, dual, ensemble, x, tol).delta;
  double reference = analytic_delta;
  if (mode == SamplingMode::pooled) {
    const double second_moment = weights.values.dot(coeff.cwiseAbs2());
    Complex pooled_mean = 0.0;
    for (Index i = 0; i < n_outcomes; ++i) {
      pooled_mean += weights.values(i) * coeff(i);
    }
    reference = second_moment - std::norm(pooled_mean);
  }

  return SimulationResult{estimate,        true_value, variance_times_n,
                          analytic_delta,  reference,  shots,
                          reps,            seed,       mode};
}

}  // namespace dualframe
