#pragma once

#include <optional>

#include "dualframe/frames.hpp"

namespace dualframe {

// Born probabilities of the ensemble average state: the weights of the
// norm the optimal processing minimizes.
struct OutcomeWeights {
  RVector values;
  std::vector<Index> zero_mask;  // indices with weight <= tol.weight
};

OutcomeWeights outcome_weights(const Povm& povm, const Ensemble& ensemble,
                               const Tolerances& tol = {});

// The linear maps between coefficient vectors and flattened operators.
struct CoefficientMap {
  Index dim = 0;
  // d^2 x N; column i is flatten(P_i). Maps coefficients to operators.
  CMatrix synthesis;
  // N x d^2; row i is flatten(D_i)^dag for a dual {D_i}. Maps operators
  // to coefficients, and is a generalized inverse of `synthesis`.
  std::optional<CMatrix> analysis;
  // N x N cross-Gram of the canonical dual with the measurement,
  // (i, j) = Tr[Delta_i P_j]; an orthogonal projection matrix.
  std::optional<CMatrix> gram_projector;
  // Outcome weights the analysis rows were optimized for (set by
  // optimal_dual; required by optimality_identity_residual).
  std::optional<RVector> weights;
};

CoefficientMap synthesis_map(const Povm& povm);

// Attaches the analysis rows of a dual without validating it.
CoefficientMap with_analysis_rows(CoefficientMap map, const DualFrame& dual);

// Same, but first checks the dual against the synthesis columns; throws
// InvalidDual if the reconstruction identity fails.
CoefficientMap analysis_from_dual(CoefficientMap map, const DualFrame& dual,
                                  const Tolerances& tol = {});

// Hermiticity defect of diag(w) * analysis * synthesis, the criterion
// identifying the weighted minimum-norm generalized inverse. Optimal
// duals give ~0, generic duals do not.
double min_norm_residual(const CoefficientMap& map, const OutcomeWeights& w);

struct OptimalDual {
  DualFrame dual;
  CoefficientMap map;  // analysis, gram_projector and weights all set
};

// The dual frame whose coefficients minimize the weighted square sum
// over all duals. With allow_zero_weights, outcomes that never fire are
// dropped from the optimization and their processing operators pinned
// to zero; by default such outcomes (with nonzero element) throw.
OptimalDual optimal_dual(const Povm& povm, const Ensemble& ensemble,
                         bool allow_zero_weights = false,
                         const Tolerances& tol = {});

// Statistical error of the single-shot estimator averaged over the
// ensemble: second moment of the coefficients minus the ensemble mean
// square of the target.
struct NoiseReport {
  double delta = 0;
  double second_moment_term = 0;
  double ensemble_square_term = 0;
  DualKind dual_kind = DualKind::canonical;
};

NoiseReport noise(const Povm& povm, const DualFrame& dual,
                  const Ensemble& ensemble, const CMatrix& x,
                  const Tolerances& tol = {});

// Closed-form minimum of `noise` over all duals, computed from the
// measurement and ensemble alone (no dual construction).
struct MinNoise {
  double delta = 0;
  // s x s inverse weighted second-moment matrix on the span; the
  // quadratic form evaluating the minimum for any in-span target.
  CMatrix moment_matrix;
  double quadratic_term = 0;
  double ensemble_square_term = 0;
};

MinNoise min_noise(const Povm& povm, const Ensemble& ensemble,
                   const CMatrix& x, bool allow_zero_weights = false,
                   const Tolerances& tol = {});

// Residual of the resolution-of-identity chain satisfied by optimal
// analysis maps: max of |sum_i |D_i><P_i| - I| on the span and the
// deviation of the weighted Gram of the dual from the inverse weighted
// second-moment matrix. Requires analysis and weights on the map.
double optimality_identity_residual(const CoefficientMap& map,
                                    const OperatorSpan& span,
                                    const Tolerances& tol = {});

}  // namespace dualframe
