#include "dualframe/estimation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <utility>

namespace dualframe {

namespace {

double operator_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(a).singularValues()(0);
}

// Moore-Penrose pseudoinverse of a Hermitian PSD matrix. The zero
// threshold is relative to max(scale, largest eigenvalue): the extra
// scale argument keeps matrices that are numerically zero relative to
// the surrounding problem from having their rounding noise inverted.
CMatrix pseudo_inverse_hermitian(const CMatrix& a, double scale,
                                 double rel_cutoff) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  const RVector& w = es.eigenvalues();
  const double cutoff =
      rel_cutoff * std::max(scale, w.size() > 0 ? w(w.size() - 1) : 0.0);
  RVector inv = RVector::Zero(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > cutoff) inv(i) = 1.0 / w(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<Index> alive_indices(const OutcomeWeights& w,
                                 const Tolerances& tol) {
  std::vector<Index> alive;
  for (Index i = 0; i < w.values.size(); ++i) {
    if (w.values(i) > tol.weight) alive.push_back(i);
  }
  return alive;
}

// Zero-weight outcomes whose element is not itself zero: these carry no
// statistics yet would need an infinite inverse weight.
std::vector<Index> dead_with_support(const Povm& povm,
                                     const OutcomeWeights& w,
                                     const Tolerances& tol) {
  std::vector<Index> dead;
  for (Index i : w.zero_mask) {
    if (hs_norm(povm.elements[i]) > tol.herm) dead.push_back(i);
  }
  return dead;
}

}  // namespace

OutcomeWeights outcome_weights(const Povm& povm, const Ensemble& ensemble,
                               const Tolerances& tol) {
  if (ensemble.dim() != povm.dim) {
    throw DimensionError("outcome_weights: ensemble and measurement "
                         "dimensions differ");
  }
  OutcomeWeights w;
  w.values = born_probabilities(povm, ensemble.average_state, tol);
  for (Index i = 0; i < w.values.size(); ++i) {
    if (w.values(i) <= tol.weight) w.zero_mask.push_back(i);
  }
  return w;
}

CoefficientMap synthesis_map(const Povm& povm) {
  CoefficientMap map;
  map.dim = povm.dim;
  map.synthesis = flatten_columns(povm.elements);
  return map;
}

CoefficientMap with_analysis_rows(CoefficientMap map, const DualFrame& dual) {
  if (dual.dim != map.dim) {
    throw DimensionError("with_analysis_rows: dual dimension differs from "
                         "map dimension");
  }
  if (dual.n_outcomes() != map.synthesis.cols()) {
    throw CountMismatch("with_analysis_rows: dual outcome count differs "
                        "from synthesis columns");
  }
  map.analysis = flatten_columns(dual.elements).adjoint();
  return map;
}

CoefficientMap analysis_from_dual(CoefficientMap map, const DualFrame& dual,
                                  const Tolerances& tol) {
  map = with_analysis_rows(std::move(map), dual);
  const OperatorSpan span = span_from_columns(map.synthesis, map.dim, tol);
  const CMatrix defect = map.analysis->adjoint() *
                             (map.synthesis.adjoint() * span.basis) -
                         span.basis;
  const double residual = operator_norm(defect);
  if (residual > tol.dual) throw InvalidDual(residual);
  return map;
}

double min_norm_residual(const CoefficientMap& map, const OutcomeWeights& w) {
  if (!map.analysis) {
    throw MissingAnalysis("min_norm_residual: map carries no analysis rows");
  }
  if (w.values.size() != map.synthesis.cols()) {
    throw CountMismatch("min_norm_residual: weight count differs from "
                        "outcome count");
  }
  const CMatrix gram = *map.analysis * map.synthesis;  // N x N
  const CMatrix weighted = w.values.asDiagonal() * gram;
  return operator_norm(weighted - weighted.adjoint());
}

OptimalDual optimal_dual(const Povm& povm, const Ensemble& ensemble,
                         bool allow_zero_weights, const Tolerances& tol) {
  const OutcomeWeights weights = outcome_weights(povm, ensemble, tol);
  const OperatorSpan span = span_basis(povm, tol);
  const Index n = povm.n_outcomes();

  const std::vector<Index> dead = dead_with_support(povm, weights, tol);
  if (!dead.empty() && !allow_zero_weights) {
    throw ZeroWeightOutcome(
        dead, "outcomes with zero weight but nonzero element; pass the "
              "allow-zero flag to pin their processing to zero");
  }
  const std::vector<Index> alive = alive_indices(weights, tol);
  const Index a = static_cast<Index>(alive.size());
  if (a == 0) {
    throw ZeroWeightOutcome({}, "all outcome weights are zero");
  }

  const CMatrix coords =
      span.basis.adjoint() * flatten_columns(povm.elements);  // s x N
  CMatrix alive_coords(span.rank, a);
  RVector alive_weights(a);
  for (Index j = 0; j < a; ++j) {
    alive_coords.col(j) = coords.col(alive[j]);
    alive_weights(j) = weights.values(alive[j]);
  }

  // Canonical dual of the frame restricted to live outcomes. Its frame
  // operator must stay invertible on the span: otherwise the surviving
  // outcomes cannot reproduce every estimable operator.
  const CMatrix alive_frame = alive_coords * alive_coords.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(alive_frame);
  const RVector& evals = es.eigenvalues();
  if (evals(0) <= tol.rank_cutoff * evals(evals.size() - 1)) {
    if (dead.empty()) {
      throw SingularFrame("optimal_dual: frame operator singular on span");
    }
    throw ZeroWeightOutcome(dead,
                            "zero-weight outcomes leave part of the span "
                            "uncovered by the remaining outcomes");
  }
  const CMatrix frame_inverse = es.eigenvectors() *
                                evals.cwiseInverse().asDiagonal() *
                                es.eigenvectors().adjoint();
  const CMatrix canon_coords = frame_inverse * alive_coords;  // s x a

  // Cross-Gram of the live canonical dual with the live elements, the
  // projector entering the pseudoinverse correction.
  const CMatrix proj = canon_coords.adjoint() * alive_coords;  // a x a
  const CMatrix complement = CMatrix::Identity(a, a) - proj;
  const CMatrix pivoted =
      complement * alive_weights.asDiagonal() * complement;
  const CMatrix correction =
      pseudo_inverse_hermitian(pivoted, alive_weights.maxCoeff(),
                               tol.rank_cutoff) *
      alive_weights.asDiagonal();
  // Column i holds the span coordinates of the optimal element for the
  // i-th live outcome.
  const CMatrix optimal_coords =
      canon_coords - canon_coords * correction.transpose();

  DualFrame dual{povm.dim, DualKind::optimal, {}};
  dual.elements.assign(n, CMatrix::Zero(povm.dim, povm.dim));
  for (Index j = 0; j < a; ++j) {
    dual.elements[alive[j]] =
        unflatten(span.basis * optimal_coords.col(j), povm.dim);
  }

  CoefficientMap map = with_analysis_rows(synthesis_map(povm), dual);
  // Full-frame canonical cross-Gram, independent of the weights.
  const CMatrix full_frame = coords * coords.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> fes(full_frame);
  const RVector& fevals = fes.eigenvalues();
  if (fevals(0) <= tol.rank_cutoff * fevals(fevals.size() - 1)) {
    throw SingularFrame("optimal_dual: frame operator singular on span");
  }
  const CMatrix full_canon = fes.eigenvectors() *
                             fevals.cwiseInverse().asDiagonal() *
                             fes.eigenvectors().adjoint() * coords;
  map.gram_projector = full_canon.adjoint() * coords;
  map.weights = weights.values;
  return OptimalDual{std::move(dual), std::move(map)};
}

NoiseReport noise(const Povm& povm, const DualFrame& dual,
                  const Ensemble& ensemble, const CMatrix& x,
                  const Tolerances& tol) {
  if (x.rows() != povm.dim || x.cols() != povm.dim) {
    throw DimensionError("noise: target dimension differs from measurement "
                         "dimension");
  }
  const OperatorSpan span = span_basis(povm, tol);
  const auto projection = project_onto_span(span, x);
  if (projection.residual > tol.span * hs_norm(x)) {
    throw NotInSpan(projection.residual);
  }
  const double dual_residual = verify_dual(povm, dual, span);
  if (dual_residual > tol.dual) throw InvalidDual(dual_residual);

  const OutcomeWeights weights = outcome_weights(povm, ensemble, tol);
  const Coefficients coeff = expansion_coefficients(dual, x);
  const double second_moment =
      weights.values.dot(coeff.values.cwiseAbs2());
  double ensemble_square = 0.0;
  for (Index k = 0; k < ensemble.n_states(); ++k) {
    ensemble_square += ensemble.weights(k) *
                       std::norm((ensemble.states[k].op * x).trace());
  }
  return NoiseReport{second_moment - ensemble_square, second_moment,
                     ensemble_square, dual.kind};
}

MinNoise min_noise(const Povm& povm, const Ensemble& ensemble,
                   const CMatrix& x, bool allow_zero_weights,
                   const Tolerances& tol) {
  if (x.rows() != povm.dim || x.cols() != povm.dim) {
    throw DimensionError("min_noise: target dimension differs from "
                         "measurement dimension");
  }
  const OperatorSpan span = span_basis(povm, tol);
  const auto projection = project_onto_span(span, x);
  if (projection.residual > tol.span * hs_norm(x)) {
    throw NotInSpan(projection.residual);
  }

  const OutcomeWeights weights = outcome_weights(povm, ensemble, tol);
  const std::vector<Index> dead = dead_with_support(povm, weights, tol);
  if (!dead.empty() && !allow_zero_weights) {
    throw ZeroWeightOutcome(
        dead, "outcomes with zero weight but nonzero element; pass the "
              "allow-zero flag to drop them from the inverse-weight sum");
  }
  const std::vector<Index> alive = alive_indices(weights, tol);
  if (alive.empty()) {
    throw ZeroWeightOutcome({}, "all outcome weights are zero");
  }

  const CMatrix coords =
      span.basis.adjoint() * flatten_columns(povm.elements);
  CMatrix second_moment = CMatrix::Zero(span.rank, span.rank);
  for (Index i : alive) {
    second_moment += coords.col(i) * coords.col(i).adjoint() /
                     weights.values(i);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(second_moment);
  const RVector& evals = es.eigenvalues();
  if (evals(0) <= tol.rank_cutoff * evals(evals.size() - 1)) {
    throw ZeroWeightOutcome(dead,
                            "zero-weight outcomes leave part of the span "
                            "uncovered by the remaining outcomes");
  }
  const CMatrix moment_matrix = es.eigenvectors() *
                                evals.cwiseInverse().asDiagonal() *
                                es.eigenvectors().adjoint();

  const CVector x_coords = span.coordinates(x);
  const double quadratic = (x_coords.adjoint() * moment_matrix * x_coords)
                               .value()
                               .real();
  double ensemble_square = 0.0;
  for (Index k = 0; k < ensemble.n_states(); ++k) {
    ensemble_square += ensemble.weights(k) *
                       std::norm((ensemble.states[k].op * x).trace());
  }
  return MinNoise{quadratic - ensemble_square, moment_matrix, quadratic,
                  ensemble_square};
}

double optimality_identity_residual(const CoefficientMap& map,
                                    const OperatorSpan& span,
                                    const Tolerances& tol) {
  if (!map.analysis) {
    throw MissingAnalysis(
        "optimality_identity_residual: map carries no analysis rows");
  }
  if (!map.weights) {
    throw Error("MissingWeights",
                "optimality_identity_residual: map carries no outcome "
                "weights");
  }
  const CMatrix& analysis = *map.analysis;
  const RVector& weights = *map.weights;

  // Resolution of identity on the span.
  const CMatrix defect = analysis.adjoint() *
                             (map.synthesis.adjoint() * span.basis) -
                         span.basis;
  const double identity_residual = operator_norm(defect);

  // Weighted Gram of the dual vs the inverse weighted second moment.
  const CMatrix dual_on_span = analysis * span.basis;  // N x s
  const CMatrix weighted_gram =
      dual_on_span.adjoint() * weights.asDiagonal() * dual_on_span;

  CMatrix second_moment = CMatrix::Zero(span.rank, span.rank);
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= tol.weight) continue;
    const CVector v = span.basis.adjoint() * map.synthesis.col(i);
    second_moment += v * v.adjoint() / weights(i);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(second_moment);
  const RVector& evals = es.eigenvalues();
  if (evals(0) <= tol.rank_cutoff * evals(evals.size() - 1)) {
    throw ZeroWeightOutcome({}, "optimality_identity_residual: weighted "
                                "second moment singular on span");
  }
  const CMatrix inverse = es.eigenvectors() *
                          evals.cwiseInverse().asDiagonal() *
                          es.eigenvectors().adjoint();
  const double gram_residual = operator_norm(weighted_gram - inverse);
  return std::max(identity_residual, gram_residual);
}

}  // namespace dualframe
