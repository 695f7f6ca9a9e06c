#include "dualframe/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dualframe {

std::string PovmValidationError::describe(
    const std::vector<PovmViolation>& violations) {
  std::ostringstream os;
  os << "measurement validation failed:";
  for (const auto& v : violations) {
    os << " " << v.kind;
    if (v.index >= 0) os << "[" << v.index << "]";
    os << "(" << v.value << ")";
  }
  return os.str();
}

CVector flatten(const CMatrix& a) {
  CVector v(a.size());
  Index k = 0;
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < a.cols(); ++c) v(k++) = a(r, c);
  }
  return v;
}

CMatrix unflatten(const CVector& v, Index dim) {
  if (v.size() != dim * dim) {
    throw DimensionError("unflatten: vector length is not dim^2");
  }
  CMatrix a(dim, dim);
  Index k = 0;
  for (Index r = 0; r < dim; ++r) {
    for (Index c = 0; c < dim; ++c) a(r, c) = v(k++);
  }
  return a;
}

CMatrix flatten_columns(const std::vector<CMatrix>& ops) {
  if (ops.empty()) throw DimensionError("flatten_columns: empty family");
  const Index d = ops.front().rows();
  CMatrix columns(d * d, static_cast<Index>(ops.size()));
  for (Index i = 0; i < static_cast<Index>(ops.size()); ++i) {
    if (ops[i].rows() != d || ops[i].cols() != d) {
      throw DimensionError("flatten_columns: mixed operator dimensions");
    }
    columns.col(i) = flatten(ops[i]);
  }
  return columns;
}

double hermiticity_deviation(const CMatrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

namespace {

void require_square_finite(const CMatrix& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + ": operator must be square");
  }
  if (!a.allFinite()) {
    throw Error("NotFinite", std::string(what) + ": non-finite entries");
  }
}

// Eigenvalue range of the Hermitian part.
std::pair<double, double> eigen_range(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(
      ((a + a.adjoint()) / 2.0).eval());
  const RVector& w = es.eigenvalues();
  return {w(0), w(w.size() - 1)};
}

}  // namespace

DensityMatrix make_density_matrix(const CMatrix& op, const Tolerances& tol) {
  require_square_finite(op, "make_density_matrix");
  const double herm = hermiticity_deviation(op);
  if (herm > tol.herm) {
    throw Error("NotHermitian", "density matrix deviates from Hermiticity by " +
                                    std::to_string(herm));
  }
  const auto [lo, hi] = eigen_range(op);
  if (lo < -tol.psd * std::max(hi, 0.0)) {
    throw Error("NotPositive", "density matrix has eigenvalue " +
                                   std::to_string(lo));
  }
  const Complex tr = op.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > tol.trace) {
    throw Error("NotUnitTrace",
                "density matrix trace deviates from one by " +
                    std::to_string(std::abs(tr - Complex(1.0, 0.0))));
  }
  return DensityMatrix{op};
}

Povm validate_povm(const std::vector<CMatrix>& candidates,
                   const Tolerances& tol) {
  if (candidates.empty()) {
    throw DimensionError("validate_povm: empty element list");
  }
  const Index d = candidates.front().rows();
  for (const auto& p : candidates) {
    if (p.rows() != d || p.cols() != d || p.rows() != p.cols() || d == 0) {
      throw DimensionError("validate_povm: elements must be square matrices "
                           "of one common dimension");
    }
  }

  const Index n = static_cast<Index>(candidates.size());
  std::vector<PovmViolation> violations;
  for (Index i = 0; i < n; ++i) {
    const CMatrix& p = candidates[i];
    if (!p.allFinite()) {
      violations.push_back({"NotFinite", i, 0.0});
      continue;
    }
    const double herm = hermiticity_deviation(p);
    if (herm > tol.herm) violations.push_back({"NotHermitian", i, herm});
    const auto [lo, hi] = eigen_range(p);
    if (lo < -tol.psd * std::max(hi, 0.0)) {
      violations.push_back({"NotPositive", i, lo});
    }
  }
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& p : candidates) sum += p;
  const double completeness =
      (sum - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (completeness > tol.complete) {
    violations.push_back({"IncompleteSum", -1, completeness});
  }
  if (!violations.empty()) {
    throw PovmValidationError(d, n, std::move(violations));
  }

  Povm povm{d, candidates, {}};
  for (Index i = 0; i < n; ++i) {
    if (hs_norm(candidates[i]) <= tol.weight) povm.zero_elements.push_back(i);
  }
  return povm;
}

RVector born_probabilities(const Povm& povm, const DensityMatrix& rho,
                           const Tolerances& tol) {
  if (rho.dim() != povm.dim) {
    throw DimensionError("born_probabilities: state and measurement "
                         "dimensions differ");
  }
  const Index n = povm.n_outcomes();
  RVector p(n);
  for (Index i = 0; i < n; ++i) {
    p(i) = (povm.elements[i] * rho.op).trace().real();
  }
  bool clamped = false;
  for (Index i = 0; i < n; ++i) {
    if (p(i) < -tol.psd) {
      throw Error("NotPositive", "outcome " + std::to_string(i) +
                                     " has probability " +
                                     std::to_string(p(i)));
    }
    if (p(i) < 0.0) {
      p(i) = 0.0;
      clamped = true;
    } else if (p(i) > 1.0) {
      p(i) = 1.0;
      clamped = true;
    }
  }
  if (clamped) p /= p.sum();
  if (std::abs(p.sum() - 1.0) > tol.trace) {
    throw Error("NotUnitTrace", "outcome probabilities sum to " +
                                    std::to_string(p.sum()));
  }
  return p;
}

Ensemble make_ensemble(std::vector<DensityMatrix> states, RVector weights,
                       const Tolerances& tol) {
  if (states.empty()) throw DimensionError("make_ensemble: no states");
  if (static_cast<Index>(states.size()) != weights.size()) {
    throw CountMismatch("make_ensemble: weight count differs from state "
                        "count");
  }
  const Index d = states.front().dim();
  for (const auto& s : states) {
    if (s.dim() != d) {
      throw DimensionError("make_ensemble: mixed state dimensions");
    }
  }
  for (Index k = 0; k < weights.size(); ++k) {
    if (weights(k) < -tol.psd) {
      throw Error("NegativeWeight", "ensemble weight " + std::to_string(k) +
                                        " is " + std::to_string(weights(k)));
    }
    if (weights(k) < 0.0) weights(k) = 0.0;
  }
  if (std::abs(weights.sum() - 1.0) > tol.trace) {
    throw Error("WeightSum", "ensemble weights sum to " +
                                 std::to_string(weights.sum()));
  }
  CMatrix avg = CMatrix::Zero(d, d);
  for (Index k = 0; k < weights.size(); ++k) avg += weights(k) * states[k].op;
  DensityMatrix average = make_density_matrix(avg, tol);
  return Ensemble{std::move(states), std::move(weights), std::move(average)};
}

CMatrix OperatorSpan::basis_operator(Index a) const {
  return unflatten(basis.col(a), dim_space);
}

CVector OperatorSpan::coordinates(const CMatrix& x) const {
  if (x.rows() != dim_space || x.cols() != dim_space) {
    throw DimensionError("OperatorSpan: operator dimension differs from "
                         "span dimension");
  }
  return basis.adjoint() * flatten(x);
}

OperatorSpan span_from_columns(const CMatrix& columns, Index dim,
                               const Tolerances& tol) {
  Eigen::JacobiSVD<CMatrix> svd(columns, Eigen::ComputeThinU);
  const RVector& sv = svd.singularValues();
  const double cutoff = tol.rank_cutoff * (sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  if (rank == 0) {
    throw SingularFrame("span_from_columns: all operators numerically zero");
  }
  OperatorSpan span;
  span.dim_space = dim;
  span.rank = rank;
  span.basis = svd.matrixU().leftCols(rank);
  span.singular_values = RVector::Zero(columns.cols());
  span.singular_values.head(sv.size()) = sv;
  span.rank_cutoff = cutoff;
  return span;
}

OperatorSpan span_basis(const Povm& povm, const Tolerances& tol) {
  return span_from_columns(flatten_columns(povm.elements), povm.dim, tol);
}

Projection project_onto_span(const OperatorSpan& span, const CMatrix& x) {
  const CVector v = span.coordinates(x);
  const CVector projected = span.basis * v;
  const double residual = (flatten(x) - projected).norm();
  return Projection{unflatten(projected, span.dim_space), residual};
}

bool is_informationally_complete(const OperatorSpan& span) {
  return span.rank == span.dim_space * span.dim_space;
}

}  // namespace dualframe
