#include "dualframe/frames.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <utility>

namespace dualframe {

std::string to_string(DualKind kind) {
  switch (kind) {
    case DualKind::canonical: return "canonical";
    case DualKind::alternate: return "alternate";
    case DualKind::optimal: return "optimal";
  }
  return "canonical";
}

DualKind dual_kind_from_string(const std::string& s) {
  if (s == "canonical") return DualKind::canonical;
  if (s == "alternate") return DualKind::alternate;
  if (s == "optimal") return DualKind::optimal;
  throw ParseError("unknown dual kind '" + s + "'");
}

namespace {

double operator_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(a).singularValues()(0);
}

}  // namespace

FrameAnalysis analyze_frame(const Povm& povm, const OperatorSpan& span,
                            const Tolerances& tol) {
  if (span.dim_space != povm.dim) {
    throw DimensionError("analyze_frame: span and measurement dimensions "
                         "differ");
  }
  const CMatrix coords =
      span.basis.adjoint() * flatten_columns(povm.elements);  // s x N
  const CMatrix frame_matrix = coords * coords.adjoint();

  Eigen::SelfAdjointEigenSolver<CMatrix> es(frame_matrix);
  const RVector& evals = es.eigenvalues();
  const double lo = evals(0);
  const double hi = evals(evals.size() - 1);
  if (lo <= tol.rank_cutoff * hi) {
    throw SingularFrame("analyze_frame: frame operator is singular on the "
                        "span (smallest eigenvalue " + std::to_string(lo) +
                        ")");
  }
  const CMatrix inverse = es.eigenvectors() *
                          evals.cwiseInverse().asDiagonal() *
                          es.eigenvectors().adjoint();

  const CMatrix dual_coords = inverse * coords;  // s x N
  DualFrame canonical{povm.dim, DualKind::canonical, {}};
  canonical.elements.reserve(povm.elements.size());
  for (Index i = 0; i < dual_coords.cols(); ++i) {
    canonical.elements.push_back(
        unflatten(span.basis * dual_coords.col(i), povm.dim));
  }
  return FrameAnalysis{span, frame_matrix, lo, hi, std::move(canonical)};
}

DualFrame alternate_dual(const Povm& povm, const FrameAnalysis& analysis,
                         const std::vector<CMatrix>& perturbations,
                         const Tolerances& tol) {
  (void)tol;
  const Index n = povm.n_outcomes();
  if (static_cast<Index>(perturbations.size()) != n) {
    throw CountMismatch("alternate_dual: need one perturbation per outcome");
  }
  for (const auto& p : perturbations) {
    if (p.rows() != povm.dim || p.cols() != povm.dim) {
      throw DimensionError("alternate_dual: perturbation dimension differs "
                           "from measurement dimension");
    }
  }
  const auto& canonical = analysis.canonical_dual.elements;
  DualFrame dual{povm.dim, DualKind::alternate, {}};
  dual.elements.reserve(n);
  for (Index i = 0; i < n; ++i) {
    CMatrix eta = canonical[i] + perturbations[i];
    for (Index m = 0; m < n; ++m) {
      eta -= perturbations[m] * hs_inner(povm.elements[m], canonical[i]);
    }
    dual.elements.push_back(std::move(eta));
  }
  return dual;
}

double verify_dual(const Povm& povm, const DualFrame& dual,
                   const OperatorSpan& span) {
  if (dual.dim != povm.dim || span.dim_space != povm.dim) {
    throw DimensionError("verify_dual: dimensions differ");
  }
  if (dual.n_outcomes() != povm.n_outcomes()) {
    throw DimensionError("verify_dual: outcome counts differ");
  }
  const CMatrix dual_columns = flatten_columns(dual.elements);
  const CMatrix frame_columns = flatten_columns(povm.elements);
  // (sum_i |D_i><P_i|) acting on the span basis, minus the basis itself.
  const CMatrix defect =
      dual_columns * (frame_columns.adjoint() * span.basis) - span.basis;
  return operator_norm(defect);
}

Coefficients expansion_coefficients(const DualFrame& dual, const CMatrix& x) {
  if (x.rows() != dual.dim || x.cols() != dual.dim) {
    throw DimensionError("expansion_coefficients: target dimension differs "
                         "from dual dimension");
  }
  CVector values(dual.n_outcomes());
  for (Index i = 0; i < dual.n_outcomes(); ++i) {
    values(i) = hs_inner(dual.elements[i], x);
  }
  return Coefficients{std::move(values), x, dual.kind, true, 0.0};
}

Coefficients expansion_coefficients(const DualFrame& dual, const CMatrix& x,
                                    const OperatorSpan& span,
                                    const Tolerances& tol) {
  Coefficients c = expansion_coefficients(dual, x);
  const auto projection = project_onto_span(span, x);
  c.projection_residual = projection.residual;
  c.in_span = projection.residual <= tol.span * hs_norm(x);
  return c;
}

}  // namespace dualframe
