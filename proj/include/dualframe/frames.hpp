#pragma once

#include "dualframe/operators.hpp"

namespace dualframe {

enum class DualKind { canonical, alternate, optimal };

std::string to_string(DualKind kind);
DualKind dual_kind_from_string(const std::string& s);

// A family of processing operators D_i paired with a measurement: the
// coefficient of X on outcome i is Tr[D_i^dag X].
struct DualFrame {
  Index dim = 0;
  DualKind kind = DualKind::canonical;
  std::vector<CMatrix> elements;
  Index n_outcomes() const { return static_cast<Index>(elements.size()); }
};

// The measurement viewed as an operator frame for its span: frame
// operator in the span basis, frame bounds, canonical dual.
struct FrameAnalysis {
  OperatorSpan span;
  CMatrix frame_matrix;  // s x s, Hermitian positive definite
  double lower_bound = 0;
  double upper_bound = 0;
  DualFrame canonical_dual;
};

FrameAnalysis analyze_frame(const Povm& povm, const OperatorSpan& span,
                            const Tolerances& tol = {});

// Dual classified by a perturbation family: eta_n = delta-perturbed
// canonical dual with the in-span part of the perturbation projected
// away, so the reconstruction identity is preserved for any input.
DualFrame alternate_dual(const Povm& povm, const FrameAnalysis& analysis,
                         const std::vector<CMatrix>& perturbations,
                         const Tolerances& tol = {});

// Largest singular value of (sum_i |D_i><P_i| - identity) acting on the
// span; a dual is valid iff this is <= tol.dual.
double verify_dual(const Povm& povm, const DualFrame& dual,
                   const OperatorSpan& span);

struct Coefficients {
  CVector values;
  CMatrix target;
  DualKind dual_kind = DualKind::canonical;
  // Filled by the span-aware overload; when the target lies outside the
  // span the coefficients reconstruct only its projection.
  bool in_span = true;
  double projection_residual = 0;
};

Coefficients expansion_coefficients(const DualFrame& dual, const CMatrix& x);
Coefficients expansion_coefficients(const DualFrame& dual, const CMatrix& x,
                                    const OperatorSpan& span,
                                    const Tolerances& tol = {});

}  // namespace dualframe
