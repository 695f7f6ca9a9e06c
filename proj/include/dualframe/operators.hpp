#pragma once

#include "dualframe/types.hpp"

namespace dualframe {

// Hilbert-Schmidt inner product Tr[a^dag b]; conjugate-linear in `a`.
template <typename DerivedA, typename DerivedB>
Complex hs_inner(const Eigen::MatrixBase<DerivedA>& a,
                 const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("hs_inner: operand shapes differ");
  }
  return a.conjugate().cwiseProduct(b).sum();
}

// Hilbert-Schmidt norm (== Frobenius norm).
template <typename Derived>
double hs_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

// Row-major flattening: entry (m, n) of a d x d operator lands at
// position m*d + n. Every matrix assembled from flattened operators
// (synthesis/analysis maps, span bases) uses this convention.
CVector flatten(const CMatrix& a);
CMatrix unflatten(const CVector& v, Index dim);

// d^2 x N matrix whose column i is flatten(ops[i]).
CMatrix flatten_columns(const std::vector<CMatrix>& ops);

// Largest entry of |a - a^dag|.
double hermiticity_deviation(const CMatrix& a);

struct DensityMatrix {
  CMatrix op;
  Index dim() const { return op.rows(); }
};

// Checks Hermiticity, positivity and unit trace.
DensityMatrix make_density_matrix(const CMatrix& op,
                                  const Tolerances& tol = {});

struct Povm {
  Index dim = 0;
  std::vector<CMatrix> elements;
  // Indices of (numerically) zero elements: accepted, but surfaced as
  // warnings since they can never fire.
  std::vector<Index> zero_elements;
  Index n_outcomes() const { return static_cast<Index>(elements.size()); }
};

// Exhaustive validation: all violated conditions are reported at once
// through PovmValidationError.
Povm validate_povm(const std::vector<CMatrix>& candidates,
                   const Tolerances& tol = {});

// p(i) = Tr[P_i rho]. Entries in [-tol.psd, 0) are clamped to zero and
// the vector renormalized; larger negativity throws.
RVector born_probabilities(const Povm& povm, const DensityMatrix& rho,
                           const Tolerances& tol = {});

struct Ensemble {
  std::vector<DensityMatrix> states;
  RVector weights;
  DensityMatrix average_state;
  Index dim() const { return average_state.dim(); }
  Index n_states() const { return static_cast<Index>(states.size()); }
};

Ensemble make_ensemble(std::vector<DensityMatrix> states, RVector weights,
                       const Tolerances& tol = {});

// Orthonormal basis of the operator subspace spanned by a family of
// operators, extracted by rank-revealing SVD of their flattenings.
struct OperatorSpan {
  Index dim_space = 0;  // d
  Index rank = 0;       // s = dim of the span
  // d^2 x rank; column a is the flattening of basis operator B_a.
  // Columns are orthonormal: basis.adjoint() * basis == I.
  CMatrix basis;
  RVector singular_values;  // all N, descending, zero-padded
  double rank_cutoff = 0;   // absolute threshold applied

  CMatrix basis_operator(Index a) const;
  // Coordinates of x in the span basis: basis^dag flatten(x).
  CVector coordinates(const CMatrix& x) const;
};

OperatorSpan span_from_columns(const CMatrix& columns, Index dim,
                               const Tolerances& tol = {});
OperatorSpan span_basis(const Povm& povm, const Tolerances& tol = {});

struct Projection {
  CMatrix projected;
  double residual = 0;  // Hilbert-Schmidt norm of x - projected
};
Projection project_onto_span(const OperatorSpan& span, const CMatrix& x);

// True iff the span covers the full operator space (rank == d^2).
bool is_informationally_complete(const OperatorSpan& span);

}  // namespace dualframe
