#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "dualframe/estimation.hpp"
#include "dualframe/frames.hpp"
#include "dualframe/operators.hpp"

namespace testsup {

using namespace dualframe;

inline CMatrix identity(Index d) { return CMatrix::Identity(d, d); }

inline CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

inline CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline CMatrix ket0() {
  CMatrix m(2, 2);
  m << 1, 0, 0, 0;
  return m;
}

inline CMatrix ket1() {
  CMatrix m(2, 2);
  m << 0, 0, 0, 1;
  return m;
}

inline CMatrix ket_plus() {
  CMatrix m(2, 2);
  m << 0.5, 0.5, 0.5, 0.5;
  return m;
}

// Projective measurement onto the computational basis.
inline Povm z_povm() { return validate_povm({ket0(), ket1()}); }

// Four subnormalized projectors along tetrahedron directions.
inline std::vector<Eigen::Vector3d> tetrahedron_directions() {
  const double r = 1.0 / std::sqrt(3.0);
  return {{r, r, r}, {r, -r, -r}, {-r, r, -r}, {-r, -r, r}};
}

inline Povm tetrahedron_povm() {
  std::vector<CMatrix> elems;
  for (const auto& s : tetrahedron_directions()) {
    elems.push_back(
        (identity(2) + s.x() * pauli_x() + s.y() * pauli_y() +
         s.z() * pauli_z()) /
        4.0);
  }
  return validate_povm(elems);
}

// Six-outcome mixture of the three Pauli eigenbases, ordered
// x+, x-, y+, y-, z+, z-.
inline Povm mub6_povm() {
  std::vector<CMatrix> elems;
  for (const CMatrix& s : {pauli_x(), pauli_y(), pauli_z()}) {
    elems.push_back((identity(2) + s) / 6.0);
    elems.push_back((identity(2) - s) / 6.0);
  }
  return validate_povm(elems);
}

inline Ensemble single_state_ensemble(const CMatrix& rho) {
  RVector w(1);
  w << 1.0;
  return make_ensemble({make_density_matrix(rho)}, w);
}

inline Ensemble maximally_mixed_ensemble(Index d = 2) {
  return single_state_ensemble(CMatrix::Identity(d, d) /
                               static_cast<double>(d));
}

inline Ensemble plus_ensemble() { return single_state_ensemble(ket_plus()); }

// 3/4 |0><0| + 1/4 |1><1|: the nonuniform-weight workhorse.
inline Ensemble skewed_ensemble() {
  RVector w(2);
  w << 0.75, 0.25;
  return make_ensemble({make_density_matrix(ket0()),
                        make_density_matrix(ket1())},
                       w);
}

inline Ensemble zbasis_ensemble() {
  RVector w(2);
  w << 0.5, 0.5;
  return make_ensemble({make_density_matrix(ket0()),
                        make_density_matrix(ket1())},
                       w);
}

// --- seeded random inputs -------------------------------------------------

inline CMatrix random_complex_matrix(Index d, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  CMatrix m(d, d);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) m(r, c) = Complex(gauss(rng), gauss(rng));
  }
  return m;
}

inline CMatrix random_hermitian(Index d, std::mt19937_64& rng) {
  const CMatrix g = random_complex_matrix(d, rng);
  return ((g + g.adjoint()) / 2.0).eval();
}

inline DensityMatrix random_density(Index d, std::mt19937_64& rng) {
  const CMatrix g = random_complex_matrix(d, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  return make_density_matrix(rho);
}

// Generic measurement: random PSD operators renormalized through the
// inverse square root of their sum.
inline Povm random_povm(Index d, Index n, std::mt19937_64& rng) {
  std::vector<CMatrix> raw;
  CMatrix sum = CMatrix::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    const CMatrix g = random_complex_matrix(d, rng);
    raw.push_back(g * g.adjoint());
    sum += raw.back();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sum);
  const CMatrix inv_sqrt =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().adjoint();
  std::vector<CMatrix> elems;
  for (const auto& a : raw) elems.push_back(inv_sqrt * a * inv_sqrt);
  return validate_povm(elems);
}

inline Ensemble random_ensemble(Index d, Index n_states,
                                std::mt19937_64& rng) {
  std::vector<DensityMatrix> states;
  RVector weights(n_states);
  std::uniform_real_distribution<double> uniform(0.1, 1.0);
  for (Index k = 0; k < n_states; ++k) {
    states.push_back(random_density(d, rng));
    weights(k) = uniform(rng);
  }
  weights /= weights.sum();
  return make_ensemble(std::move(states), std::move(weights));
}

// Random operator inside the span (random complex combination of the
// basis operators).
inline CMatrix random_in_span(const OperatorSpan& span,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector coeff(span.rank);
  for (Index a = 0; a < span.rank; ++a) {
    coeff(a) = Complex(gauss(rng), gauss(rng));
  }
  return unflatten(span.basis * coeff, span.dim_space);
}

inline std::vector<CMatrix> random_perturbations(Index d, Index n,
                                                 std::mt19937_64& rng,
                                                 double scale = 1.0) {
  std::vector<CMatrix> out;
  for (Index i = 0; i < n; ++i) {
    out.push_back(random_complex_matrix(d, rng, scale));
  }
  return out;
}

// --- independent oracles ---------------------------------------------------

// Equality-constrained weighted least squares: minimize sum_i w_i |f_i|^2
// subject to reproducing x over the measurement elements. Solved through
// the raw stationarity (KKT) system with a dense LU factorization, sharing
// no code with the pseudoinverse construction it checks.
inline CVector kkt_coefficients(const Povm& povm, const OperatorSpan& span,
                                const RVector& weights, const CMatrix& x) {
  const Index n = povm.n_outcomes();
  const Index s = span.rank;
  const CMatrix constraint =
      span.basis.adjoint() * flatten_columns(povm.elements);  // s x n
  CMatrix kkt = CMatrix::Zero(n + s, n + s);
  kkt.topLeftCorner(n, n) = 2.0 * weights.asDiagonal().toDenseMatrix()
                                       .cast<Complex>();
  kkt.topRightCorner(n, s) = constraint.adjoint();
  kkt.bottomLeftCorner(s, n) = constraint;
  CVector rhs = CVector::Zero(n + s);
  rhs.tail(s) = span.basis.adjoint() * flatten(x);
  const CVector solution = Eigen::FullPivLU<CMatrix>(kkt).solve(rhs);
  return solution.head(n);
}

// Single-shot variance of the pooled (two-stage) estimator.
inline double pooled_variance(const RVector& weights, const CVector& coeff) {
  const double second = weights.dot(coeff.cwiseAbs2());
  Complex mean = 0.0;
  for (Index i = 0; i < weights.size(); ++i) mean += weights(i) * coeff(i);
  return second - std::norm(mean);
}

// Direct evaluation of the statistical error from a coefficient vector,
// with no dual-frame machinery.
inline double direct_noise(const Povm& povm, const Ensemble& ensemble,
                           const CVector& coeff, const CMatrix& x) {
  const RVector weights =
      born_probabilities(povm, ensemble.average_state);
  double second = weights.dot(coeff.cwiseAbs2());
  double square = 0.0;
  for (Index k = 0; k < ensemble.n_states(); ++k) {
    square += ensemble.weights(k) *
              std::norm((ensemble.states[k].op * x).trace());
  }
  return second - square;
}

}  // namespace testsup
