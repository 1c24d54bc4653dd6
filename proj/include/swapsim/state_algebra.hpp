// state_algebra.hpp - kets, Jones operators and density matrices over
// photon polarization space, plus the usual two-photon metrics.
//
// Basis convention: a photon is |h> = 0 or |v> = 1, and photon 0 is the most
// significant bit of an amplitude index. For two photons the basis order is
// therefore (hh, hv, vh, vv).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swapsim {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// 2x2 Jones matrix acting on a single photon's polarization.
using JonesOperator = Eigen::Matrix2cd;

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Eigenvalue floor below which a density matrix is reported as unphysical.
inline constexpr double kPhysicalEigenTolerance = 1e-8;

inline constexpr double degrees(double deg) { return deg * std::numbers::pi / 180.0; }

enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline constexpr std::array<BellKind, 4> kAllBellKinds = {BellKind::PhiPlus, BellKind::PhiMinus,
                                                          BellKind::PsiPlus, BellKind::PsiMinus};

inline std::string_view to_string(BellKind kind) {
  switch (kind) {
    case BellKind::PhiPlus: return "phiplus";
    case BellKind::PhiMinus: return "phiminus";
    case BellKind::PsiPlus: return "psiplus";
    case BellKind::PsiMinus: return "psiminus";
  }
  return "?";
}

inline BellKind bell_kind_from_string(std::string_view name) {
  for (BellKind k : kAllBellKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown Bell state name '" + std::string(name) + "'");
}

namespace detail {

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
  }
  return true;
}

inline std::size_t dim_for(int n_photons) {
  if (n_photons <= 0 || n_photons > 16) {
    throw std::invalid_argument("photon count must be in [1, 16], got " + std::to_string(n_photons));
  }
  return std::size_t{1} << n_photons;
}

// Bit position (from the least significant end) of a photon's polarization.
inline int bit_of(int photon, int n_photons) { return n_photons - 1 - photon; }

}  // namespace detail

/// Pure polarization state of n photons, 2^n complex amplitudes.
class Ket {
 public:
  Ket(int n_photons, CVector amplitudes) : n_(n_photons), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != detail::dim_for(n_)) {
      throw std::invalid_argument("ket length " + std::to_string(amps_.size()) +
                                  " does not match 2^" + std::to_string(n_));
    }
    if (!detail::all_finite(amps_)) throw std::invalid_argument("ket has non-finite amplitude");
  }

  /// Product basis state from a label such as "hvvh".
  static Ket basis(std::string_view labels) {
    const int n = static_cast<int>(labels.size());
    CVector a = CVector::Zero(static_cast<Eigen::Index>(detail::dim_for(n)));
    std::size_t index = 0;
    for (char c : labels) {
      index <<= 1;
      if (c == 'v' || c == 'V') {
        index |= 1;
      } else if (c != 'h' && c != 'H') {
        throw std::invalid_argument("basis label must use only 'h'/'v': " + std::string(labels));
      }
    }
    a(static_cast<Eigen::Index>(index)) = 1.0;
    return Ket(n, std::move(a));
  }

  int n_photons() const { return n_; }
  Eigen::Index dim() const { return amps_.size(); }
  const CVector& amplitudes() const { return amps_; }
  Complex operator[](Eigen::Index i) const { return amps_(i); }

  double norm() const { return amps_.norm(); }

  Ket normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize the zero ket");
    return Ket(n_, amps_ / n);
  }

 private:
  int n_;
  CVector amps_;
};

using MultiPhotonKet = Ket;

/// <a|b>
inline Complex inner(const Ket& a, const Ket& b) {
  if (a.n_photons() != b.n_photons()) throw std::invalid_argument("inner: photon count mismatch");
  return a.amplitudes().dot(b.amplitudes());
}

/// |<a|b>|, the phase-free comparison used everywhere states are matched.
inline double overlap_modulus(const Ket& a, const Ket& b) { return std::abs(inner(a, b)); }

/// Single-photon states. |l> follows the (i|h> + |v>)/sqrt2 form.
namespace pol {
inline Ket h() { return Ket::basis("h"); }
inline Ket v() { return Ket::basis("v"); }
inline Ket p() { return Ket(1, CVector{{Complex(kInvSqrt2), Complex(kInvSqrt2)}}); }
inline Ket m() { return Ket(1, CVector{{Complex(kInvSqrt2), Complex(-kInvSqrt2)}}); }
inline Ket r() { return Ket(1, CVector{{Complex(kInvSqrt2), Complex(0, kInvSqrt2)}}); }
inline Ket l() { return Ket(1, CVector{{Complex(0, kInvSqrt2), Complex(kInvSqrt2)}}); }

inline Ket from_letter(char c) {
  switch (c) {
    case 'h': return h();
    case 'v': return v();
    case 'p': return p();
    case 'm': return m();
    case 'r': return r();
    case 'l': return l();
    default: throw std::invalid_argument(std::string("unknown polarization letter '") + c + "'");
  }
}

/// Normalized alpha(|x> + |y>) with |y> phased so that <x|y> is real and
/// positive: the Bloch-sphere midpoint of x and y, independent of the global
/// phases the two inputs happen to carry.
inline Ket elliptical(const Ket& x, const Ket& y) {
  if (x.n_photons() != 1 || y.n_photons() != 1) {
    throw std::invalid_argument("elliptical: single-photon states required");
  }
  const Complex ov = inner(x, y);
  if (std::abs(ov) < 1e-12) throw std::invalid_argument("elliptical: orthogonal inputs have no midpoint");
  const Complex phase = std::conj(ov) / std::abs(ov);
  return Ket(1, x.amplitudes() + phase * y.amplitudes()).normalized();
}
}  // namespace pol

/// Bell states over (photon 0, photon 1) with real coefficients +-1/sqrt2.
inline Ket bell_state(BellKind kind) {
  CVector a = CVector::Zero(4);
  switch (kind) {
    case BellKind::PhiPlus: a << kInvSqrt2, 0, 0, kInvSqrt2; break;
    case BellKind::PhiMinus: a << kInvSqrt2, 0, 0, -kInvSqrt2; break;
    case BellKind::PsiPlus: a << 0, kInvSqrt2, kInvSqrt2, 0; break;
    case BellKind::PsiMinus: a << 0, kInvSqrt2, -kInvSqrt2, 0; break;
  }
  return Ket(2, std::move(a));
}

/// Kronecker product, first state's photons first.
inline Ket tensor(const Ket& a, const Ket& b) {
  const Eigen::Index nb = b.dim();
  CVector out(a.dim() * nb);
  for (Eigen::Index i = 0; i < a.dim(); ++i) out.segment(i * nb, nb) = a[i] * b.amplitudes();
  return Ket(a.n_photons() + b.n_photons(), std::move(out));
}

inline Ket tensor(std::span<const Ket> states) {
  if (states.empty()) throw std::invalid_argument("tensor: empty state list");
  Ket out = states.front();
  for (std::size_t i = 1; i < states.size(); ++i) out = tensor(out, states[i]);
  return out;
}

inline Ket tensor(std::initializer_list<Ket> states) {
  return tensor(std::span<const Ket>(states.begin(), states.size()));
}

// ----------------------------------------------------------------------------
// Jones operators

/// Half-wave plate at angle theta: [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
inline JonesOperator hwp(double theta) {
  const double c = std::cos(2.0 * theta);
  const double s = std::sin(2.0 * theta);
  JonesOperator m;
  m << c, s, s, -c;
  return m;
}

/// diag(1, e^{i phi})
inline JonesOperator phase_plate(double phi) {
  JonesOperator m;
  m << 1.0, 0.0, 0.0, std::polar(1.0, phi);
  return m;
}

inline JonesOperator pauli_x() {
  JonesOperator m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline JonesOperator pauli_y() {
  JonesOperator m;
  m << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  return m;
}

inline JonesOperator pauli_z() {
  JonesOperator m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

inline bool is_unitary(const JonesOperator& op, double tol = 1e-10) {
  return (op.adjoint() * op - JonesOperator::Identity()).cwiseAbs().maxCoeff() <= tol;
}

/// Applies op to one photon, identity on the rest.
inline Ket apply_single(const JonesOperator& op, int photon, const Ket& state) {
  const int n = state.n_photons();
  if (photon < 0 || photon >= n) {
    throw std::out_of_range("apply_single: photon index " + std::to_string(photon) + " outside [0, " +
                            std::to_string(n) + ")");
  }
  const std::size_t mask = std::size_t{1} << detail::bit_of(photon, n);
  CVector out = state.amplitudes();
  for (Eigen::Index i = 0; i < state.dim(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (ui & mask) continue;
    const auto j = static_cast<Eigen::Index>(ui | mask);
    const Complex a0 = state[i];
    const Complex a1 = state[j];
    out(i) = op(0, 0) * a0 + op(0, 1) * a1;
    out(j) = op(1, 0) * a0 + op(1, 1) * a1;
  }
  return Ket(n, std::move(out));
}

// ----------------------------------------------------------------------------
// Density matrices

/// Hermitian, trace-one operator on n photons. Positivity is not enforced
/// here because linear-inversion tomography can legitimately produce
/// slightly negative eigenvalues; use is_physical() to check.
class DensityMatrix {
 public:
  static DensityMatrix from_ket(const Ket& ket) {
    const Ket k = ket.normalized();
    return DensityMatrix(k.n_photons(), k.amplitudes() * k.amplitudes().adjoint());
  }

  /// Validates Hermiticity and unit trace (both within 1e-10) and symmetrizes.
  static DensityMatrix from_matrix(int n_photons, const CMatrix& m) {
    const auto d = static_cast<Eigen::Index>(detail::dim_for(n_photons));
    if (m.rows() != d || m.cols() != d) {
      throw std::invalid_argument("density matrix must be " + std::to_string(d) + "x" + std::to_string(d));
    }
    if (!detail::all_finite(m)) throw std::invalid_argument("density matrix has non-finite entry");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("density matrix is not Hermitian");
    }
    if (std::abs(m.trace() - Complex(1.0)) > 1e-10) {
      throw std::invalid_argument("density matrix trace is not 1");
    }
    return DensityMatrix(n_photons, 0.5 * (m + m.adjoint()));
  }

  static DensityMatrix maximally_mixed(int n_photons) {
    const auto d = static_cast<Eigen::Index>(detail::dim_for(n_photons));
    return DensityMatrix(n_photons, CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  /// sum_i w_i |k_i><k_i|, weights normalized to one.
  static DensityMatrix mixture(std::span<const Ket> kets, std::span<const double> weights) {
    if (kets.empty() || kets.size() != weights.size()) {
      throw std::invalid_argument("mixture: need one weight per ket");
    }
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("mixture: negative weight");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("mixture: weights sum to zero");
    const int n = kets.front().n_photons();
    const auto d = kets.front().dim();
    CMatrix m = CMatrix::Zero(d, d);
    for (std::size_t i = 0; i < kets.size(); ++i) {
      const Ket k = kets[i].normalized();
      if (k.n_photons() != n) throw std::invalid_argument("mixture: photon count mismatch");
      m += (weights[i] / total) * k.amplitudes() * k.amplitudes().adjoint();
    }
    return DensityMatrix(n, m);
  }

  int n_photons() const { return n_; }
  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }
  Complex trace() const { return m_.trace(); }

  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  bool is_physical(double tol = kPhysicalEigenTolerance) const { return eigenvalues()(0) >= -tol; }

  /// (1 - weight) * this + weight * other
  DensityMatrix mixed_with(const DensityMatrix& other, double weight) const {
    if (other.n_ != n_) throw std::invalid_argument("mixed_with: photon count mismatch");
    if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("mixed_with: weight outside [0, 1]");
    return DensityMatrix(n_, (1.0 - weight) * m_ + weight * other.m_);
  }

 private:
  DensityMatrix(int n, CMatrix m) : n_(n), m_(std::move(m)) {}
  int n_;
  CMatrix m_;
};

/// Clips negative eigenvalues to zero and renormalizes.
inline DensityMatrix nearest_physical(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix());
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  const double s = w.sum();
  if (s <= 0.0) return DensityMatrix::maximally_mixed(rho.n_photons());
  w /= s;
  const CMatrix m = es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  return DensityMatrix::from_matrix(rho.n_photons(), 0.5 * (m + m.adjoint()));
}

/// |<proj|psi>|^2 for a normalized projector ket.
inline double born_probability(const Ket& projector, const Ket& state) {
  if (projector.n_photons() != state.n_photons()) {
    throw std::invalid_argument("born_probability: photon count mismatch");
  }
  return std::norm(inner(projector, state));
}

/// <proj|rho|proj>
inline double born_probability(const Ket& projector, const DensityMatrix& rho) {
  if (projector.n_photons() != rho.n_photons()) {
    throw std::invalid_argument("born_probability: photon count mismatch");
  }
  const CVector& a = projector.amplitudes();
  return a.dot(rho.matrix() * a).real();
}

/// Pure-target fidelity <target|rho|target>.
inline double fidelity(const DensityMatrix& rho, const Ket& target) {
  if (rho.n_photons() != target.n_photons()) throw std::invalid_argument("fidelity: dimension mismatch");
  return born_probability(target.normalized(), rho);
}

namespace detail {
inline CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace detail

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 between two mixed states,
/// evaluated as the squared nuclear norm of sqrt(a) sqrt(b). Taking singular
/// values avoids square roots of round-off eigenvalues when a state is pure.
/// Negative eigenvalues of either input are clipped first.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.n_photons() != b.n_photons()) throw std::invalid_argument("fidelity: dimension mismatch");
  const CMatrix prod = detail::psd_sqrt(a.matrix()) * detail::psd_sqrt(b.matrix());
  const double t = Eigen::JacobiSVD<CMatrix>(prod).singularValues().sum();
  return std::clamp(t * t, 0.0, 1.0);
}

/// Wootters concurrence of a two-photon state, clamped to [0, 1].
inline double concurrence(const DensityMatrix& rho) {
  if (rho.n_photons() != 2) throw std::invalid_argument("concurrence: two-photon state required");
  Eigen::Matrix4cd yy;
  yy.setZero();
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const CMatrix flipped = yy * rho.matrix().conjugate() * yy;
  const CMatrix s = detail::psd_sqrt(rho.matrix());
  const CMatrix r = s * flipped * s;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()), Eigen::EigenvaluesOnly);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(lam.data(), lam.data() + lam.size(), std::greater<>());
  return std::clamp(lam(0) - lam(1) - lam(2) - lam(3), 0.0, 1.0);
}

/// Reduced state on the photons in `keep` (kept in ascending photon order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
  const int n = rho.n_photons();
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw std::invalid_argument("partial_trace: duplicate photon index in keep set");
  }
  if (kept.front() < 0 || kept.back() >= n) {
    throw std::invalid_argument("partial_trace: photon index outside [0, " + std::to_string(n) + ")");
  }
  const int nk = static_cast<int>(kept.size());
  std::size_t keep_mask = 0;
  for (int p : kept) keep_mask |= std::size_t{1} << detail::bit_of(p, n);

  auto reduced_index = [&](std::size_t full) {
    std::size_t r = 0;
    for (int p : kept) r = (r << 1) | ((full >> detail::bit_of(p, n)) & 1U);
    return static_cast<Eigen::Index>(r);
  };

  const auto dk = static_cast<Eigen::Index>(detail::dim_for(nk));
  CMatrix out = CMatrix::Zero(dk, dk);
  const auto d = static_cast<std::size_t>(rho.dim());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if ((i & ~keep_mask) != (j & ~keep_mask)) continue;
      out(reduced_index(i), reduced_index(j)) += rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return DensityMatrix::from_matrix(nk, out);
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<int> keep) {
  return partial_trace(rho, std::span<const int>(keep.begin(), keep.size()));
}

}  // namespace swapsim
