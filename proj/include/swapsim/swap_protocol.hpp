// swap_protocol.hpp - two time-separated photon pairs, the delay line, and
// the post-selected Bell projection of the two middle photons.
//
// Photon indices 0..3 are photons 1..4 in order of creation: photons 1, 2
// come from the first pump pulse and 3, 4 from the next one. Photons 1 and 3
// travel in spatial mode a, photons 2 and 4 in mode b.

#pragma once

#include "swapsim/state_algebra.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace swapsim {

enum class SpatialMode { A, B };

/// Spatial mode plus time slot in units of the laser period.
struct ModeLabel {
  SpatialMode spatial = SpatialMode::A;
  int time_slot = 0;

  friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
};

inline std::string to_string(const ModeLabel& label) {
  return std::string(label.spatial == SpatialMode::A ? "a" : "b") + "@" + std::to_string(label.time_slot);
}

using FourLabels = std::array<ModeLabel, 4>;

inline constexpr FourLabels kPreDelayLabels = {
    ModeLabel{SpatialMode::A, 0}, ModeLabel{SpatialMode::B, 0},
    ModeLabel{SpatialMode::A, 1}, ModeLabel{SpatialMode::B, 1}};

inline constexpr FourLabels kPostDelayLabels = {
    ModeLabel{SpatialMode::A, 0}, ModeLabel{SpatialMode::B, 1},
    ModeLabel{SpatialMode::A, 1}, ModeLabel{SpatialMode::B, 2}};

/// Four-photon polarization ket with a (spatial, time) label per photon.
class LabeledFourPhotonState {
 public:
  LabeledFourPhotonState(Ket ket, const FourLabels& labels) : ket_(std::move(ket)), labels_(labels) {
    if (ket_.n_photons() != 4) throw std::invalid_argument("labeled state needs exactly 4 photons");
    for (std::size_t i = 0; i < 4; ++i) {
      if (labels_[i].time_slot < 0 || labels_[i].time_slot > 2) {
        throw std::invalid_argument("time slot of photon " + std::to_string(i + 1) + " outside {0, 1, 2}");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (labels_[i] == labels_[j]) throw std::invalid_argument("duplicate mode label " + to_string(labels_[i]));
      }
    }
  }

  const Ket& ket() const { return ket_; }
  const FourLabels& labels() const { return labels_; }
  bool is_pre_delay() const { return labels_ == kPreDelayLabels; }
  bool is_post_delay() const { return labels_ == kPostDelayLabels; }

 private:
  Ket ket_;
  FourLabels labels_;
};

/// (|hv> + e^{i phase}|vh>)/sqrt2; phase = pi gives psi-.
inline Ket source_pair(double phase) {
  CVector a = CVector::Zero(4);
  a(1) = kInvSqrt2;
  a(2) = std::polar(kInvSqrt2, phase);
  return Ket(2, std::move(a));
}

/// Two source pairs from consecutive pulses, before any delay.
inline LabeledFourPhotonState build_two_pair_state(double first_pair_phase = std::numbers::pi,
                                                   double second_pair_phase = std::numbers::pi) {
  return {tensor(source_pair(first_pair_phase), source_pair(second_pair_phase)), kPreDelayLabels};
}

/// Delays both mode-b photons by one slot. Amplitudes are untouched.
inline LabeledFourPhotonState apply_delay(const LabeledFourPhotonState& state) {
  if (!state.is_pre_delay()) throw std::logic_error("apply_delay: state is not in the pre-delay configuration");
  FourLabels shifted = state.labels();
  for (ModeLabel& l : shifted) {
    if (l.spatial == SpatialMode::B) ++l.time_slot;
  }
  return {state.ket(), shifted};
}

// Outer pair (photons 1, 4) and middle pair (photons 2, 3), each in photon order.
inline constexpr std::array<int, 2> kOuterPhotons = {0, 3};
inline constexpr std::array<int, 2> kMiddlePhotons = {1, 2};

namespace detail {

inline void require_post_delay(const LabeledFourPhotonState& state, const char* who) {
  if (!state.is_post_delay()) {
    throw std::invalid_argument(std::string(who) + ": expected post-delay labels (a@0, b@1, a@1, b@2)");
  }
}

/// Reshapes a four-photon ket into psi[outer][middle], both two-photon indices.
inline Eigen::Matrix4cd outer_middle_matrix(const Ket& ket) {
  Eigen::Matrix4cd out;
  for (int idx = 0; idx < 16; ++idx) {
    const int b1 = (idx >> 3) & 1, b2 = (idx >> 2) & 1, b3 = (idx >> 1) & 1, b4 = idx & 1;
    out((b1 << 1) | b4, (b2 << 1) | b3) = ket[idx];
  }
  return out;
}

}  // namespace detail

/// Coefficients of a four-photon state in Bell(1,4) x Bell(2,3).
struct BellDecomposition {
  /// coefficients[outer][middle], indexed in kAllBellKinds order.
  std::array<std::array<Complex, 4>, 4> coefficients{};

  Complex coefficient(BellKind outer, BellKind middle) const {
    return coefficients[static_cast<std::size_t>(outer)][static_cast<std::size_t>(middle)];
  }
  /// Matched term Bell_k(1,4) Bell_k(2,3).
  Complex matched(BellKind kind) const { return coefficient(kind, kind); }

  double max_cross_term() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        if (i != j) worst = std::max(worst, std::abs(coefficients[i][j]));
      }
    }
    return worst;
  }

  double squared_sum() const {
    double s = 0.0;
    for (const auto& row : coefficients) {
      for (Complex c : row) s += std::norm(c);
    }
    return s;
  }

  double matched_squared_sum() const {
    double s = 0.0;
    for (BellKind k : kAllBellKinds) s += std::norm(matched(k));
    return s;
  }
};

/// Projects onto all 16 Bell(1,4) x Bell(2,3) products.
inline BellDecomposition bell_decompose(const LabeledFourPhotonState& state) {
  detail::require_post_delay(state, "bell_decompose");
  const Eigen::Matrix4cd psi = detail::outer_middle_matrix(state.ket());
  BellDecomposition out;
  for (std::size_t i = 0; i < 4; ++i) {
    const CVector outer = bell_state(kAllBellKinds[i]).amplitudes();
    for (std::size_t j = 0; j < 4; ++j) {
      const CVector middle = bell_state(kAllBellKinds[j]).amplitudes();
      out.coefficients[i][j] = outer.dot(psi * middle.conjugate());
    }
  }
  return out;
}

/// Rebuilds the four-photon ket from a decomposition (brute-force inverse).
inline Ket bell_recompose(const BellDecomposition& d) {
  Eigen::Matrix4cd psi = Eigen::Matrix4cd::Zero();
  for (std::size_t i = 0; i < 4; ++i) {
    const CVector outer = bell_state(kAllBellKinds[i]).amplitudes();
    for (std::size_t j = 0; j < 4; ++j) {
      const CVector middle = bell_state(kAllBellKinds[j]).amplitudes();
      psi += d.coefficients[i][j] * outer * middle.transpose();
    }
  }
  CVector amps(16);
  for (int idx = 0; idx < 16; ++idx) {
    const int b1 = (idx >> 3) & 1, b2 = (idx >> 2) & 1, b3 = (idx >> 1) & 1, b4 = idx & 1;
    amps(idx) = psi((b1 << 1) | b4, (b2 << 1) | b3);
  }
  return Ket(4, std::move(amps));
}

/// Imperfections of the middle-photon projection.
///   overlap     - mode overlap of the two middle photons at the PBS
///                 (1 = indistinguishable, 0 = fully distinguishable)
///   white_noise - weight of I/4 mixed into the conditional outer state
struct DistinguishabilityModel {
  double overlap = 1.0;
  double white_noise = 0.0;

  void validate() const {
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw std::invalid_argument("overlap must lie in [0, 1]");
    if (!(white_noise >= 0.0 && white_noise <= 1.0)) throw std::invalid_argument("white_noise must lie in [0, 1]");
  }
};

struct BellProjectionResult {
  BellKind outcome;
  double probability;
  DensityMatrix conditional_state;
};

/// Effective middle-photon measurement operator for a phi outcome:
/// v |phi><phi| + (1 - v)(|hh><hh| + |vv><vv|)/2.
inline Eigen::Matrix4cd middle_measurement(BellKind outcome, double overlap) {
  if (outcome != BellKind::PhiPlus && outcome != BellKind::PhiMinus) {
    throw std::invalid_argument("middle projection only resolves phi+ and phi-");
  }
  const CVector phi = bell_state(outcome).amplitudes();
  Eigen::Matrix4cd incoherent = Eigen::Matrix4cd::Zero();
  incoherent(0, 0) = 0.5;
  incoherent(3, 3) = 0.5;
  return overlap * (phi * phi.adjoint()) + (1.0 - overlap) * incoherent;
}

/// Post-selected projection of photons 2, 3; returns the outcome probability
/// relative to the ideal four-photon event and the normalized state of 1, 4.
inline BellProjectionResult project_middle(const LabeledFourPhotonState& state, BellKind outcome,
                                           const DistinguishabilityModel& model = {}) {
  detail::require_post_delay(state, "project_middle");
  model.validate();
  const Eigen::Matrix4cd meas = middle_measurement(outcome, model.overlap);
  const Eigen::Matrix4cd psi = detail::outer_middle_matrix(state.ket());
  // rho[o, o'] = sum_{m, m'} M[m, m'] psi[o, m'] conj(psi[o', m])
  const Eigen::Matrix4cd unnormalized = psi * meas.transpose() * psi.adjoint();
  const double probability = unnormalized.trace().real();
  if (probability <= 1e-15) {
    throw std::domain_error("project_middle: outcome " + std::string(to_string(outcome)) + " has zero probability");
  }
  const CMatrix normalized = unnormalized / probability;
  DensityMatrix rho = DensityMatrix::from_matrix(2, 0.5 * (normalized + normalized.adjoint()));
  if (model.white_noise > 0.0) rho = rho.mixed_with(DensityMatrix::maximally_mixed(2), model.white_noise);
  return {outcome, probability, std::move(rho)};
}

/// Closed-form fidelity of the conditional state to the matching phi state.
inline double model_fidelity(const DistinguishabilityModel& model) {
  return (1.0 - model.white_noise) * 0.5 * (1.0 + model.overlap) + 0.25 * model.white_noise;
}

}  // namespace swapsim
