// tomography.hpp - two-photon state tomography of photons 1 and 4 driven
// only by the shared waveplates (theta_a, theta_b) and the source phase phi.
//
// Because photons 2, 3 are always analysed in h/v, rotating the shared
// optics acts on photons 1 and 4 through the entanglement:
//
//   M1(ta, phi, tb) = R(ta) diag(1, e^{i phi}) X R(tb) X
//   M4(ta, phi, tb) = R(tb) X diag(1, e^{i phi}) R(ta) X
//
// with R the half-wave-plate matrix and X the Pauli flip that comes from the
// anti-correlated source pairs. A detector outcome (x, y) on photons 1, 4
// then projects onto (M1^dagger |x>) (x) (M4^dagger |y>).

#pragma once

#include "swapsim/state_algebra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace swapsim {

// ----------------------------------------------------------------------------
// Measurement settings

struct WaveplateSetting {
  int id = 0;
  double theta_a = 0.0;  // radians
  double phi = 0.0;      // radians
  double theta_b = 0.0;  // radians
};

inline JonesOperator m1_operator(double theta_a, double phi, double theta_b) {
  return hwp(theta_a) * phase_plate(phi) * pauli_x() * hwp(theta_b) * pauli_x();
}

inline JonesOperator m4_operator(double theta_a, double phi, double theta_b) {
  return hwp(theta_b) * pauli_x() * phase_plate(phi) * hwp(theta_a) * pauli_x();
}

inline JonesOperator m1_operator(const WaveplateSetting& s) { return m1_operator(s.theta_a, s.phi, s.theta_b); }
inline JonesOperator m4_operator(const WaveplateSetting& s) { return m4_operator(s.theta_a, s.phi, s.theta_b); }

inline constexpr int kSettingCount = 9;
inline constexpr int kOutcomesPerSetting = 4;
inline constexpr int kCatalogSize = 16;

/// The nine angle triples used for complete tomography of photons 1, 4.
inline std::array<WaveplateSetting, kSettingCount> tomography_settings() {
  return {{
      {1, 0.0, 0.0, 0.0},
      {2, degrees(22.5), 0.0, 0.0},
      {3, degrees(22.5), degrees(90.0), 0.0},
      {4, degrees(22.5), degrees(90.0), degrees(-22.5)},
      {5, 0.0, degrees(90.0), degrees(22.5)},
      {6, 0.0, degrees(90.0), degrees(11.25)},
      {7, degrees(11.25), degrees(90.0), 0.0},
      {8, degrees(11.25), degrees(90.0), degrees(45.0)},
      {9, degrees(45.0), degrees(90.0), degrees(11.25)},
  }};
}

inline WaveplateSetting tomography_setting(int id) {
  if (id < 1 || id > kSettingCount) throw std::out_of_range("setting id " + std::to_string(id) + " outside 1..9");
  return tomography_settings()[static_cast<std::size_t>(id - 1)];
}

/// Detector outcome index: photon-1 bit first, so 0 = hh, 1 = hv, 2 = vh, 3 = vv.
inline std::string_view outcome_label(int outcome) {
  static constexpr std::array<std::string_view, 4> kLabels = {"hh", "hv", "vh", "vv"};
  if (outcome < 0 || outcome > 3) throw std::out_of_range("detector outcome index outside 0..3");
  return kLabels[static_cast<std::size_t>(outcome)];
}

inline int outcome_from_label(std::string_view label) {
  for (int i = 0; i < 4; ++i) {
    if (outcome_label(i) == label) return i;
  }
  throw std::invalid_argument("unknown detector outcome '" + std::string(label) + "'");
}

struct EffectiveProjector {
  int setting_id = 0;
  int outcome = 0;  // see outcome_label
  Ket photon1;
  Ket photon4;
  std::string label;  // tabulated name for catalog entries, detector label otherwise

  Ket joint() const { return tensor(photon1, photon4); }
};

namespace detail {

// Global phase fixed so the first non-negligible amplitude is real positive.
inline Ket canonical_phase(const Ket& k) {
  const Ket n = k.normalized();
  for (Eigen::Index i = 0; i < n.dim(); ++i) {
    if (std::abs(n[i]) > 1e-9) return Ket(n.n_photons(), n.amplitudes() * (std::abs(n[i]) / n[i]));
  }
  return n;
}

}  // namespace detail

/// The four product states one setting projects onto.
inline std::array<EffectiveProjector, 4> effective_projectors(const WaveplateSetting& setting) {
  const JonesOperator m1 = m1_operator(setting).adjoint();
  const JonesOperator m4 = m4_operator(setting).adjoint();
  const std::array<Eigen::Vector2cd, 2> hv = {Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1)};
  auto make = [&](int o) {
    const auto x = static_cast<std::size_t>(o / 2);
    const auto y = static_cast<std::size_t>(o % 2);
    return EffectiveProjector{setting.id, o, detail::canonical_phase(Ket(1, m1 * hv[x])),
                              detail::canonical_phase(Ket(1, m4 * hv[y])), std::string(outcome_label(o))};
  };
  return {make(0), make(1), make(2), make(3)};
}

// ----------------------------------------------------------------------------
// The sixteen listed polarization states
//
// The table names each two-photon state as "<photon 4><photon 1>" and uses
// the opposite circular handedness to the M-operator convention above, so a
// listed letter maps onto the complex conjugate of the pol:: state. An
// elliptical token e_xy is the Bloch midpoint of x and y.

struct ListedState {
  int setting_id;
  std::string_view first;   // photon 4
  std::string_view second;  // photon 1

  std::string label() const {
    if (first.size() == 1) return std::string(first) + std::string(second);
    return std::string(first) + " " + std::string(second);
  }
};

inline constexpr std::array<ListedState, kCatalogSize> kListedProjections = {{
    {1, "h", "h"}, {1, "h", "v"}, {1, "v", "h"}, {1, "v", "v"},
    {2, "p", "p"}, {2, "m", "m"}, {2, "m", "p"},
    {3, "p", "l"}, {3, "m", "l"},
    {4, "l", "l"}, {4, "l", "r"},
    {5, "r", "m"},
    {6, "e_hr", "e_hm"},
    {7, "e_hm", "e_hl"},
    {8, "e_vp", "e_vl"},
    {9, "e_vr", "e_vp"},
}};

/// Single-photon state named by a table token ("h".."l" or "e_xy").
inline Ket table_token_state(std::string_view token) {
  Ket k = [&] {
    if (token.size() == 1) return pol::from_letter(token[0]);
    if (token.size() == 4 && token.substr(0, 2) == "e_") {
      return pol::elliptical(pol::from_letter(token[2]), pol::from_letter(token[3]));
    }
    throw std::invalid_argument("bad table token '" + std::string(token) + "'");
  }();
  return Ket(1, k.amplitudes().conjugate());
}

/// Two-photon ket (photon 1 first) for a listed table entry.
inline Ket listed_state_ket(const ListedState& s) {
  return tensor(table_token_state(s.second), table_token_state(s.first));
}

/// Rank and 2-norm condition number of the 16x16 real sensing matrix.
struct SensingDiagnostics {
  int rank = 0;
  double condition_number = std::numeric_limits<double>::infinity();
};

namespace detail {

inline const std::array<Eigen::Matrix4cd, 16>& two_photon_paulis() {
  static const std::array<Eigen::Matrix4cd, 16> paulis = [] {
    const std::array<JonesOperator, 4> s = {JonesOperator::Identity(), pauli_x(), pauli_y(), pauli_z()};
    std::array<Eigen::Matrix4cd, 16> out;
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        Eigen::Matrix4cd k;
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = s[a](i, j) * s[b];
        }
        out[4 * a + b] = k;
      }
    }
    return out;
  }();
  return paulis;
}

}  // namespace detail

/// B[i][k] = <psi_i| sigma_k |psi_i> / 4, so that p = B r for
/// rho = (1/4) sum_k r_k sigma_k.
inline Eigen::Matrix<double, 16, 16> sensing_matrix(std::span<const EffectiveProjector> catalog) {
  if (catalog.size() != kCatalogSize) throw std::invalid_argument("sensing matrix needs 16 projectors");
  Eigen::Matrix<double, 16, 16> b;
  const auto& paulis = detail::two_photon_paulis();
  for (std::size_t i = 0; i < kCatalogSize; ++i) {
    const CVector psi = catalog[i].joint().amplitudes();
    for (std::size_t k = 0; k < 16; ++k) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 0.25 * psi.dot(paulis[k] * psi).real();
  }
  return b;
}

inline SensingDiagnostics sensing_diagnostics(std::span<const EffectiveProjector> catalog) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 16, 16>> svd(sensing_matrix(catalog));
  const auto& sv = svd.singularValues();
  SensingDiagnostics d;
  const double cutoff = sv(0) * 1e-10;
  d.rank = static_cast<int>((sv.array() > cutoff).count());
  if (sv(15) > 0.0) d.condition_number = sv(0) / sv(15);
  return d;
}

/// Sixteen projectors, one per listed state, taken from the effective
/// projectors of the listed row. Throws if a listed state has no match or the
/// resulting set is not informationally complete.
inline std::vector<EffectiveProjector> projection_catalog() {
  std::vector<EffectiveProjector> catalog;
  catalog.reserve(kCatalogSize);
  for (const ListedState& listed : kListedProjections) {
    const Ket want = listed_state_ket(listed);
    const auto row = effective_projectors(tomography_setting(listed.setting_id));
    const auto best = std::max_element(row.begin(), row.end(), [&](const auto& a, const auto& b) {
      return overlap_modulus(want, a.joint()) < overlap_modulus(want, b.joint());
    });
    if (overlap_modulus(want, best->joint()) < 1.0 - 1e-9) {
      throw std::logic_error("listed state '" + listed.label() + "' of setting " +
                             std::to_string(listed.setting_id) + " matches no effective projector");
    }
    const bool duplicate = std::any_of(catalog.begin(), catalog.end(), [&](const EffectiveProjector& e) {
      return overlap_modulus(e.joint(), best->joint()) > 1.0 - 1e-9;
    });
    if (duplicate) continue;
    EffectiveProjector p = *best;
    p.label = listed.label();
    catalog.push_back(std::move(p));
  }
  if (catalog.size() != kCatalogSize || sensing_diagnostics(catalog).rank != kCatalogSize) {
    throw std::logic_error("projection catalog is not informationally complete");
  }
  return catalog;
}

inline const std::vector<EffectiveProjector>& default_catalog() {
  static const std::vector<EffectiveProjector> catalog = projection_catalog();
  return catalog;
}

/// Born probabilities <proj_i|rho|proj_i> for each catalog entry.
inline std::vector<double> predicted_probabilities(const DensityMatrix& rho,
                                                   std::span<const EffectiveProjector> catalog) {
  if (rho.n_photons() != 2) throw std::invalid_argument("predicted_probabilities: two-photon state required");
  std::vector<double> out;
  out.reserve(catalog.size());
  for (const auto& p : catalog) out.push_back(born_probability(p.joint(), rho));
  return out;
}

/// Outcome probabilities of one setting, normalized over its four outcomes.
inline std::array<double, 4> setting_probabilities(const DensityMatrix& rho, const WaveplateSetting& setting) {
  if (rho.n_photons() != 2) throw std::invalid_argument("setting_probabilities: two-photon state required");
  std::array<double, 4> p{};
  const auto projs = effective_projectors(setting);
  double total = 0.0;
  for (std::size_t o = 0; o < 4; ++o) {
    p[o] = std::max(0.0, born_probability(projs[o].joint(), rho));
    total += p[o];
  }
  for (double& x : p) x /= total;
  return p;
}

// ----------------------------------------------------------------------------
// Count tables

/// Fourfold coincidences for every (setting, outcome) cell, conditioned on
/// one middle-photon Bell outcome.
struct CountTable {
  BellKind conditioning = BellKind::PhiPlus;
  double flux_hz = 12.0;
  double integration_s = 360.0;
  std::uint64_t seed = 0;
  std::array<std::array<std::uint64_t, 4>, kSettingCount> counts{};

  std::uint64_t at(int setting_id, int outcome) const {
    return counts.at(static_cast<std::size_t>(setting_id - 1)).at(static_cast<std::size_t>(outcome));
  }
  std::uint64_t& at(int setting_id, int outcome) {
    return counts.at(static_cast<std::size_t>(setting_id - 1)).at(static_cast<std::size_t>(outcome));
  }

  std::uint64_t setting_total(int setting_id) const {
    const auto& row = counts.at(static_cast<std::size_t>(setting_id - 1));
    return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (int s = 1; s <= kSettingCount; ++s) t += setting_total(s);
    return t;
  }

  void validate() const {
    if (!(flux_hz > 0.0) || !std::isfinite(flux_hz)) throw std::invalid_argument("count table flux must be positive");
    if (!(integration_s > 0.0) || !std::isfinite(integration_s)) {
      throw std::invalid_argument("count table integration time must be positive");
    }
  }

  friend bool operator==(const CountTable&, const CountTable&) = default;
};

/// Poisson counts with mean flux * integration * p(outcome | setting).
inline CountTable sample_counts(const DensityMatrix& rho, double flux_hz, double integration_s, std::uint64_t seed,
                                BellKind conditioning = BellKind::PhiPlus) {
  CountTable table;
  table.conditioning = conditioning;
  table.flux_hz = flux_hz;
  table.integration_s = integration_s;
  table.seed = seed;
  table.validate();
  std::mt19937_64 rng(seed);
  const double per_setting = flux_hz * integration_s;
  for (const auto& setting : tomography_settings()) {
    const auto p = setting_probabilities(rho, setting);
    for (int o = 0; o < 4; ++o) {
      const double mean = per_setting * p[static_cast<std::size_t>(o)];
      std::uint64_t n = 0;
      if (mean > 0.0) {
        std::poisson_distribution<long long> dist(mean);
        n = static_cast<std::uint64_t>(dist(rng));
      }
      table.at(setting.id, o) = n;
    }
  }
  return table;
}

/// Counts rounded from expected values (no shot noise).
inline CountTable expected_counts(const DensityMatrix& rho, double counts_per_setting,
                                  BellKind conditioning = BellKind::PhiPlus) {
  CountTable table;
  table.conditioning = conditioning;
  table.flux_hz = counts_per_setting;
  table.integration_s = 1.0;
  for (const auto& setting : tomography_settings()) {
    const auto p = setting_probabilities(rho, setting);
    for (int o = 0; o < 4; ++o) {
      table.at(setting.id, o) = static_cast<std::uint64_t>(std::llround(counts_per_setting * p[static_cast<std::size_t>(o)]));
    }
  }
  return table;
}

// ----------------------------------------------------------------------------
// Reconstruction

enum class ReconstructionMethod { LinearInversion, MaxLikelihood };

inline std::string_view to_string(ReconstructionMethod m) {
  return m == ReconstructionMethod::LinearInversion ? "li" : "ml";
}

inline ReconstructionMethod method_from_string(std::string_view s) {
  if (s == "li") return ReconstructionMethod::LinearInversion;
  if (s == "ml") return ReconstructionMethod::MaxLikelihood;
  throw std::invalid_argument("unknown reconstruction method '" + std::string(s) + "' (expected li or ml)");
}

/// Solves B r = p for the Pauli coefficients; exact on noiseless input.
/// The result is Hermitian and trace-one but may have negative eigenvalues.
inline DensityMatrix linear_inversion(std::span<const double> catalog_probabilities,
                                      std::span<const EffectiveProjector> catalog) {
  if (catalog_probabilities.size() != kCatalogSize) {
    throw std::invalid_argument("linear_inversion: need 16 catalog probabilities");
  }
  const Eigen::Matrix<double, 16, 16> b = sensing_matrix(catalog);
  Eigen::FullPivLU<Eigen::Matrix<double, 16, 16>> lu(b);
  if (lu.rank() < kCatalogSize) throw std::domain_error("linear_inversion: sensing matrix is singular");
  Eigen::Matrix<double, 16, 1> p;
  for (Eigen::Index i = 0; i < 16; ++i) p(i) = catalog_probabilities[static_cast<std::size_t>(i)];
  const Eigen::Matrix<double, 16, 1> r = lu.solve(p);
  if (!(std::abs(r(0)) > 1e-12)) throw std::domain_error("linear_inversion: reconstructed trace vanishes");
  const auto& paulis = detail::two_photon_paulis();
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  for (std::size_t k = 0; k < 16; ++k) m += (0.25 * r(static_cast<Eigen::Index>(k)) / r(0)) * paulis[k];
  return DensityMatrix::from_matrix(2, 0.5 * (m + m.adjoint()));
}

/// Per-setting frequencies of the catalog cells, then linear inversion.
inline DensityMatrix linear_inversion(const CountTable& counts,
                                      std::span<const EffectiveProjector> catalog = default_catalog()) {
  std::vector<double> freq;
  freq.reserve(catalog.size());
  for (const auto& p : catalog) {
    const std::uint64_t total = counts.setting_total(p.setting_id);
    if (total == 0) {
      throw std::domain_error("linear_inversion: setting " + std::to_string(p.setting_id) + " has no counts");
    }
    freq.push_back(static_cast<double>(counts.at(p.setting_id, p.outcome)) / static_cast<double>(total));
  }
  return linear_inversion(freq, catalog);
}

namespace detail {

struct MeasurementModel {
  std::array<Eigen::Vector4cd, kSettingCount * 4> kets;
};

inline const MeasurementModel& all_setting_projectors() {
  static const MeasurementModel model = [] {
    MeasurementModel m;
    for (const auto& s : tomography_settings()) {
      const auto projs = effective_projectors(s);
      for (std::size_t o = 0; o < 4; ++o) m.kets[static_cast<std::size_t>(s.id - 1) * 4 + o] = projs[o].joint().amplitudes();
    }
    return m;
  }();
  return model;
}

inline std::array<double, kSettingCount * 4> flat_counts(const CountTable& c) {
  std::array<double, kSettingCount * 4> out{};
  for (std::size_t s = 0; s < kSettingCount; ++s) {
    for (std::size_t o = 0; o < 4; ++o) out[4 * s + o] = static_cast<double>(c.counts[s][o]);
  }
  return out;
}

inline double log_likelihood(const std::array<double, kSettingCount * 4>& n, const Eigen::Matrix4cd& rho) {
  const auto& kets = all_setting_projectors().kets;
  double ll = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == 0.0) continue;
    const double p = kets[i].dot(rho * kets[i]).real();
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += n[i] * std::log(p);
  }
  return ll;
}

}  // namespace detail

/// Multinomial log-likelihood sum n_so log p_so(rho) over all 36 cells.
inline double log_likelihood(const CountTable& counts, const DensityMatrix& rho) {
  return detail::log_likelihood(detail::flat_counts(counts), rho.matrix());
}

struct MaxLikelihoodOptions {
  double tolerance = 1e-10;  // relative log-likelihood change
  int max_iterations = 10000;
  bool record_trace = false;
};

struct MaxLikelihoodFit {
  DensityMatrix rho;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> trace;  // log-likelihood after each accepted step
};

/// Maximum-likelihood estimate over rho = T^dagger T / tr(T^dagger T).
///
/// Each step moves T -> T (I + eps G), G = R / N - I, where
/// R = sum_i (n_i / p_i) |psi_i><psi_i| is the likelihood gradient. eps = 1 is
/// the classic R rho R iteration; eps is halved until the log-likelihood does
/// not decrease, so the sequence is monotone.
inline MaxLikelihoodFit max_likelihood(const CountTable& counts, const DensityMatrix& init,
                                       const MaxLikelihoodOptions& options = {}) {
  if (init.n_photons() != 2) throw std::invalid_argument("max_likelihood: two-photon initial state required");
  const auto n = detail::flat_counts(counts);
  const double total = std::accumulate(n.begin(), n.end(), 0.0);
  if (total <= 0.0) throw std::domain_error("max_likelihood: count table is empty");
  const auto& kets = detail::all_setting_projectors().kets;

  Eigen::Matrix4cd t = detail::psd_sqrt(init.matrix());
  Eigen::Matrix4cd rho = t.adjoint() * t;
  rho /= rho.trace().real();
  double ll = detail::log_likelihood(n, rho);
  if (!std::isfinite(ll)) {
    // Initial state excludes observed events; restart from the maximally mixed state.
    t = Eigen::Matrix4cd::Identity() * 0.5;
    rho = Eigen::Matrix4cd::Identity() * 0.25;
    ll = detail::log_likelihood(n, rho);
  }

  MaxLikelihoodFit fit{DensityMatrix::maximally_mixed(2), false, 0, 0.0, {}};
  if (options.record_trace) fit.trace.push_back(ll);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i] == 0.0) continue;
      const double p = kets[i].dot(rho * kets[i]).real();
      r += (n[i] / p) * (kets[i] * kets[i].adjoint());
    }
    const Eigen::Matrix4cd g = r / total - Eigen::Matrix4cd::Identity();

    double eps = 1.0;
    bool accepted = false;
    Eigen::Matrix4cd t_next;
    Eigen::Matrix4cd rho_next;
    double ll_next = ll;
    while (eps > 1e-12) {
      const Eigen::Matrix4cd a = Eigen::Matrix4cd::Identity() + eps * g;
      t_next = t * a;
      rho_next = t_next.adjoint() * t_next;
      const double tr = rho_next.trace().real();
      t_next /= std::sqrt(tr);
      rho_next /= tr;
      ll_next = detail::log_likelihood(n, rho_next);
      if (std::isfinite(ll_next) && ll_next >= ll) {
        accepted = true;
        break;
      }
      eps *= 0.5;
    }
    if (!accepted) {
      fit.converged = true;
      break;
    }
    const double gain = ll_next - ll;
    t = t_next;
    rho = 0.5 * (rho_next + rho_next.adjoint());
    ll = ll_next;
    if (options.record_trace) fit.trace.push_back(ll);
    if (gain <= options.tolerance * std::max(1.0, std::abs(ll))) {
      fit.converged = true;
      ++it;
      break;
    }
  }
  fit.rho = DensityMatrix::from_matrix(2, rho);
  fit.iterations = it;
  fit.log_likelihood = ll;
  return fit;
}

/// Linear inversion, clipped to the physical set and nudged to full rank.
inline DensityMatrix ml_initial_state(const CountTable& counts) {
  DensityMatrix li = DensityMatrix::maximally_mixed(2);
  try {
    li = nearest_physical(linear_inversion(counts));
  } catch (const std::domain_error&) {
    return li;
  }
  return li.mixed_with(DensityMatrix::maximally_mixed(2), 1e-3);
}

inline MaxLikelihoodFit max_likelihood(const CountTable& counts, const MaxLikelihoodOptions& options = {}) {
  return max_likelihood(counts, ml_initial_state(counts), options);
}

struct Reconstruction {
  DensityMatrix rho;
  bool converged = true;
  int iterations = 0;
};

inline Reconstruction reconstruct(const CountTable& counts, ReconstructionMethod method,
                                  const MaxLikelihoodOptions& options = {}) {
  if (method == ReconstructionMethod::LinearInversion) return {linear_inversion(counts), true, 0};
  MaxLikelihoodFit fit = max_likelihood(counts, options);
  return {std::move(fit.rho), fit.converged, fit.iterations};
}

// ----------------------------------------------------------------------------
// Poissonian bootstrap

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Independent stream seed for resample `index` of a bootstrap with `master` seed.
inline std::uint64_t resample_seed(std::uint64_t master, std::uint64_t index) {
  return detail::splitmix64(detail::splitmix64(master) ^ detail::splitmix64(index + 1));
}

/// Every cell redrawn as Poisson(observed count).
inline CountTable poisson_resample(const CountTable& counts, std::uint64_t seed) {
  CountTable out = counts;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& row : out.counts) {
    for (auto& c : row) {
      if (c == 0) continue;
      std::poisson_distribution<long long> dist(static_cast<double>(c));
      c = static_cast<std::uint64_t>(dist(rng));
    }
  }
  return out;
}

struct BootstrapOptions {
  int n_resamples = 100;
  std::uint64_t seed = 0;
  ReconstructionMethod method = ReconstructionMethod::MaxLikelihood;
  MaxLikelihoodOptions ml{};
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Fidelity-to-target of every resample, in resample order. The values do
/// not depend on the thread count.
inline std::vector<double> bootstrap_fidelities(const CountTable& counts, const Ket& target,
                                                const BootstrapOptions& opts) {
  if (opts.n_resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  std::vector<double> fids(static_cast<std::size_t>(opts.n_resamples));
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < fids.size(); i += stride) {
      const CountTable resampled = poisson_resample(counts, resample_seed(opts.seed, i));
      fids[i] = fidelity(reconstruct(resampled, opts.method, opts.ml).rho, target);
    }
  };
  unsigned threads = opts.threads != 0 ? opts.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(fids.size()));
  if (threads <= 1) {
    work(0, 1);
    return fids;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  pool.clear();
  return fids;
}

inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Standard deviation of the reconstructed fidelity under Poisson resampling.
inline double bootstrap_error(const CountTable& counts, const Ket& target, const BootstrapOptions& opts) {
  const auto fids = bootstrap_fidelities(counts, target, opts);
  return sample_stddev(fids);
}

inline double bootstrap_error(const CountTable& counts, const Ket& target, int n_resamples, std::uint64_t seed) {
  BootstrapOptions opts;
  opts.n_resamples = n_resamples;
  opts.seed = seed;
  return bootstrap_error(counts, target, opts);
}

struct ReconstructionResult {
  DensityMatrix rho;
  ReconstructionMethod method = ReconstructionMethod::MaxLikelihood;
  double fidelity_to_target = 0.0;
  double bootstrap_sigma = 0.0;
  int n_resamples = 0;
  bool converged = true;
  bool physical = true;
};

/// Reconstruction, fidelity to `target` and its bootstrap error in one call.
/// n_resamples = 0 skips the bootstrap.
inline ReconstructionResult analyze_counts(const CountTable& counts, const Ket& target, const BootstrapOptions& opts) {
  Reconstruction rec = reconstruct(counts, opts.method, opts.ml);
  ReconstructionResult out{rec.rho, opts.method};
  out.fidelity_to_target = fidelity(rec.rho, target);
  out.converged = rec.converged;
  out.physical = rec.rho.is_physical();
  out.n_resamples = opts.n_resamples;
  if (opts.n_resamples > 0) out.bootstrap_sigma = bootstrap_error(counts, target, opts);
  return out;
}

}  // namespace swapsim
