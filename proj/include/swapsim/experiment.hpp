// experiment.hpp - one virtual run end to end: the five-step timeline, the
// middle-photon projection, count sampling, reconstruction, bootstrap, and
// the files a run leaves behind.

#pragma once

#include "swapsim/serialization.hpp"
#include "swapsim/state_algebra.hpp"
#include "swapsim/swap_protocol.hpp"
#include "swapsim/tomography.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swapsim {

/// Invalid run configuration; the message starts with the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class OutcomeSelection { PhiPlus, PhiMinus, Both };

inline std::string_view to_string(OutcomeSelection s) {
  switch (s) {
    case OutcomeSelection::PhiPlus: return "phiplus";
    case OutcomeSelection::PhiMinus: return "phiminus";
    case OutcomeSelection::Both: return "both";
  }
  return "?";
}

inline OutcomeSelection outcome_selection_from_string(std::string_view s) {
  if (s == "phiplus") return OutcomeSelection::PhiPlus;
  if (s == "phiminus") return OutcomeSelection::PhiMinus;
  if (s == "both") return OutcomeSelection::Both;
  throw ConfigError("outcome", "expected phiplus, phiminus or both, got '" + std::string(s) + "'");
}

inline std::vector<BellKind> selected_outcomes(OutcomeSelection s) {
  switch (s) {
    case OutcomeSelection::PhiPlus: return {BellKind::PhiPlus};
    case OutcomeSelection::PhiMinus: return {BellKind::PhiMinus};
    case OutcomeSelection::Both: return {BellKind::PhiPlus, BellKind::PhiMinus};
  }
  return {};
}

struct RunConfig {
  double pair_phase_first = std::numbers::pi;
  double pair_phase_second = std::numbers::pi;
  double overlap = 1.0;
  double white_noise = 0.0;
  double flux_hz = 12.0;
  double integration_s = 360.0;
  std::uint64_t seed = 1;
  ReconstructionMethod method = ReconstructionMethod::MaxLikelihood;
  int bootstrap = 100;
  OutcomeSelection outcomes = OutcomeSelection::Both;

  void validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(pair_phase_first)) throw ConfigError("pair_phase_first", "must be finite");
    if (!finite(pair_phase_second)) throw ConfigError("pair_phase_second", "must be finite");
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap", "must lie in [0, 1]");
    if (!(white_noise >= 0.0 && white_noise <= 1.0)) throw ConfigError("white_noise", "must lie in [0, 1]");
    if (!(flux_hz > 0.0) || !finite(flux_hz)) throw ConfigError("flux_hz", "must be positive");
    if (!(integration_s > 0.0) || !finite(integration_s)) throw ConfigError("integration_s", "must be positive");
    if (bootstrap != 0 && bootstrap < 2) throw ConfigError("bootstrap", "must be 0 (disabled) or at least 2");
    if (bootstrap > 100000) throw ConfigError("bootstrap", "must not exceed 100000");
  }

  DistinguishabilityModel model() const { return {overlap, white_noise}; }
};

inline Json run_config_to_json(const RunConfig& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "run_config";
  j["pair_phase_first"] = c.pair_phase_first;
  j["pair_phase_second"] = c.pair_phase_second;
  j["overlap"] = c.overlap;
  j["white_noise"] = c.white_noise;
  j["flux_hz"] = c.flux_hz;
  j["integration_s"] = c.integration_s;
  j["seed"] = c.seed;
  j["method"] = std::string(to_string(c.method));
  j["bootstrap"] = c.bootstrap;
  j["outcomes"] = std::string(to_string(c.outcomes));
  return j;
}

/// Unknown keys are rejected; absent keys keep their defaults.
inline RunConfig run_config_from_json(const Json& j, const std::string& where = "config") {
  detail::check_header(j, "run_config", where);
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    const std::string fw = where + "." + key;
    if (key == "format_version" || key == "kind") continue;
    if (key == "pair_phase_first") {
      c.pair_phase_first = detail::as_number(v, fw);
    } else if (key == "pair_phase_second") {
      c.pair_phase_second = detail::as_number(v, fw);
    } else if (key == "overlap") {
      c.overlap = detail::as_number(v, fw);
    } else if (key == "white_noise") {
      c.white_noise = detail::as_number(v, fw);
    } else if (key == "flux_hz") {
      c.flux_hz = detail::as_number(v, fw);
    } else if (key == "integration_s") {
      c.integration_s = detail::as_number(v, fw);
    } else if (key == "seed") {
      c.seed = detail::as_count(v, fw);
    } else if (key == "method") {
      try {
        c.method = method_from_string(detail::as_string(v, fw));
      } catch (const std::invalid_argument& e) {
        detail::field_error(fw, e.what());
      }
    } else if (key == "bootstrap") {
      if (!v.is_number_integer()) detail::field_error(fw, "expected an integer");
      c.bootstrap = v.get<int>();
    } else if (key == "outcomes") {
      try {
        c.outcomes = outcome_selection_from_string(detail::as_string(v, fw));
      } catch (const std::invalid_argument&) {
        detail::field_error(fw, "expected phiplus, phiminus or both");
      }
    } else {
      detail::field_error(where, "unknown field '" + key + "'");
    }
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

// ----------------------------------------------------------------------------
// Timeline

/// Delay-line length in laser periods is folded into one slot; this is the
/// wall-clock value of one slot, used only for display.
inline constexpr double kSlotNanoseconds = 105.0;

enum class Stage { I = 1, II, III, IV, V };

inline std::string_view to_string(Stage s) {
  static constexpr std::array<std::string_view, 5> kNames = {"I", "II", "III", "IV", "V"};
  return kNames[static_cast<std::size_t>(s) - 1];
}

struct TimelineEvent {
  Stage stage;
  std::string_view description;
  int slot;         // logical time in units of the slot
  bool just_after;  // 0+ style instant right after the slot boundary

  /// Strict ordering key: slot, then the "+" instant.
  int order_key() const { return 2 * slot + (just_after ? 1 : 0); }
  std::string logical_time() const { return std::to_string(slot) + (just_after ? "+" : ""); }
};

inline std::array<TimelineEvent, 5> timeline() {
  return {{
      {Stage::I, "photons 1 and 2 created", 0, false},
      {Stage::II, "photon 1 detected", 0, true},
      {Stage::III, "photons 3 and 4 created", 1, false},
      {Stage::IV, "photons 2 and 3 projected onto a Bell state", 1, true},
      {Stage::V, "photon 4 detected", 2, false},
  }};
}

inline Json timeline_to_json() {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "timeline";
  j["slot_ns"] = kSlotNanoseconds;
  Json events = Json::array();
  for (const auto& e : timeline()) {
    Json ev;
    ev["stage"] = std::string(to_string(e.stage));
    ev["description"] = std::string(e.description);
    ev["logical_time"] = e.logical_time();
    ev["display_time_ns"] = e.slot * kSlotNanoseconds;
    events.push_back(ev);
  }
  j["events"] = events;
  return j;
}

// ----------------------------------------------------------------------------
// Decomposition self-check

struct DecomposeReport {
  BellDecomposition decomposition;
  double max_cross_term = 0.0;
  double recompose_error = 0.0;
  double matched_weight = 0.0;
  bool passed = false;
};

inline constexpr double kDecomposeTolerance = 1e-12;

/// Checks that a delayed two-pair state is a sum of matched Bell x Bell terms.
inline DecomposeReport decompose_check(const LabeledFourPhotonState& delayed) {
  DecomposeReport r{bell_decompose(delayed)};
  r.max_cross_term = r.decomposition.max_cross_term();
  r.matched_weight = r.decomposition.matched_squared_sum();
  r.recompose_error = (bell_recompose(r.decomposition).amplitudes() - delayed.ket().amplitudes()).cwiseAbs().maxCoeff();
  r.passed = r.max_cross_term < kDecomposeTolerance && r.recompose_error < kDecomposeTolerance &&
             std::abs(r.matched_weight - 1.0) < kDecomposeTolerance;
  return r;
}

inline DecomposeReport decompose_check(double pair_phase = std::numbers::pi) {
  return decompose_check(apply_delay(build_two_pair_state(pair_phase, pair_phase)));
}

inline Json decompose_report_to_json(const DecomposeReport& r) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "decompose_check";
  Json matched;
  for (BellKind k : {BellKind::PsiPlus, BellKind::PsiMinus, BellKind::PhiPlus, BellKind::PhiMinus}) {
    const Complex c = r.decomposition.matched(k);
    matched[std::string(to_string(k))] = Json::array({c.real(), c.imag()});
  }
  j["matched_coefficients"] = matched;
  j["max_cross_term"] = r.max_cross_term;
  j["recompose_error"] = r.recompose_error;
  j["matched_weight"] = r.matched_weight;
  j["passed"] = r.passed;
  return j;
}

// ----------------------------------------------------------------------------
// Full run

struct ConditionedResult {
  BellKind outcome;
  double projection_probability;
  DensityMatrix model_state;
  double model_fidelity;
  CountTable counts;
  ReconstructionResult reconstruction;
  double concurrence;
};

struct RunArtifacts {
  RunConfig config;
  std::vector<ConditionedResult> results;
};

/// Seed of an independent stream for a named purpose within a run.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, BellKind outcome) {
  return resample_seed(master, purpose * 16 + static_cast<std::uint64_t>(outcome));
}

/// Simulation and tomography for one conditioning outcome with explicit counts.
inline ConditionedResult analyze_conditioned(const RunConfig& config, BellKind outcome, const CountTable& counts,
                                             double projection_probability, const DensityMatrix& model_state) {
  const Ket target = bell_state(outcome);
  BootstrapOptions opts;
  opts.n_resamples = config.bootstrap;
  opts.seed = derive_seed(config.seed, 2, outcome);
  opts.method = config.method;
  ReconstructionResult rec = analyze_counts(counts, target, opts);
  const double conc = concurrence(rec.rho);
  return {outcome, projection_probability, model_state, fidelity(model_state, target), counts, std::move(rec), conc};
}

inline CountTable sample_conditioned_counts(const RunConfig& config, const BellProjectionResult& projection) {
  return sample_counts(projection.conditional_state, config.flux_hz, config.integration_s,
                       derive_seed(config.seed, 1, projection.outcome), projection.outcome);
}

/// Deterministic given the configuration (including its seed).
inline RunArtifacts run_experiment(const RunConfig& config) {
  config.validate();
  const auto delayed = apply_delay(build_two_pair_state(config.pair_phase_first, config.pair_phase_second));
  RunArtifacts out{config, {}};
  for (BellKind outcome : selected_outcomes(config.outcomes)) {
    const BellProjectionResult proj = project_middle(delayed, outcome, config.model());
    const CountTable counts = sample_conditioned_counts(config, proj);
    out.results.push_back(analyze_conditioned(config, outcome, counts, proj.probability, proj.conditional_state));
  }
  return out;
}

inline Json conditioned_summary(const ConditionedResult& r) {
  Json j;
  j["outcome"] = std::string(to_string(r.outcome));
  j["projection_probability"] = r.projection_probability;
  j["model_fidelity"] = r.model_fidelity;
  j["method"] = std::string(to_string(r.reconstruction.method));
  j["fidelity"] = r.reconstruction.fidelity_to_target;
  j["bootstrap_sigma"] = r.reconstruction.bootstrap_sigma;
  j["n_resamples"] = r.reconstruction.n_resamples;
  j["concurrence"] = r.concurrence;
  j["physical"] = r.reconstruction.physical;
  j["converged"] = r.reconstruction.converged;
  j["total_counts"] = r.counts.total();
  return j;
}

/// File name -> content for every artifact of a run. Nothing is written.
inline std::map<std::string, std::string> artifact_files(const RunArtifacts& a) {
  std::map<std::string, std::string> files;
  files["config.json"] = dump(run_config_to_json(a.config));
  files["timeline.json"] = dump(timeline_to_json());
  Json summary;
  summary["format_version"] = kFormatVersion;
  summary["kind"] = "run_summary";
  Json results = Json::array();
  for (const auto& r : a.results) {
    const std::string tag(to_string(r.outcome));
    files["counts_" + tag + ".json"] = dump(count_table_to_json(r.counts));
    files["rho_" + tag + ".json"] = dump(density_matrix_to_json(r.reconstruction.rho));
    files["rho_" + tag + "_real.tsv"] = density_matrix_tsv(r.reconstruction.rho);
    files["model_rho_" + tag + ".json"] = dump(density_matrix_to_json(r.model_state));
    results.push_back(conditioned_summary(r));
  }
  summary["results"] = results;
  files["summary.json"] = dump(summary);
  return files;
}

/// Writes all files into `dir` (created if absent). Each file is written to a
/// temporary name first; on failure every temporary is removed.
inline void write_files(const std::map<std::string, std::string>& files, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> staged;
  try {
    for (const auto& [name, content] : files) {
      const std::filesystem::path tmp = dir / (name + ".tmp");
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      staged.push_back(tmp);
      if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
      out << content;
      out.close();
      if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : staged) std::filesystem::remove(p, ec);
    throw;
  }
  for (const auto& [name, content] : files) std::filesystem::rename(dir / (name + ".tmp"), dir / name);
}

// ----------------------------------------------------------------------------
// Calibration

/// Overlap v in [0, 1] at which the simulated phi+ conditional state reaches
/// `target_fidelity` for fixed white noise, found by bisection.
inline double calibrate_overlap(double target_fidelity, double white_noise, double tol = 1e-12) {
  const auto delayed = apply_delay(build_two_pair_state());
  const Ket phi_plus = bell_state(BellKind::PhiPlus);
  auto f = [&](double v) {
    return fidelity(project_middle(delayed, BellKind::PhiPlus, {v, white_noise}).conditional_state, phi_plus) -
           target_fidelity;
  };
  double lo = 0.0;
  double hi = 1.0;
  if (f(lo) > 0.0 || f(hi) < 0.0) {
    throw std::domain_error("target fidelity " + format_double(target_fidelity) + " unreachable at white noise " +
                            format_double(white_noise));
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace swapsim
