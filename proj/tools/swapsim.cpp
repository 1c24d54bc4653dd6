// swapsim - command-line front end.
//
//   swapsim run              simulate, sample, reconstruct, bootstrap
//   swapsim sample           write count tables only
//   swapsim tomography       reconstruct from an existing count table
//   swapsim decompose-check  verify the Bell x Bell regrouping of the delayed state
//   swapsim calibrate        overlap giving a target fidelity
//
// Exit status: 0 success, 1 failed check, 2 bad input. Nothing is written
// unless the whole command succeeds.

#include "swapsim/swapsim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

namespace {

using namespace swapsim;

struct RunFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  double overlap = 0.0;
  double noise = 0.0;
  double flux = 0.0;
  double integration = 0.0;
  double pair_phase = 0.0;
  std::string outcome;
  std::string method;
  int bootstrap = 0;
  std::string out_dir = "swapsim_out";

  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* cmd, bool with_analysis) {
    opts["config"] = cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    opts["seed"] = cmd->add_option("--seed", seed, "master seed");
    opts["overlap"] = cmd->add_option("--overlap", overlap, "middle-photon mode overlap in [0, 1]");
    opts["noise"] = cmd->add_option("--noise", noise, "white-noise weight in [0, 1]");
    opts["flux"] = cmd->add_option("--flux", flux, "fourfold coincidences per second");
    opts["integration"] = cmd->add_option("--integration", integration, "seconds per setting");
    opts["pair-phase"] = cmd->add_option("--pair-phase", pair_phase, "source pair phase in radians (both pairs)");
    opts["outcome"] = cmd->add_option("--outcome", outcome, "phiplus | phiminus | both");
    if (with_analysis) {
      opts["method"] = cmd->add_option("--method", method, "li | ml");
      opts["bootstrap"] = cmd->add_option("--bootstrap", bootstrap, "bootstrap resamples (0 disables)");
    }
    cmd->add_option("--out", out_dir, "output directory");
  }

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (given("seed")) c.seed = seed;
    if (given("overlap")) c.overlap = overlap;
    if (given("noise")) c.white_noise = noise;
    if (given("flux")) c.flux_hz = flux;
    if (given("integration")) c.integration_s = integration;
    if (given("pair-phase")) c.pair_phase_first = c.pair_phase_second = pair_phase;
    if (given("outcome")) c.outcomes = outcome_selection_from_string(outcome);
    if (given("method")) {
      try {
        c.method = method_from_string(method);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("method", e.what());
      }
    }
    if (given("bootstrap")) c.bootstrap = bootstrap;
    c.validate();
    return c;
  }
};

void print_result_line(const ConditionedResult& r) {
  std::printf("%-9s P=%.4f  F=%.4f +- %.4f  C=%.4f  (model F=%.4f, %llu counts)\n",
              std::string(to_string(r.outcome)).c_str(), r.projection_probability, r.reconstruction.fidelity_to_target,
              r.reconstruction.bootstrap_sigma, r.concurrence, r.model_fidelity,
              static_cast<unsigned long long>(r.counts.total()));
}

int cmd_run(const RunFlags& flags) {
  const RunConfig config = flags.resolve();
  const RunArtifacts artifacts = run_experiment(config);
  write_files(artifact_files(artifacts), flags.out_dir);
  for (const auto& e : timeline()) {
    std::printf("(%s) t=%-2s %s\n", std::string(to_string(e.stage)).c_str(), e.logical_time().c_str(),
                std::string(e.description).c_str());
  }
  for (const auto& r : artifacts.results) print_result_line(r);
  std::printf("wrote %s\n", flags.out_dir.c_str());
  return 0;
}

int cmd_sample(const RunFlags& flags) {
  const RunConfig config = flags.resolve();
  const auto delayed = apply_delay(build_two_pair_state(config.pair_phase_first, config.pair_phase_second));
  std::map<std::string, std::string> files;
  files["config.json"] = dump(run_config_to_json(config));
  for (BellKind outcome : selected_outcomes(config.outcomes)) {
    const auto proj = project_middle(delayed, outcome, config.model());
    const CountTable counts = sample_conditioned_counts(config, proj);
    files["counts_" + std::string(to_string(outcome)) + ".json"] = dump(count_table_to_json(counts));
    std::printf("%-9s %llu counts\n", std::string(to_string(outcome)).c_str(),
                static_cast<unsigned long long>(counts.total()));
  }
  write_files(files, flags.out_dir);
  std::printf("wrote %s\n", flags.out_dir.c_str());
  return 0;
}

struct TomographyFlags {
  std::string counts_path;
  std::string method = "ml";
  int bootstrap = 100;
  std::uint64_t seed = 1;
  std::string out_dir = "swapsim_out";
};

int cmd_tomography(const TomographyFlags& flags) {
  const CountTable counts = import_count_table(flags.counts_path);
  RunConfig config;
  try {
    config.method = method_from_string(flags.method);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("method", e.what());
  }
  config.bootstrap = flags.bootstrap;
  config.seed = flags.seed;
  config.flux_hz = counts.flux_hz;
  config.integration_s = counts.integration_s;
  config.validate();
  const ConditionedResult r = analyze_conditioned(config, counts.conditioning, counts, std::nan(""),
                                                  DensityMatrix::maximally_mixed(2));
  const std::string tag(to_string(r.outcome));
  Json summary;
  summary["format_version"] = kFormatVersion;
  summary["kind"] = "tomography_summary";
  summary["counts_file"] = std::filesystem::path(flags.counts_path).filename().string();
  summary["outcome"] = tag;
  summary["method"] = std::string(to_string(r.reconstruction.method));
  summary["fidelity"] = r.reconstruction.fidelity_to_target;
  summary["bootstrap_sigma"] = r.reconstruction.bootstrap_sigma;
  summary["n_resamples"] = r.reconstruction.n_resamples;
  summary["concurrence"] = r.concurrence;
  summary["physical"] = r.reconstruction.physical;
  summary["converged"] = r.reconstruction.converged;
  std::map<std::string, std::string> files;
  files["rho_" + tag + ".json"] = dump(density_matrix_to_json(r.reconstruction.rho));
  files["rho_" + tag + "_real.tsv"] = density_matrix_tsv(r.reconstruction.rho);
  files["tomography_" + tag + ".json"] = dump(summary);
  write_files(files, flags.out_dir);
  std::printf("%-9s F=%.4f +- %.4f  C=%.4f\n", tag.c_str(), r.reconstruction.fidelity_to_target,
              r.reconstruction.bootstrap_sigma, r.concurrence);
  std::printf("wrote %s\n", flags.out_dir.c_str());
  return 0;
}

struct DecomposeFlags {
  double pair_phase = std::numbers::pi;
  double tamper = 0.0;
  std::string out_dir;
};

int cmd_decompose(const DecomposeFlags& flags) {
  auto delayed = apply_delay(build_two_pair_state(flags.pair_phase, flags.pair_phase));
  if (flags.tamper != 0.0) {
    CVector amps = delayed.ket().amplitudes();
    amps(0) += flags.tamper;
    delayed = LabeledFourPhotonState(Ket(4, amps).normalized(), delayed.labels());
  }
  const DecomposeReport report = decompose_check(delayed);
  for (BellKind k : {BellKind::PsiPlus, BellKind::PsiMinus, BellKind::PhiPlus, BellKind::PhiMinus}) {
    const Complex c = report.decomposition.matched(k);
    std::printf("%-9s (1,4) x %-9s (2,3): %+.15f %+.15fi\n", std::string(to_string(k)).c_str(),
                std::string(to_string(k)).c_str(), c.real(), c.imag());
  }
  std::printf("max cross term %.3e, recompose error %.3e, matched weight %.15f\n", report.max_cross_term,
              report.recompose_error, report.matched_weight);
  if (!flags.out_dir.empty()) write_files({{"decompose_check.json", dump(decompose_report_to_json(report))}}, flags.out_dir);
  std::printf("%s\n", report.passed ? "PASS" : "FAIL");
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement swapping between time-separated photon pairs"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "simulate, sample counts, reconstruct and bootstrap");
  run_flags.attach(run, true);

  RunFlags sample_flags;
  auto* sample = app.add_subcommand("sample", "write simulated count tables only");
  sample_flags.attach(sample, false);

  TomographyFlags tomo_flags;
  auto* tomo = app.add_subcommand("tomography", "reconstruct from a count table file");
  tomo->add_option("--counts", tomo_flags.counts_path, "count table JSON")->required()->check(CLI::ExistingFile);
  tomo->add_option("--method", tomo_flags.method, "li | ml");
  tomo->add_option("--bootstrap", tomo_flags.bootstrap, "bootstrap resamples (0 disables)");
  tomo->add_option("--seed", tomo_flags.seed, "bootstrap seed");
  tomo->add_option("--out", tomo_flags.out_dir, "output directory");

  DecomposeFlags dec_flags;
  auto* dec = app.add_subcommand("decompose-check", "verify the Bell-basis regrouping of the delayed state");
  dec->add_option("--pair-phase", dec_flags.pair_phase, "source pair phase in radians (both pairs)");
  dec->add_option("--tamper", dec_flags.tamper, "add this to the |hhhh> amplitude before checking");
  dec->add_option("--out", dec_flags.out_dir, "optional directory for decompose_check.json");

  double cal_target = 0.77;
  double cal_noise = 0.02;
  auto* cal = app.add_subcommand("calibrate", "overlap reproducing a target fidelity");
  cal->add_option("--target", cal_target, "target fidelity to phi+");
  cal->add_option("--noise", cal_noise, "fixed white-noise weight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sample) return cmd_sample(sample_flags);
    if (*tomo) return cmd_tomography(tomo_flags);
    if (*dec) return cmd_decompose(dec_flags);
    if (*cal) {
      const double v = calibrate_overlap(cal_target, cal_noise);
      std::printf("overlap %.6f (white noise %.4f) -> fidelity %.6f\n", v, cal_noise, model_fidelity({v, cal_noise}));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
