// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Reference values are computed here independently of the
// library where that is possible.

#include "swapsim/swapsim.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace swapsim;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void check(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome r{false, ""};
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = r.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s  %-28s %s [%.2fs of %.0fs]%s\n", pass ? "PASS" : "FAIL", name, r.detail.c_str(), secs, budget_s,
              in_time ? "" : " over time budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

DensityMatrix random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix4cd a;
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = Complex(g(rng), g(rng));
  Eigen::Matrix4cd m = a * a.adjoint();
  m /= m.trace().real();
  return DensityMatrix::from_matrix(2, m);
}

// Amplitude of |b1 b2 b3 b4> in Bell_o(1,4) Bell_m(2,3), from explicit Bell tables.
Complex crossed_amplitude(int o, int m, int b1, int b2, int b3, int b4) {
  // rows: phi+, phi-, psi+, psi-; columns: hh, hv, vh, vv
  static const double r = 1.0 / std::sqrt(2.0);
  static const double bell[4][4] = {{r, 0, 0, r}, {r, 0, 0, -r}, {0, r, r, 0}, {0, r, -r, 0}};
  return bell[o][2 * b1 + b4] * bell[m][2 * b2 + b3];
}

// Delayed two-pair amplitudes with both pairs (|hv> - |vh>)/sqrt2, written out directly.
double source_amplitude(int b1, int b2, int b3, int b4) {
  static const double r = 1.0 / std::sqrt(2.0);
  auto psi_minus = [](int x, int y) { return x == y ? 0.0 : (x == 0 ? r : -r); };
  return psi_minus(b1, b2) * psi_minus(b3, b4);
}

DensityMatrix phi_projector(BellKind k) { return DensityMatrix::from_ket(bell_state(k)); }

}  // namespace

int main() {
  const Ket phi_plus = bell_state(BellKind::PhiPlus);
  const auto delayed = apply_delay(build_two_pair_state());

  check("bell-regrouping-identity", 1.0, [&]() -> Outcome {
    // Brute-force expansion against the library decomposition.
    const BellDecomposition d = bell_decompose(delayed);
    double worst_cross = 0.0;
    double worst_diff = 0.0;
    const std::array<double, 4> expected = {-0.5, 0.5, 0.5, -0.5};  // phi+, phi-, psi+, psi-
    bool match = true;
    for (int o = 0; o < 4; ++o) {
      for (int m = 0; m < 4; ++m) {
        Complex c = 0.0;
        for (int i = 0; i < 16; ++i) {
          const int b1 = (i >> 3) & 1, b2 = (i >> 2) & 1, b3 = (i >> 1) & 1, b4 = i & 1;
          c += std::conj(crossed_amplitude(o, m, b1, b2, b3, b4)) * source_amplitude(b1, b2, b3, b4);
          if (o == 0 && m == 0) match = match && std::abs(delayed.ket()[i] - source_amplitude(b1, b2, b3, b4)) < 1e-15;
        }
        worst_diff = std::max(worst_diff, std::abs(c - d.coefficients[static_cast<std::size_t>(o)][static_cast<std::size_t>(m)]));
        if (o == m) {
          worst_diff = std::max(worst_diff, std::abs(c - expected[static_cast<std::size_t>(o)]));
        } else {
          worst_cross = std::max(worst_cross, std::abs(c));
        }
      }
    }
    const bool pass = match && worst_diff < 1e-12 && worst_cross < 1e-12 && decompose_check().passed;
    return {pass, fmt("coeff(psi+,psi-,phi+,phi-)=(%+.3f,%+.3f,", d.matched(BellKind::PsiPlus).real(),
                      d.matched(BellKind::PsiMinus).real()) +
                      fmt("%+.3f,%+.3f) max|cross|=%.1e", d.matched(BellKind::PhiPlus).real(),
                          d.matched(BellKind::PhiMinus).real(), worst_cross) +
                      fmt(" max|diff|=%.1e", worst_diff)};
  });

  check("ideal-swap", 1.0, [&]() -> Outcome {
    double worst_state = 0.0;
    double worst_prob = 0.0;
    for (BellKind k : {BellKind::PhiPlus, BellKind::PhiMinus}) {
      const auto r = project_middle(delayed, k, {1.0, 0.0});
      worst_state = std::max(worst_state, (r.conditional_state.matrix() - phi_projector(k).matrix()).cwiseAbs().maxCoeff());
      worst_prob = std::max(worst_prob, std::abs(r.probability - 0.25));
    }
    return {worst_state < 1e-10 && worst_prob < 1e-12,
            fmt("max|rho - phi|=%.1e max|P - 1/4|=%.1e", worst_state, worst_prob)};
  });

  check("tomography-table", 1.0, [&]() -> Outcome {
    double worst = 1.0;
    for (const ListedState& listed : kListedProjections) {
      double best = 0.0;
      for (const auto& p : effective_projectors(tomography_setting(listed.setting_id))) {
        best = std::max(best, overlap_modulus(listed_state_ket(listed), p.joint()));
      }
      worst = std::min(worst, best);
    }
    const SensingDiagnostics d = sensing_diagnostics(projection_catalog());
    return {worst >= 1.0 - 1e-9 && d.rank == 16,
            fmt("16 listed states, worst overlap 1-%.1e, rank %.0f, cond %.2f", 1.0 - worst, d.rank, d.condition_number)};
  });

  check("distinguishable-limit", 60.0, [&]() -> Outcome {
    const auto r = project_middle(delayed, BellKind::PhiPlus, {0.0, 0.0});
    Eigen::Matrix4cd classical = Eigen::Matrix4cd::Zero();
    classical(0, 0) = classical(3, 3) = 0.5;
    const double state_err = (r.conditional_state.matrix() - classical).cwiseAbs().maxCoeff();
    const double conc = concurrence(r.conditional_state);
    const double f_exact = fidelity(r.conditional_state, phi_plus);
    RunConfig c;
    c.overlap = 0.0;
    c.bootstrap = 0;
    c.seed = 2013;
    double worst_sampled = 0.0;
    for (const auto& res : run_experiment(c).results) {
      worst_sampled = std::max(worst_sampled, std::abs(res.reconstruction.fidelity_to_target - 0.5));
    }
    const bool pass = state_err < 1e-10 && conc < 1e-8 && std::abs(f_exact - 0.5) < 1e-10 && worst_sampled < 0.02;
    return {pass, fmt("max|rho - mix|=%.1e C=%.1e F=%.12f", state_err, conc, f_exact) +
                      fmt(" sampled max|F-0.5|=%.4f", worst_sampled)};
  });

  check("tomography-oracle", 300.0, [&]() -> Outcome {
    std::mt19937_64 rng(31337);
    double worst_li = 0.0;
    for (int i = 0; i < 100; ++i) {
      const DensityMatrix truth = random_state(rng);
      const DensityMatrix li = linear_inversion(predicted_probabilities(truth, default_catalog()), default_catalog());
      worst_li = std::max(worst_li, (li.matrix() - truth.matrix()).cwiseAbs().maxCoeff());
    }
    std::vector<double> fids;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DensityMatrix truth = random_state(rng);
      const CountTable t = sample_counts(truth, 4320.0, 1.0, seed);
      fids.push_back(fidelity(max_likelihood(t).rho, truth));
    }
    const double med = median(fids);
    return {worst_li < 1e-8 && med >= 0.98,
            fmt("LI max entry error %.1e over 100 states; ML median fidelity %.4f (min %.4f) over 20 seeds", worst_li,
                med, *std::min_element(fids.begin(), fids.end()))};
  });

  const double calibrated_overlap = calibrate_overlap(0.77, 0.02);
  const DistinguishabilityModel calibrated{calibrated_overlap, 0.02};

  check("bootstrap-scaling", 300.0, [&]() -> Outcome {
    const DensityMatrix truth = project_middle(delayed, BellKind::PhiPlus, calibrated).conditional_state;
    std::vector<double> small;
    std::vector<double> large;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      BootstrapOptions opts;
      opts.n_resamples = 50;
      opts.seed = seed + 1000;
      small.push_back(bootstrap_error(sample_counts(truth, 12.0, 360.0, seed), phi_plus, opts));
      large.push_back(bootstrap_error(sample_counts(truth, 1200.0, 360.0, seed), phi_plus, opts));
    }
    const double ratio = median(small) / median(large);
    const bool ratio_ok = ratio >= 10.0 / 1.5 && ratio <= 10.0 * 1.5;
    BootstrapOptions opts;
    opts.n_resamples = 100;
    opts.seed = 77;
    const double default_sigma = bootstrap_error(sample_counts(truth, 12.0, 360.0, 4242), phi_plus, opts);
    const bool sigma_ok = default_sigma >= 0.003 && default_sigma <= 0.03;
    return {ratio_ok && sigma_ok, fmt("median sigma %.4f -> %.5f at 100x counts (ratio %.2f)", median(small),
                                      median(large), ratio) +
                                      fmt("; default-rate sigma %.4f", default_sigma)};
  });

  check("calibration", 300.0, [&]() -> Outcome {
    bool pass = true;
    std::string detail;
    for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      RunConfig c;
      c.overlap = v;
      c.white_noise = 0.0;
      c.bootstrap = 50;
      c.seed = 500 + static_cast<std::uint64_t>(v * 100);
      for (const auto& r : run_experiment(c).results) {
        const double dev = std::abs(r.reconstruction.fidelity_to_target - 0.5 * (1.0 + v));
        // Statistical error: three bootstrap standard deviations.
        const bool ok = dev <= 3.0 * r.reconstruction.bootstrap_sigma;
        pass = pass && ok;
        if (!ok || r.outcome == BellKind::PhiPlus) {
          detail += fmt("v=%.2f F=%.4f+-%.4f ", v, r.reconstruction.fidelity_to_target, r.reconstruction.bootstrap_sigma);
          if (!ok) detail += "(off) ";
        }
      }
    }
    RunConfig c;
    c.overlap = calibrated.overlap;
    c.white_noise = calibrated.white_noise;
    c.bootstrap = 0;
    c.seed = 77;
    for (const auto& r : run_experiment(c).results) {
      pass = pass && std::abs(r.reconstruction.fidelity_to_target - 0.77) <= 0.02;
      detail += fmt("| search v=%.4f p=%.2f -> F=%.4f ", calibrated.overlap, calibrated.white_noise,
                    r.reconstruction.fidelity_to_target);
    }
    return {pass, detail};
  });

  check("determinism", 60.0, [&]() -> Outcome {
    RunConfig c;
    c.overlap = calibrated.overlap;
    c.white_noise = calibrated.white_noise;
    c.bootstrap = 20;
    c.seed = 8;
    const auto base = std::filesystem::temp_directory_path() / "swapsim_acceptance";
    std::filesystem::remove_all(base);
    write_files(artifact_files(run_experiment(c)), base / "a");
    write_files(artifact_files(run_experiment(c)), base / "b");
    int files = 0;
    bool same = true;
    for (const auto& e : std::filesystem::directory_iterator(base / "a")) {
      ++files;
      const auto other = base / "b" / e.path().filename();
      same = same && std::filesystem::exists(other) && read_text_file(e.path()) == read_text_file(other);
    }
    std::filesystem::remove_all(base);
    return {same && files > 0, fmt("%.0f files compared byte for byte", files)};
  });

  std::printf("%s\n", failures == 0 ? "all criteria passed" : (std::to_string(failures) + " criteria failed").c_str());
  return failures == 0 ? 0 : 1;
}
