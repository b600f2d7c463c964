#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rdalab/duality.hpp"
#include "rdalab/errors.hpp"
#include "rdalab/estimates.hpp"
#include "rdalab/kinetics.hpp"
#include "rdalab/network_io.hpp"
#include "rdalab/reaction_network.hpp"
#include "rdalab/scenario.hpp"
#include "rdalab/solver.hpp"

namespace rdalab::app {

namespace fs = std::filesystem;

/// Collected outputs of one scenario run.
struct Outcome {
  NormReport norms;
  std::vector<std::string> report_lines;
  std::string norms_csv;
  std::string estimates_csv = "experiment,member,parameter,norm_sum,initial_sum,ratio,extra\n";
  std::string duality_csv;
  std::string certificate;
  std::vector<std::pair<std::string, std::string>> snapshots;  // file name, contents

  bool all_pass() const {
    for (const auto& v : norms.verdicts)
      if (!v.pass) return false;
    return true;
  }

  void verdict(std::string name, bool pass, std::string detail) {
    norms.verdicts.push_back({std::move(name), pass, std::move(detail)});
  }

  void estimate_row(const std::string& experiment, std::size_t member, double parameter, double norm_sum,
                    double initial_sum, double ratio, double extra) {
    estimates_csv += experiment + ',' + std::to_string(member) + ',' + format_number(parameter) + ',' +
                     format_number(norm_sum) + ',' + format_number(initial_sum) + ',' + format_number(ratio) + ',' +
                     format_number(extra) + '\n';
  }
};

namespace detail {

inline std::string norms_csv(const Scenario& s, const SolutionTrajectory& traj) {
  std::string out = "step,t,dt";
  for (const auto& sp : s.species) out += ",mass_" + sp.name;
  out += ",min_value,drift,linear_iterations,rejections\n";
  auto row = [&](std::size_t step, double t, double dt, const std::vector<double>& mass, double min_value, double drift,
                 std::size_t iterations, std::size_t rejections) {
    out += std::to_string(step) + ',' + format_number(t) + ',' + format_number(dt);
    for (double m : mass) out += ',' + format_number(m);
    out += ',' + format_number(min_value) + ',' + (std::isnan(drift) ? std::string("nan") : format_number(drift)) + ',' +
           std::to_string(iterations) + ',' + std::to_string(rejections) + '\n';
  };
  std::vector<double> mass0;
  double min0 = std::numeric_limits<double>::infinity();
  for (const auto& f : traj.states.front()) {
    mass0.push_back(integrate(traj.grid, f.values));
    for (double v : f.values) min0 = std::min(min0, v);
  }
  const bool tracked = !traj.ledger.empty() && !std::isnan(traj.ledger.front().conservation_drift);
  row(0, 0.0, 0.0, mass0, min0, tracked ? 0.0 : std::nan(""), 0, 0);
  for (std::size_t k = 0; k < traj.ledger.size(); ++k) {
    const auto& e = traj.ledger[k];
    row(k + 1, e.t, e.dt, e.mass, e.min_value, e.conservation_drift, e.linear_iterations, e.rejections);
  }
  return out;
}

inline std::string fmt(double v) { return format_number(v); }

} // namespace detail

// ---------------------------------------------------------------------------
// Experiments

inline void run_certificate(const Scenario& s, Outcome& out) {
  try {
    const auto cert = certify(*s.network);
    std::ostringstream text;
    write_certificate(text, cert);
    out.certificate = text.str();
    const auto failures = verify_certificate(*s.network, cert);
    const auto probe = certificate_bound_probe(*s.network, cert, 100, s.seed);
    const bool ok = failures.empty() && probe.worst_triangular_margin >= -1e-9 && probe.worst_combination_margin >= -1e-9;
    std::string detail = "b0=" + to_string(cert.b0) + " eps=" + to_string(cert.eps) + " e=(";
    for (std::size_t i = 0; i < cert.e.size(); ++i) detail += (i ? "," : "") + to_string(cert.e[i]);
    detail += ") probe margins " + detail::fmt(probe.worst_triangular_margin) + ", " +
              detail::fmt(probe.worst_combination_margin);
    for (const auto& f : failures) detail += "; " + f;
    out.verdict("certificate", ok, detail);
  } catch (const Error& e) {
    // Certification is advisory for the solver; record it without failing.
    out.report_lines.push_back("WARN certificate: " + std::string(e.what()));
  }
}

inline void run_quasi_positivity(const Scenario& s, Outcome& out) {
  const auto r = s.kinetics == "mass_action" ? quasi_positivity_probe(*s.network, s.probe_samples, s.seed)
                                             : quasi_positivity_probe(make_kinetics(s), s.probe_samples, s.seed);
  out.verdict("quasi_positivity", r.violations == 0,
              std::to_string(r.samples) + " boundary samples, " + std::to_string(r.violations) +
                  " violations, worst margin " + detail::fmt(r.worst_margin));
}

inline void run_analytic(const Scenario& s, const SolutionTrajectory& traj, Outcome& out) {
  std::vector<ScalarExpr> exact;
  for (const auto& e : s.exact) exact.emplace_back(e);
  const ExactSolution fn = [&](std::size_t i, double t, const Point& x) { return exact[i](t, x); };
  double worst = 0;
  out.report_lines.push_back("analytic error table (max norm):");
  for (std::size_t idx : traj.snapshot_indices) {
    const double err = max_error(traj, idx, fn);
    worst = std::max(worst, err);
    out.report_lines.push_back("  t=" + detail::fmt(traj.times[idx]) + "  error=" + detail::fmt(err));
  }
  const double l2 = manufactured_error(traj, fn);
  out.report_lines.push_back("  space-time L2 error=" + detail::fmt(l2));
  out.verdict("analytic", worst <= s.analytic_tolerance,
              "max error " + detail::fmt(worst) + " (tolerance " + detail::fmt(s.analytic_tolerance) + ")");
}

/// Weak-form defect against the test-function catalog under simultaneous
/// halving of h and dt; the finest level is the scenario's own grid.
inline void run_weak_residual(const Scenario& s, Outcome& out) {
  std::vector<double> residuals;
  for (std::size_t l = 0; l < s.refine_levels; ++l) {
    const std::size_t factor = std::size_t{1} << (s.refine_levels - 1 - l);
    for (int a = 0; a < s.dim; ++a)
      if (s.cells[a] % factor != 0 || s.cells[a] / factor < 2)
        throw ConfigError("cells are not divisible across the requested refinement levels");
    const Grid g = s.dim == 1 ? Grid::line(s.lengths[0], s.cells[0] / factor)
                              : Grid::rectangle(s.lengths[0], s.lengths[1], s.cells[0] / factor, s.cells[1] / factor);
    const auto cfg = make_config(s, g, s.dt * static_cast<double>(factor));
    const auto traj = run(cfg);
    double worst = 0;
    for (const auto& psi : test_function_catalog(g, s.T))
      for (double r : weak_residual(traj, cfg, psi)) worst = std::max(worst, r);
    residuals.push_back(worst);
    out.estimate_row("weak_residual", l, static_cast<double>(g.cells(0)), worst, 0, l ? worst / residuals[l - 1] : 0, cfg.dt_init);
  }
  bool ok = true;
  std::string detail = "residuals";
  for (std::size_t l = 0; l < residuals.size(); ++l) {
    detail += " " + detail::fmt(residuals[l]);
    if (l > 0 && !(residuals[l] <= 0.6 * residuals[l - 1])) ok = false;
  }
  out.verdict("weak_residual", ok, detail);
}

inline void run_l2_uniformity(const Scenario& s, Outcome& out) {
  const auto make = [&](double k) {
    Scenario member = s;
    member.network = with_rate(*s.network, Rational(k));
    return make_config(member);
  };
  const auto r = l2_uniformity_experiment(make, s.k_sweep, equilibrium_residual(*s.network));
  std::string detail = "ratios";
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    const auto& m = r.members[i];
    detail += " " + detail::fmt(m.ratio);
    out.estimate_row("l2_uniformity", i, m.k, m.l2_sum, m.initial_l2_sum, m.ratio, m.equilibrium_l1);
  }
  detail += "; variation " + detail::fmt(r.variation) + (r.uniform ? "" : " (>10%)") + (r.bounded ? "" : "; exceeds 2x k=1") +
            (r.trend ? "; equilibrium residual decreasing" : "; equilibrium residual not strictly decreasing");
  out.verdict("l2_uniformity", r.pass(), detail);
  out.norms.constants.emplace_back("l2_uniformity_max_ratio",
                                   std::max_element(r.members.begin(), r.members.end(), [](auto& a, auto& b) {
                                     return a.ratio < b.ratio;
                                   })->ratio);
}

inline void run_concentration(const Scenario& s, Outcome& out) {
  const auto cfg = make_config(s);
  const auto family = concentrating_family(cfg.grid, {s.concentration_center[0], s.concentration_center[1]},
                                           s.concentration_masses, s.concentration_factors);
  const auto r = l_n1_over_n_experiment(cfg, family);
  std::string detail = "ratios";
  std::string l2_detail = "L2 ratios";
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    const auto& m = r.members[i];
    detail += " " + detail::fmt(m.ratio);
    l2_detail += " " + detail::fmt(m.l2_ratio);
    if (s.wants("l_n1_over_n"))
      out.estimate_row("l_n1_over_n", i, s.concentration_factors[i], m.norm_sum, m.initial_l1_sum, m.ratio, m.initial_linf_sum);
    if (s.wants("anisotropic_l2"))
      out.estimate_row("anisotropic_l2", i, s.concentration_factors[i], 0, 0, m.l2_ratio, m.initial_linf_sum);
  }
  if (s.wants("l_n1_over_n")) {
    out.verdict("l_n1_over_n", r.pass(), detail + "; worst/baseline " + detail::fmt(r.worst_over_baseline));
    out.norms.constants.emplace_back("l_n1_over_n_worst_over_baseline", r.worst_over_baseline);
  }
  if (s.wants("anisotropic_l2")) out.report_lines.push_back("RECORDED anisotropic_l2: " + l2_detail + " (no verdict)");
}

inline void run_collapse(const Scenario& s, const SimulationConfig& cfg, const SolutionTrajectory& traj, Outcome& out) {
  (void)s;
  try {
    const auto [lo, hi] = collapse_bounds_check(traj, cfg.transport);
    out.verdict("collapse", true, "A in [" + detail::fmt(lo) + ", " + detail::fmt(hi) + "] at all snapshots");
  } catch (const CollapseBoundViolation& e) {
    out.verdict("collapse", false, e.what());
  }
}

inline void run_duality(const Scenario& s, Outcome& out) {
  const auto r = verify_lemma5(s.duality_ensemble, s.seed, s.duality_levels);
  out.duality_csv = "member,training,cells,ratio,pairing_lhs,pairing_rhs,defect,psi_min\n";
  for (const auto& m : r.members)
    out.duality_csv += std::to_string(m.member) + ',' + (m.training ? "1" : "0") + ',' + std::to_string(m.cells) + ',' +
                       detail::fmt(m.ratio) + ',' + detail::fmt(m.pairing_lhs) + ',' + detail::fmt(m.pairing_rhs) + ',' +
                       detail::fmt(m.defect) + ',' + detail::fmt(m.psi_min) + '\n';
  std::string detail = "C_emp";
  for (double c : r.fitted_constant) detail += " " + detail::fmt(c);
  detail += "; worst held-out " + detail::fmt(r.worst_held_out.back()) + "; C_emp change " + detail::fmt(r.constant_change) +
            "; defect ratios";
  for (double d : r.defect_ratios) detail += " " + detail::fmt(d);
  if (!r.positivity_ok) detail += "; dual solution went negative";
  out.verdict("duality", r.pass(), detail);
  out.norms.constants.emplace_back("duality_C_emp", r.fitted_constant.back());
}

inline void run_continuous_dependence(const Scenario& s, const SolutionTrajectory& base, Outcome& out) {
  const Grid grid = make_grid(s);
  const ScalarExpr phi(s.perturbation);
  std::vector<double> ratios;
  for (std::size_t i = 0; i < s.perturbation_sizes.size(); ++i) {
    const double delta = s.perturbation_sizes[i];
    auto cfg = make_config(s);
    double pert2 = 0;
    for (auto& f : cfg.initial)
      for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const double d = delta * phi(0.0, grid.center(c));
        f.values[c] += d;
        pert2 += d * d * grid.cell_volume();
      }
    const auto traj = run(cfg);
    const double dist = trajectory_distance(base, traj);
    ratios.push_back(dist / std::sqrt(pert2));
    out.estimate_row("continuous_dependence", i, delta, dist, std::sqrt(pert2), ratios.back(), 0);
  }
  const double mid = ratios[ratios.size() / 2];
  bool ok = true;
  std::string detail = "ratios";
  for (double r : ratios) {
    detail += " " + detail::fmt(r);
    if (std::abs(r - mid) > 0.25 * mid) ok = false;
  }
  out.verdict("continuous_dependence", ok, detail);
  out.norms.constants.emplace_back("continuous_dependence_C", *std::max_element(ratios.begin(), ratios.end()));
}

/// Runs the scenario and every listed experiment.
inline Outcome execute(const Scenario& s) {
  validate(s);
  Outcome out;
  const auto cfg = make_config(s);
  const auto traj = run(cfg);
  out.norms = norm_report(traj);
  out.norms_csv = detail::norms_csv(s, traj);
  for (std::size_t idx : traj.snapshot_indices) {
    std::ostringstream snap;
    write_snapshot(snap, traj.grid, traj.times[idx], traj.states[idx]);
    out.snapshots.emplace_back("snapshot_" + format_number(traj.times[idx]) + ".txt", snap.str());
  }

  const double min_value = traj.min_value();
  out.verdict("nonnegativity", min_value >= -1e-12, "min cell value " + detail::fmt(min_value));
  if (s.wants("conservation")) {
    const double drift = out.norms.conservation_drift;
    out.verdict("conservation", !std::isnan(drift) && drift <= 1e-8, "max relative drift " + detail::fmt(drift));
  }
  if (s.wants("certificate")) run_certificate(s, out);
  if (s.wants("quasi_positivity")) run_quasi_positivity(s, out);
  if (s.wants("analytic")) run_analytic(s, traj, out);
  if (s.wants("weak_residual")) run_weak_residual(s, out);
  if (s.wants("l2_uniformity")) run_l2_uniformity(s, out);
  if (s.wants("l_n1_over_n") || s.wants("anisotropic_l2")) run_concentration(s, out);
  if (s.wants("collapse")) run_collapse(s, cfg, traj, out);
  if (s.wants("duality")) run_duality(s, out);
  if (s.wants("continuous_dependence")) run_continuous_dependence(s, traj, out);
  return out;
}

inline std::string report_text(const Scenario& s, const Outcome& out) {
  std::ostringstream r;
  r << "scenario " << s.name << '\n';
  r << "space-time norms (";
  for (std::size_t e = 0; e < out.norms.exponents.size(); ++e)
    r << (e ? ", " : "") << "p=" << (std::isinf(out.norms.exponents[e]) ? std::string("inf") : format_number(out.norms.exponents[e]));
  r << "):\n";
  for (std::size_t i = 0; i < out.norms.per_species.size(); ++i) {
    r << "  " << s.species[i].name;
    for (double v : out.norms.per_species[i]) r << ' ' << format_number(v);
    r << "  | initial L1 " << format_number(out.norms.initial_l1[i]) << " L2 " << format_number(out.norms.initial_l2[i])
      << " Linf " << format_number(out.norms.initial_linf[i]) << '\n';
  }
  r << "  sum";
  for (double v : out.norms.aggregate) r << ' ' << format_number(v);
  r << '\n';
  if (!std::isnan(out.norms.conservation_drift)) r << "conservation drift " << format_number(out.norms.conservation_drift) << '\n';
  for (const auto& line : out.report_lines) r << line << '\n';
  for (const auto& [name, value] : out.norms.constants) r << "constant " << name << " = " << format_number(value) << '\n';
  for (const auto& v : out.norms.verdicts) r << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
  r << (out.all_pass() ? "overall PASS" : "overall FAIL") << '\n';
  return r.str();
}

inline void write_outputs(const fs::path& dir, const Scenario& s, const Outcome& out) {
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << text;
  };
  put("norms.csv", out.norms_csv);
  put("estimates.csv", out.estimates_csv);
  if (!out.duality_csv.empty()) put("duality.csv", out.duality_csv);
  if (!out.certificate.empty()) put("certificate.txt", out.certificate);
  for (const auto& [name, text] : out.snapshots) put(name, text);
  put("scenario.cfg", serialize(s));
  put("report.txt", report_text(s, out));
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& tok : split(text, ',')) out.push_back(parse_number(tok, "list"));
  return out;
}

/// Exit codes: 0 all verdicts pass, 2 some verdict failed, 1 bad input or
/// runtime error.
inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Reaction-advection-diffusion lab", "rdalab"};
  std::string config, preset_name, out_dir, k_sweep;
  std::optional<std::size_t> refine;
  std::optional<std::uint64_t> seed;
  bool print_config = false;
  auto* config_opt = app.add_option("--config", config, "scenario file");
  auto* preset_opt = app.add_option("--preset", preset_name, "examp22, abc, heat1d or aniso2d");
  config_opt->excludes(preset_opt);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--refine", refine, "refinement levels for the weak-residual study");
  app.add_option("--k-sweep", k_sweep, "comma-separated rate constants, enables the k sweep");
  app.add_option("--seed", seed, "random seed");
  app.add_flag("--print-config", print_config, "print the resolved scenario and exit");
  auto* run_cmd = app.add_subcommand("run", "run a scenario (same options)");
  run_cmd->fallthrough();
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (config.empty() == preset_name.empty()) throw ConfigError("exactly one of --config or --preset is required");
    Scenario s = config.empty() ? preset(preset_name) : load_scenario(config);
    if (refine) s.refine_levels = *refine;
    if (seed) s.seed = *seed;
    if (!k_sweep.empty()) {
      s.k_sweep = parse_list(k_sweep);
      if (!s.wants("l2_uniformity")) s.experiments.push_back("l2_uniformity");
    }
    validate(s);
    if (print_config) {
      out << serialize(s);
      return 0;
    }
    if (out_dir.empty()) throw ConfigError("--out is required");
    const auto outcome = execute(s);
    write_outputs(out_dir, s, outcome);
    for (const auto& v : outcome.norms.verdicts) out << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    return outcome.all_pass() ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UnknownPreset*>(&e)) err << app.help();
    return 1;
  }
}

} // namespace rdalab::app
