#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rdalab/coefficients.hpp"
#include "rdalab/errors.hpp"
#include "rdalab/grid.hpp"
#include "rdalab/keyvalue.hpp"
#include "rdalab/kinetics.hpp"
#include "rdalab/network_io.hpp"
#include "rdalab/reaction_network.hpp"
#include "rdalab/solver.hpp"

namespace rdalab {

struct SpeciesSpec {
  std::string name;
  std::string diffusion = "iso(const:1)";
  double d_lo = 1;
  double d_hi = 1;
  std::string advection = "const:0|const:0";
  std::string initial = "const:1";

  friend bool operator==(const SpeciesSpec&, const SpeciesSpec&) = default;
};

inline const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names{
      "norms",         "conservation", "certificate", "quasi_positivity", "analytic",
      "weak_residual", "l2_uniformity", "l_n1_over_n", "anisotropic_l2",  "collapse",
      "duality",       "continuous_dependence"};
  return names;
}

struct Scenario {
  std::string name = "custom";
  int dim = 1;
  std::array<double, 2> lengths{1.0, 1.0};
  std::array<std::size_t, 2> cells{32, 1};
  double T = 1;
  double dt = 1e-3;
  double cfl = 0.9;
  /// When positive, dt is capped at reaction_dt_factor / max_j k_j.
  double reaction_dt_factor = 0;
  /// arithmetic or harmonic mean of neighbouring tensors on a face.
  std::string face_averaging = "arithmetic";
  std::vector<double> snapshot_times;
  std::uint64_t seed = 1;
  /// none, mass_action (needs a network) or exchange_pair.
  std::string kinetics = "none";
  std::optional<ReactionNetwork> network;
  std::vector<SpeciesSpec> species;
  std::vector<std::string> experiments;

  // Experiment parameters.
  std::vector<double> k_sweep{1, 10, 100, 1000, 10000};
  std::size_t refine_levels = 3;
  std::vector<std::string> exact;  // closed-form solution per species
  double analytic_tolerance = 1e-3;
  std::vector<double> concentration_factors{1, 4, 16, 64};
  std::array<double, 2> concentration_center{0.5, 0.5};
  std::vector<double> concentration_masses;
  std::string perturbation = "const:1";
  std::vector<double> perturbation_sizes{1e-2, 1e-3, 1e-4};
  std::size_t duality_ensemble = 50;
  std::vector<std::size_t> duality_levels{32, 64, 128};
  std::size_t probe_samples = 1000;

  bool wants(const std::string& experiment) const {
    return std::find(experiments.begin(), experiments.end(), experiment) != experiments.end();
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ---------------------------------------------------------------------------
// Number formatting (shortest round-trip form)

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text, const std::string& what) {
  double v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

inline std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(what + ": '" + text + "' is not a nonnegative integer");
  return v;
}

namespace detail {

template <class T>
std::string join_numbers(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    if constexpr (std::is_floating_point_v<T>) out += format_number(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<double> numbers_of(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split_whitespace(text)) out.push_back(parse_number(tok, what));
  return out;
}

inline std::vector<std::size_t> counts_of(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& tok : split_whitespace(text)) out.push_back(parse_count(tok, what));
  return out;
}

inline std::string join_words(const std::vector<std::string>& v, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline ReactionNetwork abc_network(const Rational& k = 1, const Rational& kappa = 1) {
  return ReactionNetwork(IntMatrix{{1, 1, 0}}, IntMatrix{{0, 0, 1}}, {k}, {kappa});
}

/// D = s [[1 + a, b], [b, 1 - a]] with a = sin(pi x)/2, b = cos(pi y)/4.
inline SpeciesSpec anisotropic_species(const std::string& name, double s, const std::string& initial) {
  const std::string hs = format_number(0.5 * s), qs = format_number(0.25 * s), ss = format_number(s);
  SpeciesSpec sp;
  sp.name = name;
  sp.diffusion = "full(trig:" + ss + "," + hs + ",sin,1,one,0|trig:0," + qs + ",one,0,cos,1|trig:0," + qs +
                 ",one,0,cos,1|trig:" + ss + ",-" + hs + ",sin,1,one,0)";
  sp.d_lo = 0.4 * s;
  sp.d_hi = 1.6 * s;
  sp.initial = initial;
  return sp;
}

} // namespace detail

inline std::vector<std::string> preset_names() { return {"examp22", "abc", "heat1d", "aniso2d"}; }

inline Scenario preset(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "heat1d") {
    s.dim = 1;
    s.cells = {128, 1};
    s.T = 0.1;
    s.dt = 1.0 / 16384;
    s.snapshot_times = {0.05, 0.1};
    s.species = {SpeciesSpec{"c", "iso(const:1)", 1, 1, "const:0|const:0", "trig:1,1,cos,1,one,0"}};
    s.exact = {"exptrig:1,1," + format_number(std::numbers::pi * std::numbers::pi) + ",cos,1,one,0"};
    s.experiments = {"norms", "analytic", "weak_residual", "quasi_positivity", "collapse", "duality"};
  } else if (name == "abc") {
    s.dim = 1;
    s.cells = {32, 1};
    s.T = 1;
    s.dt = 1e-3;
    s.reaction_dt_factor = 0.25;
    s.snapshot_times = {0.5, 1};
    s.kinetics = "mass_action";
    s.network = detail::abc_network();
    s.species = {SpeciesSpec{"C1", "iso(const:1)", 1, 1, "const:0|const:0", "trig:1,0.5,cos,1,one,0"},
                 SpeciesSpec{"C2", "iso(const:0.5)", 0.5, 0.5, "const:0|const:0", "trig:1,-0.5,cos,1,one,0"},
                 SpeciesSpec{"C3", "iso(const:0.25)", 0.25, 0.25, "const:0|const:0", "const:0.5"}};
    s.experiments = {"norms", "conservation", "certificate", "quasi_positivity", "weak_residual", "l2_uniformity",
                     "collapse"};
  } else if (name == "examp22") {
    s.dim = 1;
    s.cells = {64, 1};
    s.T = 0.5;
    s.dt = 1e-3;
    s.snapshot_times = {0.25, 0.5};
    s.kinetics = "exchange_pair";
    s.species = {SpeciesSpec{"c1", "iso(const:1)", 1, 1, "const:0|const:0", "trig:1,0.5,cos,1,one,0"},
                 SpeciesSpec{"c2", "iso(const:0.5)", 0.5, 0.5, "const:0|const:0", "trig:0.5,0.25,cos,2,one,0"}};
    s.perturbation = "trig:1,0.5,cos,1,one,0";
    s.experiments = {"norms", "quasi_positivity", "continuous_dependence", "collapse"};
  } else if (name == "aniso2d") {
    s.dim = 2;
    s.cells = {32, 32};
    s.T = 0.1;
    s.dt = 0.0025;
    s.snapshot_times = {0.05, 0.1};
    s.kinetics = "mass_action";
    s.network = detail::abc_network();
    s.species = {detail::anisotropic_species("C1", 1.0, "const:1"), detail::anisotropic_species("C2", 0.5, "const:1"),
                 detail::anisotropic_species("C3", 0.25, "const:0")};
    s.concentration_masses = {1, 1, 0};
    s.experiments = {"norms", "conservation", "certificate", "quasi_positivity", "l_n1_over_n", "anisotropic_l2",
                     "collapse"};
  } else {
    throw UnknownPreset(name);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Text form

inline std::string serialize(const Scenario& s) {
  std::ostringstream out;
  out << "[scenario]\n"
      << "name = " << s.name << '\n'
      << "dim = " << s.dim << '\n'
      << "lengths = " << format_number(s.lengths[0]);
  if (s.dim == 2) out << ' ' << format_number(s.lengths[1]);
  out << "\ncells = " << s.cells[0];
  if (s.dim == 2) out << ' ' << s.cells[1];
  out << "\nfinal_time = " << format_number(s.T) << '\n'
      << "dt = " << format_number(s.dt) << '\n'
      << "cfl = " << format_number(s.cfl) << '\n'
      << "reaction_dt_factor = " << format_number(s.reaction_dt_factor) << '\n'
      << "face_averaging = " << s.face_averaging << '\n'
      << "snapshot_times = " << detail::join_numbers(s.snapshot_times) << '\n'
      << "seed = " << s.seed << '\n'
      << "kinetics = " << s.kinetics << '\n'
      << "experiments = " << detail::join_words(s.experiments) << '\n';
  out << "\n[experiment]\n"
      << "k_sweep = " << detail::join_numbers(s.k_sweep) << '\n'
      << "refine_levels = " << s.refine_levels << '\n'
      << "exact = " << detail::join_words(s.exact, " ; ") << '\n'
      << "analytic_tolerance = " << format_number(s.analytic_tolerance) << '\n'
      << "concentration_factors = " << detail::join_numbers(s.concentration_factors) << '\n'
      << "concentration_center = " << format_number(s.concentration_center[0]) << ' '
      << format_number(s.concentration_center[1]) << '\n'
      << "concentration_masses = " << detail::join_numbers(s.concentration_masses) << '\n'
      << "perturbation = " << s.perturbation << '\n'
      << "perturbation_sizes = " << detail::join_numbers(s.perturbation_sizes) << '\n'
      << "duality_ensemble = " << s.duality_ensemble << '\n'
      << "duality_levels = " << detail::join_numbers(s.duality_levels) << '\n'
      << "probe_samples = " << s.probe_samples << '\n';
  if (s.network) {
    out << "\n[network]\n";
    write_network(out, *s.network);
  }
  for (std::size_t i = 0; i < s.species.size(); ++i) {
    const auto& sp = s.species[i];
    out << "\n[species." << i << "]\n"
        << "name = " << sp.name << '\n'
        << "diffusion = " << sp.diffusion << '\n'
        << "d_lo = " << format_number(sp.d_lo) << '\n'
        << "d_hi = " << format_number(sp.d_hi) << '\n'
        << "advection = " << sp.advection << '\n'
        << "initial = " << sp.initial << '\n';
  }
  return out.str();
}

namespace detail {

inline const std::string* optional_key(const KeyValueDocument::Section& s, const std::string& key) {
  const auto it = s.find(key);
  return it == s.end() ? nullptr : &it->second;
}

} // namespace detail

/// Checks names, counts and experiment prerequisites, and that every
/// coefficient expression parses and respects its declared bounds.
inline void validate(const Scenario& s) {
  if (s.dim != 1 && s.dim != 2) throw ConfigError("dim must be 1 or 2");
  if (!(s.T > 0)) throw ConfigError("final_time must be positive");
  if (!(s.dt > 0)) throw ConfigError("dt must be positive");
  if (!(s.cfl > 0 && s.cfl <= 1)) throw ConfigError("cfl must lie in (0, 1]");
  if (s.species.empty()) throw ConfigError("scenario has no species");
  if (s.kinetics == "mass_action") {
    if (!s.network) throw ConfigError("mass_action kinetics needs a [network] section");
    if (s.network->species() != s.species.size()) throw ConfigError("network and species sections disagree on the species count");
  } else if (s.kinetics == "exchange_pair") {
    if (s.species.size() != 2) throw ConfigError("exchange_pair kinetics needs exactly two species");
  } else if (s.kinetics != "none") {
    throw ConfigError("unknown kinetics '" + s.kinetics + "'");
  }
  std::set<std::string> seen;
  for (const auto& e : s.experiments) {
    if (std::find(known_experiments().begin(), known_experiments().end(), e) == known_experiments().end())
      throw ConfigError("unknown experiment '" + e + "'");
    if (!seen.insert(e).second) throw ConfigError("experiment '" + e + "' listed twice");
  }
  for (const auto& sp : s.species) {
    const auto parsed = parse_tensor(sp.diffusion);
    if (s.wants("l2_uniformity") && !parsed.isotropic)
      throw ConfigError("l2_uniformity needs scalar diffusions; species " + sp.name + " is anisotropic");
    parse_vector(sp.advection);
    ScalarExpr{sp.initial};
  }
  if ((s.wants("conservation") || s.wants("certificate") || s.wants("l2_uniformity")) && !s.network)
    throw ConfigError("conservation, certificate and l2_uniformity experiments need a reaction network");
  if (s.face_averaging != "arithmetic" && s.face_averaging != "harmonic")
    throw ConfigError("face_averaging must be arithmetic or harmonic");
  if (s.wants("l2_uniformity") && s.k_sweep.empty()) throw ConfigError("k_sweep is empty");
  if (s.wants("analytic") && s.exact.size() != s.species.size())
    throw ConfigError("analytic experiment needs one exact expression per species");
  for (const auto& e : s.exact) ScalarExpr{e};
  if ((s.wants("l_n1_over_n") || s.wants("anisotropic_l2")) && s.concentration_masses.size() != s.species.size())
    throw ConfigError("concentration_masses needs one entry per species");
  if (s.wants("continuous_dependence") && s.perturbation_sizes.size() < 2)
    throw ConfigError("continuous_dependence needs at least two perturbation sizes");
  if (s.wants("duality") && s.duality_levels.size() < 2) throw ConfigError("duality needs at least two grid levels");
  if (s.wants("weak_residual") && s.refine_levels < 2) throw ConfigError("weak_residual needs refine_levels >= 2");
  for (double f : s.concentration_factors)
    if (!(f >= 1)) throw ConfigError("concentration factors must be at least 1");
}

inline Scenario parse_scenario(std::string_view text) {
  const auto doc = KeyValueDocument::parse(text);
  const auto& sc = doc.section("scenario");
  Scenario s;
  s.name = require(sc, "name");
  s.dim = static_cast<int>(parse_count(require(sc, "dim"), "dim"));
  const auto lengths = detail::numbers_of(require(sc, "lengths"), "lengths");
  const auto cells = detail::counts_of(require(sc, "cells"), "cells");
  if (lengths.size() != static_cast<std::size_t>(s.dim) || cells.size() != static_cast<std::size_t>(s.dim))
    throw ConfigError("lengths and cells need one entry per dimension");
  s.lengths = {lengths[0], s.dim == 2 ? lengths[1] : 1.0};
  s.cells = {cells[0], s.dim == 2 ? cells[1] : 1};
  s.T = parse_number(require(sc, "final_time"), "final_time");
  s.dt = parse_number(require(sc, "dt"), "dt");
  if (const auto* v = detail::optional_key(sc, "cfl")) s.cfl = parse_number(*v, "cfl");
  if (const auto* v = detail::optional_key(sc, "reaction_dt_factor")) s.reaction_dt_factor = parse_number(*v, "reaction_dt_factor");
  if (const auto* v = detail::optional_key(sc, "face_averaging")) s.face_averaging = *v;
  if (const auto* v = detail::optional_key(sc, "snapshot_times")) s.snapshot_times = detail::numbers_of(*v, "snapshot_times");
  if (const auto* v = detail::optional_key(sc, "seed")) s.seed = parse_count(*v, "seed");
  if (const auto* v = detail::optional_key(sc, "kinetics")) s.kinetics = *v;
  if (const auto* v = detail::optional_key(sc, "experiments")) s.experiments = split_whitespace(*v);

  if (doc.has_section("experiment")) {
    const auto& ex = doc.section("experiment");
    if (const auto* v = detail::optional_key(ex, "k_sweep")) s.k_sweep = detail::numbers_of(*v, "k_sweep");
    if (const auto* v = detail::optional_key(ex, "refine_levels")) s.refine_levels = parse_count(*v, "refine_levels");
    if (const auto* v = detail::optional_key(ex, "exact")) {
      s.exact.clear();
      if (!v->empty())
        for (const auto& e : split(*v, ';')) s.exact.push_back(e);
    }
    if (const auto* v = detail::optional_key(ex, "analytic_tolerance")) s.analytic_tolerance = parse_number(*v, "analytic_tolerance");
    if (const auto* v = detail::optional_key(ex, "concentration_factors"))
      s.concentration_factors = detail::numbers_of(*v, "concentration_factors");
    if (const auto* v = detail::optional_key(ex, "concentration_center")) {
      const auto c = detail::numbers_of(*v, "concentration_center");
      if (c.size() != 2) throw ConfigError("concentration_center needs two numbers");
      s.concentration_center = {c[0], c[1]};
    }
    if (const auto* v = detail::optional_key(ex, "concentration_masses"))
      s.concentration_masses = detail::numbers_of(*v, "concentration_masses");
    if (const auto* v = detail::optional_key(ex, "perturbation")) s.perturbation = *v;
    if (const auto* v = detail::optional_key(ex, "perturbation_sizes"))
      s.perturbation_sizes = detail::numbers_of(*v, "perturbation_sizes");
    if (const auto* v = detail::optional_key(ex, "duality_ensemble")) s.duality_ensemble = parse_count(*v, "duality_ensemble");
    if (const auto* v = detail::optional_key(ex, "duality_levels")) s.duality_levels = detail::counts_of(*v, "duality_levels");
    if (const auto* v = detail::optional_key(ex, "probe_samples")) s.probe_samples = parse_count(*v, "probe_samples");
  }
  if (doc.has_section("network")) s.network = parse_network(doc.section("network"));

  for (std::size_t i = 0; doc.has_section("species." + std::to_string(i)); ++i) {
    const auto& sec = doc.section("species." + std::to_string(i));
    SpeciesSpec sp;
    sp.name = require(sec, "name");
    sp.diffusion = require(sec, "diffusion");
    sp.d_lo = parse_number(require(sec, "d_lo"), "d_lo");
    sp.d_hi = parse_number(require(sec, "d_hi"), "d_hi");
    if (const auto* v = detail::optional_key(sec, "advection")) sp.advection = *v;
    sp.initial = require(sec, "initial");
    s.species.push_back(std::move(sp));
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

// ---------------------------------------------------------------------------
// Building solver inputs

inline Grid make_grid(const Scenario& s) {
  return s.dim == 1 ? Grid::line(s.lengths[0], s.cells[0])
                    : Grid::rectangle(s.lengths[0], s.lengths[1], s.cells[0], s.cells[1]);
}

/// Network with every rate constant replaced by k (the fast-reaction sweep).
inline ReactionNetwork with_rate(const ReactionNetwork& net, const Rational& k) {
  return ReactionNetwork(net.alpha(), net.beta(), std::vector<Rational>(net.reactions(), k), net.kappa());
}

inline Kinetics make_kinetics(const Scenario& s) {
  if (s.kinetics == "mass_action") return Kinetics::mass_action(*s.network);
  if (s.kinetics == "exchange_pair") return exchange_pair_kinetics();
  return Kinetics::none(s.species.size());
}

inline std::vector<SpeciesTransport> make_transport(const Scenario& s, const Grid& grid) {
  std::vector<SpeciesTransport> out;
  std::vector<double> times{0.0, 0.5 * s.T, s.T};
  for (const auto& sp : s.species) {
    const TensorField d(parse_tensor(sp.diffusion).fn, sp.d_lo, sp.d_hi, s.dim);
    ellipticity_scan(d, grid, times);
    out.push_back({d, AdvectionField(parse_vector(sp.advection))});
  }
  return out;
}

inline State make_initial(const Scenario& s, const Grid& grid) {
  State st = make_state(s.species.size(), grid.cell_count());
  for (std::size_t i = 0; i < s.species.size(); ++i) {
    const ScalarExpr init(s.species[i].initial);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) st[i].values[c] = init(0.0, grid.center(c));
  }
  return st;
}

/// Rate constants as doubles, max over reactions (0 without a network).
inline double max_rate(const Scenario& s) {
  double k = 0;
  if (s.network && s.kinetics == "mass_action")
    for (const auto& v : s.network->k()) k = std::max(k, to_double(v));
  return k;
}

/// Solver configuration on `grid` with time step `dt`; the conservation
/// vector comes from the network certificate when one exists.
inline SimulationConfig make_config(const Scenario& s, const Grid& grid, double dt) {
  SimulationConfig cfg;
  cfg.grid = grid;
  cfg.transport = make_transport(s, grid);
  cfg.kinetics = make_kinetics(s);
  cfg.initial = make_initial(s, grid);
  cfg.T = s.T;
  const double k = max_rate(s);
  cfg.dt_init = (s.reaction_dt_factor > 0 && k > 0) ? std::min(dt, s.reaction_dt_factor / k) : dt;
  cfg.cfl = s.cfl;
  cfg.snapshot_times = s.snapshot_times;
  cfg.seed = s.seed;
  cfg.options.averaging = s.face_averaging == "harmonic" ? FaceAveraging::harmonic : FaceAveraging::arithmetic;
  if (s.network && s.kinetics == "mass_action") {
    try {
      std::vector<double> e;
      for (const auto& v : find_conservation_vector(*s.network)) e.push_back(to_double(v));
      cfg.conservation = e;
    } catch (const NoConservationVector&) {
    }
  }
  return cfg;
}

inline SimulationConfig make_config(const Scenario& s) { return make_config(s, make_grid(s), s.dt); }

} // namespace rdalab
