#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdalab/reaction_network.hpp"

namespace rdalab {

/// Pointwise reaction term f(c) used by the solver. Wraps either a
/// mass-action network or a hand-written model.
class Kinetics {
public:
  using Evaluator = std::function<void(std::span<const double> c, std::span<double> f)>;

  Kinetics(std::size_t species, Evaluator evaluator, std::string name)
      : species_(species), evaluator_(std::move(evaluator)), name_(std::move(name)) {}

  static Kinetics none(std::size_t species) {
    return Kinetics(species, [](std::span<const double>, std::span<double> f) { std::fill(f.begin(), f.end(), 0.0); },
                    "none");
  }

  static Kinetics mass_action(const ReactionNetwork& net) {
    struct Compiled {
      std::size_t p, r;
      std::vector<std::int64_t> alpha, beta, omega;
      std::vector<double> k, kappa;
    };
    auto compiled = std::make_shared<Compiled>();
    compiled->p = net.species();
    compiled->r = net.reactions();
    for (std::size_t j = 0; j < compiled->r; ++j) {
      for (std::size_t i = 0; i < compiled->p; ++i) {
        compiled->alpha.push_back(net.alpha()(j, i));
        compiled->beta.push_back(net.beta()(j, i));
        compiled->omega.push_back(net.omega()(j, i));
      }
      compiled->k.push_back(to_double(net.k()[j]));
      compiled->kappa.push_back(to_double(net.kappa()[j]));
    }
    Kinetics out(
        net.species(),
        [compiled](std::span<const double> c, std::span<double> f) {
          const auto& m = *compiled;
          std::fill(f.begin(), f.end(), 0.0);
          for (std::size_t j = 0; j < m.r; ++j) {
            double forward = 1.0;
            double backward = 1.0;
            for (std::size_t i = 0; i < m.p; ++i) {
              for (std::int64_t n = 0; n < m.alpha[j * m.p + i]; ++n) forward *= c[i];
              for (std::int64_t n = 0; n < m.beta[j * m.p + i]; ++n) backward *= c[i];
            }
            const double flux = m.k[j] * (forward - m.kappa[j] * backward);
            for (std::size_t i = 0; i < m.p; ++i)
              if (m.omega[j * m.p + i] != 0) f[i] += static_cast<double>(m.omega[j * m.p + i]) * flux;
          }
        },
        "mass_action");
    out.network_ = std::make_shared<const ReactionNetwork>(net);
    return out;
  }

  std::size_t species() const noexcept { return species_; }
  const std::string& name() const noexcept { return name_; }

  /// The underlying network, when this term is mass-action.
  const ReactionNetwork* network() const noexcept { return network_.get(); }

  void operator()(std::span<const double> c, std::span<double> f) const { evaluator_(c, f); }

  std::vector<double> operator()(std::span<const double> c) const {
    std::vector<double> f(species_);
    evaluator_(c, f);
    return f;
  }

private:
  std::size_t species_;
  Evaluator evaluator_;
  std::string name_;
  std::shared_ptr<const ReactionNetwork> network_;
};

/// Two-species exchange model
///   f1 = c2 - c1 h(c1, c2),  f2 = c1 + c1 h(c1, c2),  with h = c1 c2.
inline Kinetics exchange_pair_kinetics() {
  return Kinetics(
      2,
      [](std::span<const double> c, std::span<double> f) {
        const double h = c[0] * c[1];
        f[0] = c[1] - c[0] * h;
        f[1] = c[0] + c[0] * h;
      },
      "exchange_pair");
}

struct QuasiPositivityReport {
  bool passed = true;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min F_i(c) with c_i = 0
};

/// Samples c in [0, upper]^P with c_i = 0 (i cycling through species) and
/// checks F_i(c) >= -tolerance.
inline QuasiPositivityReport quasi_positivity_probe(const Kinetics& kinetics, std::size_t samples, std::uint64_t seed,
                                                    double tolerance = 1e-12, double upper = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, upper);
  const std::size_t p = kinetics.species();
  QuasiPositivityReport report;
  report.samples = samples;
  std::vector<double> c(p), f(p);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t zero = s % p;
    for (auto& v : c) v = dist(rng);
    c[zero] = 0.0;
    kinetics(c, f);
    report.worst_margin = std::min(report.worst_margin, f[zero]);
    if (f[zero] < -tolerance) ++report.violations;
  }
  report.passed = report.violations == 0;
  return report;
}

inline QuasiPositivityReport quasi_positivity_probe(const ReactionNetwork& net, std::size_t samples, std::uint64_t seed,
                                                    double tolerance = 1e-12) {
  return quasi_positivity_probe(Kinetics::mass_action(net), samples, seed, tolerance);
}

} // namespace rdalab
