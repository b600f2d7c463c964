#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "rdalab/reaction_network.hpp"

namespace rdalab {

/// Generates a random mass-action network satisfying the four structural
/// hypotheses: linearly independent reaction vectors, mass-action rates,
/// a positive conservation vector, and one product per reaction.
///
/// Species carry positive integer "masses". Each reaction assembles a fresh,
/// heavier species from lighter ones whose masses add up exactly, so the mass
/// vector is conserved and each product row occurs once. Species and
/// reactions are shuffled at the end.
inline ReactionNetwork random_triangular_network(std::mt19937_64& rng, std::size_t max_species = 6) {
  auto uniform = [&rng](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  const auto species = static_cast<std::size_t>(uniform(2, static_cast<std::int64_t>(std::max<std::size_t>(2, max_species))));
  const auto base = static_cast<std::size_t>(uniform(1, static_cast<std::int64_t>(species) - 1));

  std::vector<std::int64_t> mass(species, 0);
  for (std::size_t i = 0; i < base; ++i) mass[i] = uniform(1, 3);

  std::vector<std::vector<std::int64_t>> alpha_rows;
  std::vector<std::size_t> products;
  for (std::size_t i = base; i < species; ++i) {
    std::vector<std::int64_t> alpha(species, 0);
    const auto reactants = static_cast<std::size_t>(uniform(1, std::min<std::int64_t>(3, static_cast<std::int64_t>(i))));
    std::int64_t total = 0;
    for (std::size_t n = 0; n < reactants; ++n) {
      const auto s = static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(i) - 1));
      const auto coefficient = uniform(1, 2);
      alpha[s] += coefficient;
      total += coefficient * mass[s];
    }
    mass[i] = total;
    alpha_rows.push_back(std::move(alpha));
    products.push_back(i);
  }

  const std::size_t reactions = products.size();
  std::vector<std::size_t> species_perm(species);
  std::iota(species_perm.begin(), species_perm.end(), std::size_t{0});
  std::shuffle(species_perm.begin(), species_perm.end(), rng);
  std::vector<std::size_t> reaction_perm(reactions);
  std::iota(reaction_perm.begin(), reaction_perm.end(), std::size_t{0});
  std::shuffle(reaction_perm.begin(), reaction_perm.end(), rng);

  IntMatrix alpha(reactions, species, 0);
  IntMatrix beta(reactions, species, 0);
  std::vector<Rational> k(reactions), kappa(reactions);
  for (std::size_t j = 0; j < reactions; ++j) {
    const std::size_t src = reaction_perm[j];
    for (std::size_t i = 0; i < species; ++i) alpha(j, species_perm[i]) = alpha_rows[src][i];
    beta(j, species_perm[products[src]]) = 1;
    k[j] = Rational(uniform(1, 20), uniform(1, 4));
    kappa[j] = uniform(0, 3) == 0 ? Rational(0) : Rational(uniform(1, 12), uniform(1, 4));
  }
  return ReactionNetwork(std::move(alpha), std::move(beta), std::move(k), std::move(kappa));
}

} // namespace rdalab
