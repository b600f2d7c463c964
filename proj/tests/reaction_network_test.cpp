#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "rdalab/kinetics.hpp"
#include "rdalab/network_io.hpp"
#include "rdalab/random_network.hpp"
#include "rdalab/reaction_network.hpp"

using namespace rdalab;

namespace {

Rational R(long long n, long long d = 1) { return Rational(n, d); }

// C1 + C2 <=> C3
ReactionNetwork abc_network(Rational k = 1, Rational kappa = R(1, 2)) {
  return ReactionNetwork(IntMatrix{{1, 1, 0}}, IntMatrix{{0, 0, 1}}, {k}, {kappa});
}

// C1 + C2 <=> C3, C1 + C3 <=> C4
ReactionNetwork chain_network() {
  return ReactionNetwork(IntMatrix{{1, 1, 0, 0}, {1, 0, 1, 0}}, IntMatrix{{0, 0, 1, 0}, {0, 0, 0, 1}}, {R(1), R(2)},
                         {R(1, 3), R(1)});
}

// Independent predicate for the staircase form: pivot row m is strictly
// negative on its own block, earlier pivot rows vanish on later blocks.
bool in_staircase_form(const IntMatrix& m, const std::vector<std::size_t>& blocks) {
  if (std::accumulate(blocks.begin(), blocks.end(), std::size_t{0}) != m.cols()) return false;
  if (blocks.size() > m.rows()) return false;
  std::size_t start = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b] == 0) return false;
    for (std::size_t j = start; j < start + blocks[b]; ++j) {
      if (m(b, j) >= 0) return false;
      for (std::size_t r = 0; r < b; ++r)
        if (m(r, j) != 0) return false;
    }
    start += blocks[b];
  }
  return true;
}

// All compositions of n into positive parts.
void compositions(std::size_t n, std::vector<std::size_t>& cur, std::vector<std::vector<std::size_t>>& out) {
  if (n == 0) {
    out.push_back(cur);
    return;
  }
  for (std::size_t first = 1; first <= n; ++first) {
    cur.push_back(first);
    compositions(n - first, cur, out);
    cur.pop_back();
  }
}

} // namespace

TEST(CheckA1, SingleReactionIsIndependent) { EXPECT_TRUE(check_a1(abc_network())); }

TEST(CheckA1, ProportionalColumnsAreDependent) {
  // omega_2 = 2 omega_1: C1 -> C2 and 2C1 -> 2C2 (beta not single-product, but a1 does not care).
  ReactionNetwork net(IntMatrix{{1, 0}, {2, 0}}, IntMatrix{{0, 1}, {0, 2}}, {R(1), R(1)}, {R(0), R(0)});
  EXPECT_FALSE(check_a1(net));
}

TEST(CheckA1, TwoReactionRankByHand) {
  // 2C1 -> C2, C1 + C2 -> C3: omega = (-2,1,0), (-1,-1,1). Eliminating
  // the first column leaves (0, 3, -2) for the second row, so rank 2.
  ReactionNetwork net(IntMatrix{{2, 0, 0}, {1, 1, 0}}, IntMatrix{{0, 1, 0}, {0, 0, 1}}, {R(1), R(1)}, {R(0), R(0)});
  EXPECT_TRUE(check_a1(net));
  EXPECT_EQ(integer_rank(net.stoichiometric_matrix()), 2u);
}

TEST(IntegerRank, MatchesKnownRanks) {
  EXPECT_EQ(integer_rank(IntMatrix{{0, 0}, {0, 0}}), 0u);
  EXPECT_EQ(integer_rank(IntMatrix{{1, 2, 3}, {2, 4, 6}, {1, 0, 1}}), 2u);
  EXPECT_EQ(integer_rank(IntMatrix{{0, 1}, {1, 0}, {1, 1}}), 2u);
  EXPECT_EQ(integer_rank(IntMatrix{{2, 4, 1}, {6, 3, 5}, {4, -1, 4}}), 2u);
}

TEST(ConservationVector, AbcIsOneOneTwo) {
  const auto e = find_conservation_vector(abc_network());
  EXPECT_EQ(e, (std::vector<Rational>{R(1), R(1), R(2)}));
}

TEST(ConservationVector, AutocatalyticLoopHasNone) {
  // C1 <=> 2C1: omega = (1).
  ReactionNetwork net(IntMatrix{{1}}, IntMatrix{{2}}, {R(1)}, {R(1)});
  EXPECT_THROW(find_conservation_vector(net), NoConservationVector);
}

TEST(ConservationVector, ChainAgainstHandNullspace) {
  // Nullspace of M^T: e3 = e1 + e2, e4 = e1 + e3 = 2 e1 + e2. Sum is 4 e1 + 3 e2,
  // minimized over e >= 1 at e1 = e2 = 1.
  const auto net = chain_network();
  const auto e = find_conservation_vector(net);
  EXPECT_EQ(e, (std::vector<Rational>{R(1), R(1), R(2), R(3)}));
  for (std::size_t j = 0; j < net.reactions(); ++j) {
    Rational dot = 0;
    for (std::size_t i = 0; i < net.species(); ++i) dot += e[i] * net.omega()(j, i);
    EXPECT_EQ(dot, 0);
  }
}

TEST(CheckA4, SingleUnitProduct) {
  EXPECT_TRUE(check_a4(abc_network()));
  ReactionNetwork two_products(IntMatrix{{0, 0, 1}}, IntMatrix{{1, 1, 0}}, {R(1)}, {R(0)});
  EXPECT_FALSE(check_a4(two_products));
  ReactionNetwork doubled(IntMatrix{{1, 0, 0}}, IntMatrix{{0, 2, 0}}, {R(1)}, {R(0)});
  EXPECT_FALSE(check_a4(doubled));
}

TEST(Triangularize, SingleColumnTrace) {
  // M = (-1,-1,1)^T: row 0 is the first nonpositive nonzero row.
  const auto form = triangularize(IntMatrix{{-1}, {-1}, {1}});
  EXPECT_EQ(form.row_perm, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(form.col_perm, (std::vector<std::size_t>{0}));
  EXPECT_EQ(form.block_sizes, (std::vector<std::size_t>{1}));
}

TEST(Triangularize, FixedPointOnStaircaseInput) {
  const IntMatrix m{{-1, 0, 0}, {2, -1, -2}, {0, 1, 0}, {-1, 0, 1}};
  const auto form = triangularize(m);
  EXPECT_EQ(form.row_perm, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(form.col_perm, (std::vector<std::size_t>{0, 1, 2}));
  ASSERT_TRUE(in_staircase_form(m, form.block_sizes));
}

TEST(Triangularize, ChainAgainstExhaustiveSearch) {
  const IntMatrix m = chain_network().stoichiometric_matrix();
  // Oracle: every (row perm, col perm, block partition) that satisfies the staircase predicate.
  std::set<std::tuple<std::vector<std::size_t>, std::vector<std::size_t>, std::vector<std::size_t>>> valid;
  std::vector<std::vector<std::size_t>> parts;
  std::vector<std::size_t> cur;
  compositions(m.cols(), cur, parts);
  std::vector<std::size_t> rp(m.rows());
  std::iota(rp.begin(), rp.end(), std::size_t{0});
  do {
    std::vector<std::size_t> cp(m.cols());
    std::iota(cp.begin(), cp.end(), std::size_t{0});
    do {
      const auto pm = permute(m, rp, cp);
      for (const auto& blocks : parts)
        if (in_staircase_form(pm, blocks)) valid.insert({rp, cp, blocks});
    } while (std::next_permutation(cp.begin(), cp.end()));
  } while (std::next_permutation(rp.begin(), rp.end()));
  ASSERT_FALSE(valid.empty());

  const auto form = triangularize(m);
  EXPECT_TRUE(valid.count({form.row_perm, form.col_perm, form.block_sizes}));
}

TEST(Triangularize, StuckWithoutNonpositiveRow) {
  EXPECT_THROW(triangularize(IntMatrix{{1, -1}, {-1, 1}}), StructureViolation);
  EXPECT_THROW(triangularize(IntMatrix{{1}, {1}, {-2}}), StructureViolation);  // two positives
}

TEST(Triangularize, InvariantUnderShuffles) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_triangular_network(rng);
    IntMatrix m = net.stoichiometric_matrix();
    std::vector<std::size_t> rp(m.rows()), cp(m.cols());
    std::iota(rp.begin(), rp.end(), std::size_t{0});
    std::iota(cp.begin(), cp.end(), std::size_t{0});
    std::shuffle(rp.begin(), rp.end(), rng);
    std::shuffle(cp.begin(), cp.end(), rng);
    const IntMatrix shuffled = permute(m, rp, cp);
    const auto form = triangularize(shuffled);
    EXPECT_TRUE(in_staircase_form(permute(shuffled, form.row_perm, form.col_perm), form.block_sizes));
  }
}

TEST(BuildQ, SingleColumnExample) {
  const RationalMatrix mp{{R(-1)}, {R(-1)}, {R(1)}};
  const std::vector<std::size_t> blocks{1};
  const auto q = build_Q(mp, blocks);
  EXPECT_EQ(q, (RationalMatrix{{R(1), R(0), R(0)}, {R(0), R(1), R(0)}, {R(1), R(0), R(1)}}));
  EXPECT_EQ(q * mp, (RationalMatrix{{R(-1)}, {R(-1)}, {R(0)}}));
}

TEST(BuildQ, NothingToCancelGivesIdentity) {
  const RationalMatrix mp{{R(-1), R(0)}, {R(0), R(-2)}, {R(-1), R(-1)}};
  const std::vector<std::size_t> blocks{1, 1};
  EXPECT_EQ(build_Q(mp, blocks), RationalMatrix::identity(3));
}

TEST(BuildQ, ZeroPivotCannotCancel) {
  const RationalMatrix mp{{R(0)}, {R(1)}};
  const std::vector<std::size_t> blocks{1};
  EXPECT_THROW(build_Q(mp, blocks), StructureViolation);
}

TEST(BuildQ, ChainCertificateByHand) {
  const auto cert = certify(chain_network());
  // Pivot row (-1,-1); row C3 = (1,-1) and row C4 = (0,1) each need one copy.
  EXPECT_EQ(cert.Q, (RationalMatrix{{R(1), R(0), R(0), R(0)},
                                    {R(0), R(1), R(0), R(0)},
                                    {R(1), R(0), R(1), R(0)},
                                    {R(1), R(0), R(0), R(1)}}));
  EXPECT_TRUE(verify_certificate(chain_network(), cert).empty());
}

TEST(ComputeQ, HandEvaluation) {
  const RationalMatrix Q{{R(1), R(0)}, {R(-3), R(2)}};
  const std::vector<Rational> b{R(1), R(1)};
  // eps = 1: q1 = -2; eps = 1/2: q1 = -1/2; eps = 1/4: q1 = 1/4, q2 = 1/2.
  const auto combo = compute_q(Q, b);
  EXPECT_EQ(combo.eps, R(1, 4));
  EXPECT_EQ(combo.q, (std::vector<Rational>{R(1, 4), R(1, 2)}));
  EXPECT_EQ(combo.b0, R(5, 4));
}

TEST(ComputeQ, IdentityNeedsNoHalving) {
  const auto combo = compute_q(RationalMatrix::identity(3), std::vector<Rational>(3, R(0)));
  EXPECT_EQ(combo.eps, R(1));
  EXPECT_EQ(combo.q, std::vector<Rational>(3, R(1)));
  EXPECT_EQ(combo.b0, R(0));
}

TEST(ComputeQ, AbcCertificateIsPositive) {
  const auto cert = certify(abc_network());
  for (const auto& v : cert.q) EXPECT_GT(v, 0);
}

TEST(DeriveB, IrreversibleGivesZero) {
  const auto cert = certify(abc_network(R(3), R(0)));
  EXPECT_EQ(cert.b, std::vector<Rational>(3, R(0)));
  EXPECT_EQ(cert.b0, 0);
}

TEST(DeriveB, AbcHandEvaluation) {
  const auto cert = certify(abc_network(R(1), R(1, 2)));
  EXPECT_EQ(cert.b, (std::vector<Rational>{R(1, 2), R(1, 2), R(0)}));
}

TEST(DeriveB, SampledLinearBoundOnRandomNetworks) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_triangular_network(rng);
    const auto cert = certify(net);
    // Floating-point oracle: evaluate Q F(c) directly and compare to (1 + sum c) b.
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    for (int s = 0; s < 100; ++s) {
      std::vector<double> c(net.species());
      for (auto& v : c) v = dist(rng);
      const auto f = production<double>(net, c);
      const double total = 1.0 + std::accumulate(c.begin(), c.end(), 0.0);
      for (std::size_t i = 0; i < net.species(); ++i) {
        double qf = 0;
        for (std::size_t j = 0; j <= i; ++j) qf += to_double(cert.Q(i, j)) * f[cert.row_perm[j]];
        EXPECT_LE(qf, total * to_double(cert.b[i]) + 1e-9);
      }
    }
  }
}

TEST(Rates, HandEvaluation) {
  const auto net = abc_network(R(1), R(1, 2));
  const std::vector<Rational> c{R(2), R(3), R(1)};
  EXPECT_EQ(rates(net, c), (std::vector<Rational>{R(11, 2)}));
  EXPECT_EQ(production(net, c), (std::vector<Rational>{R(-11, 2), R(-11, 2), R(11, 2)}));
}

TEST(Rates, ZeroStateAndIrreversible) {
  const auto net = abc_network(R(1), R(1, 2));
  EXPECT_EQ(rates(net, std::vector<double>{0, 0, 0})[0], 0.0);
  const auto irreversible = abc_network(R(1), R(0));
  EXPECT_DOUBLE_EQ(rates(irreversible, std::vector<double>{2, 3, 7})[0], 6.0);
}

TEST(Rates, ZeroToTheZeroIsOne) {
  // C2 -> C1 with alpha = (0,1): c1 = 0 does not annihilate the rate.
  ReactionNetwork net(IntMatrix{{0, 1}}, IntMatrix{{1, 0}}, {R(1)}, {R(0)});
  EXPECT_DOUBLE_EQ(rates(net, std::vector<double>{0.0, 4.0})[0], 4.0);
}

TEST(Rates, NegativeStateIsDomainError) {
  EXPECT_THROW(rates(abc_network(), std::vector<double>{-1, 0, 0}), DomainError);
}

TEST(Production, EquilibriumIsZero) {
  const auto net = abc_network(R(1), R(1, 2));
  EXPECT_EQ(production(net, std::vector<Rational>{R(1), R(1), R(2)}), std::vector<Rational>(3, R(0)));
}

TEST(Production, AtomConservationIsExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto net = random_triangular_network(rng);
    const auto e = find_conservation_vector(net);
    std::vector<Rational> c(net.species());
    for (auto& v : c) v = Rational(static_cast<long long>(rng() % 50), static_cast<long long>(rng() % 7 + 1));
    const auto f = production(net, c);
    Rational dot = 0;
    for (std::size_t i = 0; i < f.size(); ++i) dot += e[i] * f[i];
    EXPECT_EQ(dot, 0);
  }
}

TEST(QuasiPositivity, BoundaryStateByHand) {
  const auto net = abc_network(R(1), R(1, 2));
  // c1 = 0: forward rate vanishes, F1 = k kappa c3 = 1.
  const auto f = production<double>(net, std::vector<double>{0, 5, 2});
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  const auto at_zero = production<double>(net, std::vector<double>{0, 0, 0});
  for (double v : at_zero) EXPECT_GE(v, 0.0);
}

TEST(QuasiPositivity, SampledProbe) {
  const auto report = quasi_positivity_probe(abc_network(), 1000, 42);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.violations, 0u);
  EXPECT_GE(report.worst_margin, -1e-12);
  EXPECT_TRUE(quasi_positivity_probe(exchange_pair_kinetics(), 1000, 42).passed);
}

TEST(Certificate, RandomNetworksPassExactChecks) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto net = random_triangular_network(rng);
    ASSERT_TRUE(check_a1(net));
    ASSERT_TRUE(check_a4(net));
    const auto cert = certify(net);
    const auto failures = verify_certificate(net, cert);
    EXPECT_TRUE(failures.empty()) << failures.front();
    const auto probe = certificate_bound_probe(net, cert, 100, 1000 + static_cast<std::uint64_t>(trial));
    EXPECT_GE(probe.worst_triangular_margin, -1e-9);
    EXPECT_GE(probe.worst_combination_margin, -1e-9);
  }
}

TEST(NetworkIo, ParseAndCertificateRoundTrip) {
  const auto net = parse_network("species = 3\nreactions = 1\nalpha = 1 1 0\nbeta = 0 0 1\nk = 1\nkappa = 1/2\n");
  EXPECT_EQ(net, abc_network(R(1), R(1, 2)));
  EXPECT_THROW(parse_network("species = 3\nreactions = 1\nalpha = 1 1 0\nbeta = 0 0 1\nk = 1\nkappa = 1/2\nomega = 1 1 1\n"),
               DomainError);

  std::ostringstream net_text;
  write_network(net_text, chain_network());
  EXPECT_EQ(parse_network(net_text.str()), chain_network());

  const auto cert = certify(chain_network());
  std::ostringstream out;
  write_certificate(out, cert);
  EXPECT_EQ(parse_certificate(out.str()), cert);
}

TEST(NetworkIo, DecimalLiteralsAreExact) {
  EXPECT_EQ(parse_rational("0.05"), R(1, 20));
  EXPECT_EQ(parse_rational("-007/14"), R(-1, 2));
  EXPECT_THROW(parse_rational("1/0"), ConfigError);
  EXPECT_THROW(parse_rational("abc"), ConfigError);
}
