#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lagan/emd.hpp"
#include "lagan/rng.hpp"
#include "lp_oracle.hpp"

using namespace lagan;

namespace {

SparsePmf random_sparse_pmf(SplitRng& rng, int extent, int max_support) {
  const int support = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_support)));
  SparsePmf p;
  double total = 0.0;
  for (int k = 0; k < support; ++k) {
    int i = static_cast<int>(rng.below(static_cast<uint64_t>(extent)));
    int j = static_cast<int>(rng.below(static_cast<uint64_t>(extent)));
    double mass = rng.uniform(0.05, 1.0);
    p.coords.emplace_back(i, j);
    p.mass.push_back(mass);
    total += mass;
  }
  for (double& v : p.mass) v /= total;
  return p;
}

PmfGrid delta_grid(int i, int j) {
  PmfGrid g;
  g.window = {0.0, 1.0, 0.0, 1.0};
  g.mass.assign(PmfGrid::kExtent * PmfGrid::kExtent, 0.0);
  g.mass[static_cast<size_t>(i * PmfGrid::kExtent + j)] = 1.0;
  g.count = 1;
  return g;
}

}  // namespace

TEST_CASE("build_pmf places samples in the expected bins") {
  PmfWindow w{0.0, 40.0, 0.0, 4.0};
  PmfGrid g = build_pmf({{0.5, 0.05}}, w);
  REQUIRE(g.mass[0] == 1.0);
  REQUIRE(g.total() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(g.clipped == 0);

  // one sample per bin center -> uniform pmf
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) samples.emplace_back(0.5 + i, 0.05 + 0.1 * j);
  PmfGrid u = build_pmf(samples, w);
  for (double v : u.mass) REQUIRE(v == Catch::Approx(1.0 / 1600.0).epsilon(1e-12));

  // out-of-window samples clip into edge bins and are counted
  PmfGrid c = build_pmf({{-5.0, 2.0}, {20.0, 99.0}}, w);
  REQUIRE(c.clipped == 2);
  REQUIRE(c.total() == Catch::Approx(1.0).margin(1e-12));

  REQUIRE_THROWS_AS(build_pmf({}, w), Error);
}

TEST_CASE("build_pmf matches a histogram-count oracle") {
  SplitRng rng(401);
  PmfWindow w{-2.0, 3.0, 0.0, 1.0};
  std::vector<std::pair<double, double>> samples;
  for (int k = 0; k < 500; ++k) samples.emplace_back(rng.uniform(-2.0, 3.0), rng.uniform01());
  PmfGrid g = build_pmf(samples, w);

  std::vector<long> counts(PmfGrid::kExtent * PmfGrid::kExtent, 0);
  for (auto [m, t] : samples) {
    int i = std::min(static_cast<int>((m + 2.0) / 5.0 * 40), 39);
    int j = std::min(static_cast<int>(t * 40), 39);
    ++counts[static_cast<size_t>(i * 40 + j)];
  }
  for (size_t k = 0; k < counts.size(); ++k)
    REQUIRE(g.mass[k] == Catch::Approx(counts[k] / 500.0).margin(1e-12));
}

TEST_CASE("emd of identical pmfs is zero") {
  SplitRng rng(409);
  for (int trial = 0; trial < 5; ++trial) {
    SparsePmf p = random_sparse_pmf(rng, 8, 10);
    REQUIRE(emd_sparse(p, p) == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("point mass moved from (0,0) to (3,4) costs exactly 5") {
  SparsePmf p, q;
  p.coords.emplace_back(0, 0);
  p.mass.push_back(1.0);
  q.coords.emplace_back(3, 4);
  q.mass.push_back(1.0);
  REQUIRE(emd_sparse(p, q) == 5.0);

  PmfGrid gp = delta_grid(0, 0), gq = delta_grid(3, 4);
  REQUIRE(emd(gp, gq) == 5.0);
}

TEST_CASE("emd matches the dense LP oracle on random sparse pairs") {
  SplitRng rng(419);
  for (int trial = 0; trial < 60; ++trial) {
    int extent = 3 + static_cast<int>(rng.below(6));  // up to 8x8
    SparsePmf p = random_sparse_pmf(rng, extent, 12);
    SparsePmf q = random_sparse_pmf(rng, extent, 12);
    double fast = emd_sparse(p, q);
    double oracle = lagan_test::lp_emd(detail::canonical(p), detail::canonical(q));
    REQUIRE(fast == Catch::Approx(oracle).margin(1e-9));
  }
}

TEST_CASE("emd satisfies metric axioms on random triples") {
  SplitRng rng(421);
  for (int trial = 0; trial < 15; ++trial) {
    SparsePmf a = random_sparse_pmf(rng, 6, 8);
    SparsePmf b = random_sparse_pmf(rng, 6, 8);
    SparsePmf c = random_sparse_pmf(rng, 6, 8);
    double ab = emd_sparse(a, b);
    double ba = emd_sparse(b, a);
    double ac = emd_sparse(a, c);
    double cb = emd_sparse(c, b);
    REQUIRE(ab >= 0.0);
    REQUIRE(ab == Catch::Approx(ba).margin(1e-9));
    REQUIRE(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("emd never exceeds the grid diameter") {
  SplitRng rng(431);
  const double diameter = std::sqrt(2.0) * 39.0;
  for (int trial = 0; trial < 10; ++trial) {
    SparsePmf p = random_sparse_pmf(rng, 40, 30);
    SparsePmf q = random_sparse_pmf(rng, 40, 30);
    double d = emd_sparse(p, q);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= diameter + 1e-9);
  }
}

TEST_CASE("emd input validation") {
  SparsePmf p, q;
  p.coords.emplace_back(0, 0);
  p.mass.push_back(1.0);
  q.coords.emplace_back(1, 1);
  q.mass.push_back(0.5);
  REQUIRE_THROWS_AS(emd_sparse(p, q), Error);  // unequal total mass

  PmfGrid a = delta_grid(0, 0);
  PmfGrid b = delta_grid(1, 1);
  b.window.m_max = 2.0;
  REQUIRE_THROWS_AS(emd(a, b), Error);  // mismatched windows
}
