#include <doctest.h>

#include "helm/graph_paths.hpp"
#include "oracles/graph_oracle.hpp"

#include <random>
#include <set>

using namespace helm;
using doctest::Approx;

namespace {
Eigen::MatrixXd random_weights(std::mt19937& rng, int n, double target_c) {
  std::uniform_real_distribution<double> U(0, 1);
  Eigen::MatrixXd W(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) W(i, j) = U(rng) < 0.25 ? 0.0 : U(rng);
  // c is increasing in a global scale s; bisect for c(s W) = target_c.
  double lo = 0, hi = 1;
  while (oracle::simple_loop_weight(hi * W) < target_c) hi *= 2;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (oracle::simple_loop_weight(mid * W) < target_c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) * W;
}
}  // namespace

TEST_CASE("two-node example certifies with c = 1/2") {
  Eigen::MatrixXd W(2, 2);
  W << 0, 0.5, 0.5, 0;
  const auto r = certify_bound(WeightedDigraph<double>(W));
  CHECK(r.c == Approx(0.5));
  CHECK(r.pass());
  // Neumann series in closed form: (I - W)^{-1}.
  const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(2, 2) - W).inverse();
  CHECK((r.S - inv).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("simple-path matrix and loop sum match brute-force enumeration") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int n = 1; n <= 5; ++n) {
    Eigen::MatrixXd W(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) W(i, j) = U(rng);
    const WeightedDigraph<double> g(W);
    CHECK((simple_path_matrix(g) - oracle::simple_path_sums(W)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(simple_loop_sum(g) == Approx(oracle::simple_loop_weight(W)).epsilon(1e-12));
    const auto loops = enumerate_simple_loops(g);
    double c = 0;
    for (const auto& l : loops.loops) {
      CHECK(is_simple_loop(l));
      c += g.weight(l);
    }
    CHECK(c == Approx(loops.c).epsilon(1e-12));
  }
}

TEST_CASE("certified bounds hold for random graphs with c < 1") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const double c = 0.1 + 0.8 * (trial % 9) / 8.0;
    const auto r = certify_bound(WeightedDigraph<double>(random_weights(rng, n, c)));
    CHECK(r.c == Approx(c).epsilon(1e-9));
    CHECK(r.pass());
  }
}

TEST_CASE("graphs with c >= 1 are reported as condition failures") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(3, 3, 0.9);
  const auto r = certify_bound(WeightedDigraph<double>(W));
  CHECK(r.c >= 1.0);
  CHECK(r.status == CertStatus::ConditionFailed);
}

TEST_CASE("weight matrices are validated") {
  Eigen::MatrixXd bad(2, 3);
  bad.setZero();
  CHECK_THROWS(WeightedDigraph<double>(bad));
  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(2, 2);
  neg(0, 1) = -1;
  CHECK_THROWS(WeightedDigraph<double>(neg));
  CHECK_THROWS_AS(simple_loop_sum(WeightedDigraph<double>(Eigen::MatrixXd::Zero(13, 13))), DomainError);
}

TEST_CASE("worked decomposition examples") {
  const LoopDecomposition d = loop_decompose(Path::from_nodes({1, 2, 3, 2, 4}));
  CHECK(d.spine == Path::from_nodes({1, 2, 4}));
  REQUIRE(d.loops.size() == 1);
  CHECK(d.loops[0] == Path::from_nodes({2, 3, 2}));
  const LoopDecomposition self = loop_decompose(Path::from_nodes({1, 1}));
  CHECK(self.spine.empty());
  REQUIRE(self.loops.size() == 1);
  CHECK(self.loops[0] == Path::from_nodes({1, 1}));
  const FirstLoop simple = first_loop(Path::from_nodes({1, 2, 1}));
  CHECK(simple.loop == Path::from_nodes({1, 2, 1}));
  CHECK(simple.remainder.empty());
  CHECK(splice(Path::from_nodes({1, 2, 3}), 2, 2).empty());
  CHECK_THROWS(splice(Path::from_nodes({1, 2, 3}), 0, 2));
}

TEST_CASE("loop enumeration counts rotations separately") {
  Eigen::MatrixXd W(2, 2);
  W << 0, 0.3, 0.7, 0;
  const auto loops = enumerate_simple_loops(WeightedDigraph<double>(W));
  CHECK(loops.loops.size() == 2);
  CHECK(loops.c == Approx(2 * 0.3 * 0.7));
  CHECK(simple_path_matrix(WeightedDigraph<double>(W)) == (Eigen::MatrixXd(2, 2) << 1, 0.3, 0.7, 1).finished());
  CHECK(simple_loop_sum(WeightedDigraph<double>(Eigen::MatrixXd::Zero(3, 3))) == 0.0);
}

TEST_CASE("path algebra: splice, concat and the first loop") {
  const Path p = Path::from_nodes({0, 1, 2, 1, 3});
  CHECK(p.size() == 4);
  CHECK(p.is_chained());
  CHECK(splice(p, 2, 4) == Path::from_nodes({1, 2, 1}));
  CHECK(concat(splice(p, 1, 2), splice(p, 2, 5)) == p);
  const FirstLoop fl = first_loop(p);
  REQUIRE(fl.start);
  CHECK(*fl.start == 2);
  CHECK(fl.loop == Path::from_nodes({1, 2, 1}));
  CHECK(fl.remainder == Path::from_nodes({0, 1, 3}));
  CHECK(is_non_intersecting(fl.remainder));
  CHECK_FALSE(first_loop(Path::from_nodes({0, 1, 2})).start);
}

TEST_CASE("loop decomposition is injective and conserves edges and length on all short walks") {
  std::set<LoopDecomposition> seen;
  for (int L = 0; L <= 6; ++L) {
    for (const auto& nodes : oracle::all_walks(4, 0, 2, L)) {
      const Path p = Path::from_nodes(nodes);
      const LoopDecomposition d = loop_decompose(p);
      CHECK(is_non_intersecting(d.spine));
      std::multiset<Edge> before(p.edges.begin(), p.edges.end()), after(d.spine.edges.begin(), d.spine.edges.end());
      int total = d.spine.size();
      for (const auto& l : d.loops) {
        CHECK(is_simple_loop(l));
        after.insert(l.edges.begin(), l.edges.end());
        total += l.size();
      }
      CHECK(before == after);
      CHECK(total == p.size());
      CHECK(seen.insert(d).second);
    }
  }
}
