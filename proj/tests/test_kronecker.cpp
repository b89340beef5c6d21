#include "inembed/kronecker.hpp"

#include <cmath>

#include "doctest.h"
#include "inembed/rng.hpp"

using namespace inembed;

namespace {

// Dense k-fold Kronecker power, built by the textbook block construction.
Eigen::MatrixXd kron_power(const Eigen::Matrix2d& theta, int k) {
  Eigen::MatrixXd m = theta;
  for (int step = 1; step < k; ++step) {
    Eigen::MatrixXd next(2 * m.rows(), 2 * m.cols());
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        next.block(a * m.rows(), b * m.cols(), m.rows(), m.cols()) =
            theta(a, b) * m;
    m = std::move(next);
  }
  return m;
}

// Position-ordered likelihood recomputation, independent of the library's
// coordinate-ordered loop.
double ll_oracle(const InitiatorMatrix& theta, int k,
                 const DenseAdjacency& adj, const NodeMapping& map) {
  const int n = map.n_model();
  const int n_real = map.n_real();
  double sum = 0.0;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      int x = map.sigma[u], y = map.sigma[v];
      if (x > y) std::swap(x, y);
      const double p = edge_probability(theta, k, x, y);
      const bool edge = u < n_real && v < n_real && adj.at(u, v);
      sum += edge ? std::log(p) : std::log1p(-p);
    }
  }
  return sum;
}

struct Instance {
  InitiatorMatrix theta;
  int k = 0;
  DenseAdjacency adj;
  NodeMapping map;
};

Instance random_instance(int k, int n_observed, int n_missing,
                         std::uint64_t seed, double density = 0.35) {
  Rng rng(seed);
  Instance inst;
  inst.k = k;
  inst.theta = InitiatorMatrix(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                               rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
  inst.map = NodeMapping::identity(k, n_observed, n_missing);
  rng.shuffle(inst.map.sigma);
  const int n_real = n_observed + n_missing;
  inst.adj = DenseAdjacency(n_real);
  for (int u = 0; u < n_real; ++u)
    for (int v = u + 1; v < n_real; ++v)
      if (rng.bernoulli(density)) inst.adj.set(u, v, true);
  return inst;
}

}  // namespace

TEST_CASE("edge_probability hand values") {
  InitiatorMatrix half(0.5, 0.5, 0.5, 0.5);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(edge_probability(half, 3, i, j) == doctest::Approx(0.125));

  const double eps = InitiatorMatrix::kEps;
  InitiatorMatrix ident(1 - eps, eps, eps, 1 - eps);
  CHECK(edge_probability(ident, 2, 0, 0) ==
        doctest::Approx(1.0).epsilon(1e-5));
  CHECK(edge_probability(ident, 2, 0, 3) < 1e-11);

  InitiatorMatrix theta(0.9, 0.6, 0.6, 0.2);
  CHECK(edge_probability(theta, 2, 1, 2) == doctest::Approx(0.36));
}

TEST_CASE("edge_probability equals the dense Kronecker power, k <= 4") {
  InitiatorMatrix theta(0.83, 0.41, 0.27, 0.64);
  for (int k = 1; k <= 4; ++k) {
    const Eigen::MatrixXd dense = kron_power(theta.entries, k);
    const PairProbTable table(theta, k);
    const int n = 1 << k;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK(edge_probability(theta, k, i, j) ==
              doctest::Approx(dense(i, j)).epsilon(1e-12));
        CHECK(table.prob(i, j) == doctest::Approx(dense(i, j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("edge_probability rejects out-of-range coordinates") {
  InitiatorMatrix theta;
  CHECK_THROWS(edge_probability(theta, 2, 4, 0));
  CHECK_THROWS(edge_probability(theta, 2, 0, -1));
  CHECK_THROWS(edge_probability(theta, 0, 0, 0));
}

TEST_CASE("initiator clamps into (0,1) and serializes round-trip") {
  InitiatorMatrix wild(-0.5, 0.3, 2.0, 0.5);
  CHECK(wild(0, 0) == InitiatorMatrix::kEps);
  CHECK(wild(1, 0) == 1.0 - InitiatorMatrix::kEps);
  CHECK(wild(0, 1) == 0.3);

  InitiatorMatrix theta(0.123456789012345, 0.6, 0.59999999999, 0.2);
  InitiatorMatrix back = InitiatorMatrix::from_line(theta.to_line());
  CHECK(back.entries == theta.entries);

  CHECK_THROWS(InitiatorMatrix::from_line("0.1 0.2 0.3"));
  const double nan = std::nan("");
  CHECK_THROWS(InitiatorMatrix(nan, 0.5, 0.5, 0.5));
}

TEST_CASE("KroneckerConfig sizes the model to cover the real nodes") {
  CHECK(KroneckerConfig::for_nodes(1).k == 1);
  CHECK(KroneckerConfig::for_nodes(2).k == 1);
  CHECK(KroneckerConfig::for_nodes(4).k == 2);
  CHECK(KroneckerConfig::for_nodes(5).k == 3);
  CHECK(KroneckerConfig::for_nodes(512).k == 9);
  CHECK(KroneckerConfig::for_nodes(513).k == 10);
  CHECK_THROWS(KroneckerConfig::for_nodes(0));
}

TEST_CASE("NodeMapping identity, inverse, validation, serialization") {
  NodeMapping m = NodeMapping::identity(3, 5, 2);
  CHECK(m.n_model() == 8);
  CHECK(m.n_real() == 7);
  CHECK_NOTHROW(m.check(3));

  Rng rng(4);
  rng.shuffle(m.sigma);
  const auto inv = m.inverse();
  for (int pos = 0; pos < m.n_model(); ++pos) CHECK(inv[m.sigma[pos]] == pos);

  NodeMapping back = NodeMapping::from_line(m.to_line(), 5, 2);
  CHECK(back.sigma == m.sigma);

  NodeMapping broken = m;
  broken.sigma[0] = broken.sigma[1];
  CHECK_THROWS(broken.check(3));
  CHECK_THROWS(NodeMapping::identity(2, 4, 1));  // 5 real nodes, 4 slots
}

TEST_CASE("DenseAdjacency stores symmetric bits") {
  DenseAdjacency adj(70);  // crosses a 64-bit word boundary
  adj.set(3, 69, true);
  adj.set(68, 69, true);
  CHECK(adj.at(3, 69));
  CHECK(adj.at(69, 3));
  CHECK(!adj.at(3, 68));
  CHECK(adj.edge_count() == 2);
  adj.set(69, 3, false);
  CHECK(!adj.at(3, 69));
  CHECK(adj.edge_count() == 1);
  CHECK(adj.to_edges() == std::vector<Edge>{{68, 69}});

  Graph g;
  g.n = 3;
  g.edges = {{0, 2}};
  CHECK(DenseAdjacency::from_graph(g).at(2, 0));
}

TEST_CASE("log_likelihood hand values on a single pair") {
  InitiatorMatrix half(0.5, 0.5, 0.5, 0.5);
  NodeMapping map = NodeMapping::identity(1, 2, 0);

  DenseAdjacency with_edge(2);
  with_edge.set(0, 1, true);
  CHECK(log_likelihood(half, 1, with_edge, map) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));

  DenseAdjacency no_edge(2);
  CHECK(log_likelihood(half, 1, no_edge, map) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("log_likelihood matches a position-ordered recomputation") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Instance inst = random_instance(4, 9, 3, 100 + seed);
    const double fast = log_likelihood(inst.theta, inst.k, inst.adj, inst.map);
    const double slow = ll_oracle(inst.theta, inst.k, inst.adj, inst.map);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  }
}

TEST_CASE("log_likelihood is invariant under consistent relabeling") {
  Instance inst = random_instance(4, 10, 2, 42);
  const int n_real = inst.map.n_real();

  Rng rng(7);
  std::vector<int> perm(n_real);
  for (int i = 0; i < n_real; ++i) perm[i] = i;
  rng.shuffle(perm);

  DenseAdjacency relabeled(n_real);
  for (int u = 0; u < n_real; ++u)
    for (int v = u + 1; v < n_real; ++v)
      if (inst.adj.at(u, v)) relabeled.set(perm[u], perm[v], true);
  NodeMapping composed = inst.map;
  for (int u = 0; u < n_real; ++u) composed.sigma[perm[u]] = inst.map.sigma[u];

  CHECK(log_likelihood(inst.theta, inst.k, relabeled, composed) ==
        log_likelihood(inst.theta, inst.k, inst.adj, inst.map));
}

TEST_CASE("swapping structurally identical nodes keeps the likelihood") {
  // Nodes 1 and 2 sit on digit-complement coordinates (01 and 10), share
  // the neighborhood {0,3}, and the initiator is symmetric.
  InitiatorMatrix theta(0.9, 0.6, 0.6, 0.2);
  NodeMapping map = NodeMapping::identity(2, 4, 0);
  DenseAdjacency adj(4);
  adj.set(0, 1, true);
  adj.set(0, 2, true);
  adj.set(1, 3, true);
  adj.set(2, 3, true);

  const double before = log_likelihood(theta, 2, adj, map);
  CHECK(swap_delta(theta, 2, adj, map, 1, 2) == 0.0);
  std::swap(map.sigma[1], map.sigma[2]);
  CHECK(log_likelihood(theta, 2, adj, map) ==
        doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("swap_delta matches full recomputation") {
  Instance inst = random_instance(4, 9, 3, 11);
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int i = static_cast<int>(rng.uniform_int(16));
    const int j = static_cast<int>(rng.uniform_int(16));
    const double delta =
        swap_delta(inst.theta, inst.k, inst.adj, inst.map, i, j);
    const double before =
        log_likelihood(inst.theta, inst.k, inst.adj, inst.map);
    std::swap(inst.map.sigma[i], inst.map.sigma[j]);
    const double after = log_likelihood(inst.theta, inst.k, inst.adj, inst.map);
    CHECK(std::abs(delta - (after - before)) <= 1e-9);
    // Leave the swap applied; the walk keeps exploring new states.
  }
}

TEST_CASE("swap_delta no-op and padding cases are exactly zero") {
  Instance inst = random_instance(4, 8, 2, 21);
  CHECK(swap_delta(inst.theta, inst.k, inst.adj, inst.map, 5, 5) == 0.0);
  // Positions 10..15 are padding slots.
  CHECK(swap_delta(inst.theta, inst.k, inst.adj, inst.map, 11, 14) == 0.0);
}

TEST_CASE("swap_delta composes back to zero") {
  Instance inst = random_instance(4, 10, 2, 31);
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int i = static_cast<int>(rng.uniform_int(16));
    const int j = static_cast<int>(rng.uniform_int(16));
    const double d1 = swap_delta(inst.theta, inst.k, inst.adj, inst.map, i, j);
    std::swap(inst.map.sigma[i], inst.map.sigma[j]);
    const double d2 = swap_delta(inst.theta, inst.k, inst.adj, inst.map, i, j);
    std::swap(inst.map.sigma[i], inst.map.sigma[j]);
    CHECK(std::abs(d1 + d2) <= 1e-12);
  }
}

TEST_CASE("log_likelihood is invariant under the complement relabeling") {
  // Complementing every coordinate while flip-transposing the initiator is
  // an exact model symmetry; fits may legitimately land in either gauge.
  Instance inst = random_instance(4, 9, 4, 99);
  const int mask = (1 << inst.k) - 1;
  NodeMapping comp = inst.map;
  for (int& c : comp.sigma) c = mask - c;
  const Eigen::Matrix2d t = inst.theta.entries.transpose();
  Eigen::Matrix2d flipped;
  flipped << t(1, 1), t(1, 0), t(0, 1), t(0, 0);
  const InitiatorMatrix gauge(flipped);

  const double a = log_likelihood(inst.theta, inst.k, inst.adj, inst.map);
  const double b = log_likelihood(gauge, inst.k, inst.adj, comp);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("gradient hand value: lone non-edge at theta 0.5") {
  InitiatorMatrix half(0.5, 0.5, 0.5, 0.5);
  NodeMapping map = NodeMapping::identity(1, 2, 0);
  DenseAdjacency no_edge(2);
  Eigen::Matrix2d g = log_likelihood_gradient(half, 1, no_edge, map);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(g(1, 0) == 0.0);
  CHECK(g(1, 1) == 0.0);

  DenseAdjacency with_edge(2);
  with_edge.set(0, 1, true);
  Eigen::Matrix2d ge = log_likelihood_gradient(half, 1, with_edge, map);
  CHECK(ge(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Instance inst = random_instance(4, 12, 4, 200 + seed);
    const Eigen::Matrix2d grad =
        log_likelihood_gradient(inst.theta, inst.k, inst.adj, inst.map);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        InitiatorMatrix up = inst.theta, down = inst.theta;
        up.entries(a, b) += h;
        down.entries(a, b) -= h;
        const double fd = (log_likelihood(up, inst.k, inst.adj, inst.map) -
                           log_likelihood(down, inst.k, inst.adj, inst.map)) /
                          (2 * h);
        const double rel =
            std::abs(grad(a, b) - fd) / std::max(std::abs(fd), 1e-3);
        CHECK(rel <= 1e-6);
      }
    }
  }
}

TEST_CASE("sample_graph degenerate probabilities") {
  const double eps = InitiatorMatrix::kEps;
  Graph full = sample_graph(InitiatorMatrix(1 - eps, 1 - eps, 1 - eps, 1 - eps),
                            3, 9);
  CHECK(full.n == 8);
  CHECK(full.edges.size() == 28);

  Graph empty = sample_graph(InitiatorMatrix(eps, eps, eps, eps), 3, 9);
  CHECK(empty.edges.empty());
}

TEST_CASE("sample_graph is deterministic per seed") {
  InitiatorMatrix theta(0.9, 0.6, 0.6, 0.2);
  Graph a = sample_graph(theta, 5, 77);
  Graph b = sample_graph(theta, 5, 77);
  CHECK(a.edges == b.edges);
  Graph c = sample_graph(theta, 5, 78);
  CHECK(a.edges != c.edges);
}

TEST_CASE("sample_graph mean edge count tracks the probability sum") {
  InitiatorMatrix theta(0.9, 0.6, 0.6, 0.2);
  const int k = 9;
  const PairProbTable table(theta, k);
  const int n = 1 << k;
  double expected = 0.0, variance = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = table.prob(i, j);
      expected += p;
      variance += p * (1 - p);
    }
  }

  const int runs = 50;
  double total = 0.0;
  for (int r = 0; r < runs; ++r)
    total += static_cast<double>(sample_graph(theta, k, 1000 + r).edges.size());
  const double mean = total / runs;
  const double sigma = std::sqrt(variance / runs);
  CHECK(std::abs(mean - expected) <= 3 * sigma);
}
