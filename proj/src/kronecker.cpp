#include "inembed/kronecker.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "inembed/rng.hpp"

namespace inembed {

namespace {

void check_order(int k) {
  if (k < 1 || k > 30) throw std::runtime_error("kronecker: bad order k=" + std::to_string(k));
}

}  // namespace

void InitiatorMatrix::clamp() {
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double& v = entries(a, b);
      if (std::isnan(v)) throw std::runtime_error("initiator: NaN entry");
      v = std::min(1.0 - kEps, std::max(kEps, v));
    }
}

std::string InitiatorMatrix::to_line() const {
  std::ostringstream out;
  out << std::setprecision(17) << entries(0, 0) << " " << entries(0, 1) << " "
      << entries(1, 0) << " " << entries(1, 1);
  return out.str();
}

InitiatorMatrix InitiatorMatrix::from_line(const std::string& line) {
  std::istringstream in(line);
  double a, b, c, d;
  if (!(in >> a >> b >> c >> d))
    throw std::runtime_error("initiator: expected four reals, got '" + line +
                             "'");
  return InitiatorMatrix(a, b, c, d);
}

KroneckerConfig KroneckerConfig::for_nodes(int n_real) {
  if (n_real < 1) throw std::runtime_error("kronecker: no nodes to model");
  int k = 1;
  while ((1LL << k) < n_real) ++k;
  check_order(k);
  return KroneckerConfig{k};
}

NodeMapping NodeMapping::identity(int k, int n_observed, int n_missing) {
  check_order(k);
  const int n = 1 << k;
  if (n_observed < 0 || n_missing < 0 || n_observed + n_missing > n)
    throw std::runtime_error("mapping: real nodes exceed model size");
  NodeMapping m;
  m.sigma.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m.sigma[static_cast<std::size_t>(i)] = i;
  m.n_observed = n_observed;
  m.n_missing = n_missing;
  return m;
}

std::vector<int> NodeMapping::inverse() const {
  std::vector<int> inv(sigma.size(), -1);
  for (std::size_t pos = 0; pos < sigma.size(); ++pos)
    inv[static_cast<std::size_t>(sigma[pos])] = static_cast<int>(pos);
  return inv;
}

void NodeMapping::check(int k) const {
  check_order(k);
  const int n = 1 << k;
  if (static_cast<int>(sigma.size()) != n)
    throw std::runtime_error("mapping: sigma covers " +
                             std::to_string(sigma.size()) + " slots, model has " +
                             std::to_string(n));
  if (n_observed < 0 || n_missing < 0 || n_real() > n)
    throw std::runtime_error("mapping: real nodes exceed model size");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int c : sigma) {
    if (c < 0 || c >= n || seen[static_cast<std::size_t>(c)])
      throw std::runtime_error("mapping: sigma is not a permutation");
    seen[static_cast<std::size_t>(c)] = 1;
  }
}

std::string NodeMapping::to_line() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (i) out << ' ';
    out << sigma[i];
  }
  return out.str();
}

NodeMapping NodeMapping::from_line(const std::string& line, int n_observed,
                                   int n_missing) {
  NodeMapping m;
  m.n_observed = n_observed;
  m.n_missing = n_missing;
  std::istringstream in(line);
  int v = 0;
  while (in >> v) m.sigma.push_back(v);
  if (m.sigma.empty()) throw std::runtime_error("mapping: empty permutation line");
  int k = 1;
  while ((1LL << k) < static_cast<long long>(m.sigma.size())) ++k;
  m.check(k);
  return m;
}

DenseAdjacency::DenseAdjacency(int n)
    : n_(n),
      words_(static_cast<std::size_t>((n + 63) / 64)),
      bits_(static_cast<std::size_t>(n) * words_, 0) {
  if (n < 0) throw std::runtime_error("adjacency: negative size");
}

DenseAdjacency DenseAdjacency::from_graph(const Graph& g) {
  DenseAdjacency a(g.n);
  for (auto [u, v] : g.edges) a.set(u, v, true);
  return a;
}

void DenseAdjacency::set(int u, int v, bool present) {
  if (u == v) throw std::runtime_error("adjacency: self-loop");
  const auto word = [&](int r, int c) -> std::uint64_t& {
    return bits_[static_cast<std::size_t>(r) * words_ +
                 (static_cast<std::size_t>(c) >> 6)];
  };
  const std::uint64_t mu = 1ULL << (static_cast<unsigned>(v) & 63);
  const std::uint64_t mv = 1ULL << (static_cast<unsigned>(u) & 63);
  if (present) {
    word(u, v) |= mu;
    word(v, u) |= mv;
  } else {
    word(u, v) &= ~mu;
    word(v, u) &= ~mv;
  }
}

long long DenseAdjacency::edge_count() const {
  long long total = 0;
  for (std::uint64_t w : bits_) total += std::popcount(w);
  return total / 2;
}

std::vector<Edge> DenseAdjacency::to_edges() const {
  std::vector<Edge> edges;
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if (at(u, v)) edges.emplace_back(u, v);
  return edges;
}

PairProbTable::PairProbTable(const InitiatorMatrix& theta, int k)
    : k_(k), mask_((k >= 32) ? ~0u : ((1u << k) - 1u)) {
  check_order(k);
  if (k > 32) throw std::runtime_error("kronecker: order exceeds table size");
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double* row = pw_[2 * a + b];
      row[0] = 1.0;
      for (int m = 1; m <= k; ++m) row[m] = row[m - 1] * theta(a, b);
    }
}

double edge_probability(const InitiatorMatrix& theta, int k, int i, int j) {
  check_order(k);
  const long long n = 1LL << k;
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw std::runtime_error("edge_probability: coordinate out of range");
  double p = 1.0;
  for (int d = 0; d < k; ++d) p *= theta((i >> d) & 1, (j >> d) & 1);
  return p;
}

namespace {

void check_likelihood_inputs(int k, const DenseAdjacency& adjacency,
                             const NodeMapping& sigma) {
  sigma.check(k);
  if (adjacency.n() != sigma.n_real())
    throw std::runtime_error("likelihood: adjacency covers " +
                             std::to_string(adjacency.n()) +
                             " nodes, mapping expects " +
                             std::to_string(sigma.n_real()));
}

}  // namespace

double log_likelihood(const InitiatorMatrix& theta, int k,
                      const DenseAdjacency& adjacency,
                      const NodeMapping& sigma) {
  check_likelihood_inputs(k, adjacency, sigma);
  const PairProbTable table(theta, k);
  const std::vector<int> inv = sigma.inverse();
  const int n = 1 << k;
  const int n_real = sigma.n_real();

  // Model-coordinate iteration (i<j) visits each unordered slot pair once
  // and fixes the summation order.
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int u = inv[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const int v = inv[static_cast<std::size_t>(j)];
      const bool edge = u < n_real && v < n_real && adjacency.at(u, v);
      const double p = table.prob(i, j);
      sum += edge ? std::log(p) : std::log1p(-p);
    }
  }
  return sum;
}

double swap_delta(const InitiatorMatrix& theta, int k,
                  const DenseAdjacency& adjacency, const NodeMapping& sigma,
                  int i, int j) {
  check_likelihood_inputs(k, adjacency, sigma);
  const int n = sigma.n_model();
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw std::runtime_error("swap_delta: position out of range");
  if (i == j) return 0.0;

  const PairProbTable table(theta, k);
  const int n_real = sigma.n_real();
  const int ci = sigma.sigma[static_cast<std::size_t>(i)];
  const int cj = sigma.sigma[static_cast<std::size_t>(j)];

  const auto has_edge = [&](int a, int b) {
    return a < n_real && b < n_real && adjacency.at(a, b);
  };

  // The (i,j) pair itself keeps its unordered coordinate set, so only pairs
  // {i,w} and {j,w} move. When a_iw == a_jw the two relocated terms cancel
  // exactly, so those w are skipped — padding-slot swaps yield exact 0.
  double delta = 0.0;
  for (int w = 0; w < n; ++w) {
    if (w == i || w == j) continue;
    const bool a_iw = has_edge(i, w);
    const bool a_jw = has_edge(j, w);
    if (a_iw == a_jw) continue;
    const int cw = sigma.sigma[static_cast<std::size_t>(w)];
    const double pi = table.pair_prob(ci, cw);
    const double pj = table.pair_prob(cj, cw);
    const double logit_i = std::log(pi) - std::log1p(-pi);
    const double logit_j = std::log(pj) - std::log1p(-pj);
    delta += a_iw ? logit_j - logit_i : logit_i - logit_j;
  }
  return delta;
}

Eigen::Matrix2d log_likelihood_gradient(const InitiatorMatrix& theta, int k,
                                        const DenseAdjacency& adjacency,
                                        const NodeMapping& sigma) {
  check_likelihood_inputs(k, adjacency, sigma);
  const PairProbTable table(theta, k);
  const std::vector<int> inv = sigma.inverse();
  const int n = 1 << k;
  const int n_real = sigma.n_real();

  double grad[4] = {0, 0, 0, 0};
  const double inv_theta[4] = {1.0 / theta(0, 0), 1.0 / theta(0, 1),
                               1.0 / theta(1, 0), 1.0 / theta(1, 1)};
  int cnt[4];
  for (int i = 0; i < n; ++i) {
    const int u = inv[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const int v = inv[static_cast<std::size_t>(j)];
      const bool edge = u < n_real && v < n_real && adjacency.at(u, v);
      table.counts(i, j, cnt);
      if (edge) {
        for (int c = 0; c < 4; ++c)
          if (cnt[c]) grad[c] += cnt[c] * inv_theta[c];
      } else {
        const double p = table.prob(i, j);
        const double scale = p / (1.0 - p);
        for (int c = 0; c < 4; ++c)
          if (cnt[c]) grad[c] -= cnt[c] * scale * inv_theta[c];
      }
    }
  }
  Eigen::Matrix2d out;
  out << grad[0], grad[1], grad[2], grad[3];
  return out;
}

Graph sample_graph(const InitiatorMatrix& theta, int k, std::uint64_t seed) {
  check_order(k);
  const PairProbTable table(theta, k);
  const int n = 1 << k;
  Rng rng(seed);
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(table.prob(i, j))) g.edges.emplace_back(i, j);
  return g;
}

}  // namespace inembed
