#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "inembed/graph.hpp"

namespace inembed {

/// 2x2 stochastic Kronecker initiator. Entries are projected into
/// [kEps, 1-kEps] on every construction/update so logs and divisions stay
/// finite.
struct InitiatorMatrix {
  static constexpr double kEps = 1e-6;

  Eigen::Matrix2d entries;

  InitiatorMatrix() { entries.setConstant(0.5); }
  InitiatorMatrix(double a, double b, double c, double d) {
    entries << a, b, c, d;
    clamp();
  }
  explicit InitiatorMatrix(const Eigen::Matrix2d& m) : entries(m) { clamp(); }

  double operator()(int a, int b) const { return entries(a, b); }

  /// Projects all entries into [kEps, 1-kEps]; throws on NaN.
  void clamp();

  /// "a b c d" with round-trip precision.
  std::string to_line() const;
  static InitiatorMatrix from_line(const std::string& line);
};

/// Kronecker power k sized to cover a real-node count.
struct KroneckerConfig {
  int k = 1;

  int n_model() const { return 1 << k; }

  /// Smallest k >= 1 with 2^k >= n_real.
  static KroneckerConfig for_nodes(int n_real);
};

/// Permutation sigma over model coordinates {0..2^k-1}. Position u maps real
/// node u for u < n_observed + n_missing (observed first, then missing);
/// higher positions are padding slots treated as isolated nodes.
struct NodeMapping {
  std::vector<int> sigma;  // position -> model coordinate
  int n_observed = 0;
  int n_missing = 0;

  int n_real() const { return n_observed + n_missing; }
  int n_model() const { return static_cast<int>(sigma.size()); }

  static NodeMapping identity(int k, int n_observed, int n_missing);

  /// coordinate -> position.
  std::vector<int> inverse() const;

  /// Throws unless sigma is a bijection on {0..2^k-1} covering n_real().
  void check(int k) const;

  /// Space-separated permutation on one line (coordinates in position order).
  std::string to_line() const;
  static NodeMapping from_line(const std::string& line, int n_observed,
                               int n_missing);
};

/// Symmetric dense bit adjacency over n nodes; O(1) membership for the
/// likelihood inner loops.
class DenseAdjacency {
 public:
  DenseAdjacency() = default;
  explicit DenseAdjacency(int n);
  static DenseAdjacency from_graph(const Graph& g);

  int n() const { return n_; }
  bool at(int u, int v) const {
    return (bits_[static_cast<std::size_t>(u) * words_ +
                  (static_cast<std::size_t>(v) >> 6)] >>
            (static_cast<unsigned>(v) & 63)) &
           1ULL;
  }
  void set(int u, int v, bool present);
  long long edge_count() const;
  std::vector<Edge> to_edges() const;

 private:
  int n_ = 0;
  std::size_t words_ = 0;  // 64-bit words per row
  std::vector<std::uint64_t> bits_;
};

/// Per-(theta,k) table of initiator-entry powers; evaluates any entry of the
/// k-fold Kronecker power from the four digit-match counts in O(k) popcounts.
class PairProbTable {
 public:
  PairProbTable(const InitiatorMatrix& theta, int k);

  int k() const { return k_; }

  /// Ordered entry (i,j) of the Kronecker power.
  double prob(int i, int j) const {
    const auto a = static_cast<std::uint32_t>(i);
    const auto b = static_cast<std::uint32_t>(j);
    const int n11 = std::popcount(a & b);
    const int n01 = std::popcount(~a & b & mask_);
    const int n10 = std::popcount(a & ~b & mask_);
    const int n00 = k_ - n11 - n01 - n10;
    return pw_[0][n00] * pw_[1][n01] * pw_[2][n10] * pw_[3][n11];
  }

  /// Probability for an unordered coordinate pair {x,y}: the (min,max)
  /// entry, matching the generative i<j convention.
  double pair_prob(int x, int y) const {
    return x <= y ? prob(x, y) : prob(y, x);
  }

  /// Digit-cell counts for the ordered pair (i,j): out[2a+b] = #digits d with
  /// (bit_d(i), bit_d(j)) = (a,b).
  void counts(int i, int j, int out[4]) const {
    const auto a = static_cast<std::uint32_t>(i);
    const auto b = static_cast<std::uint32_t>(j);
    out[3] = std::popcount(a & b);
    out[1] = std::popcount(~a & b & mask_);
    out[2] = std::popcount(a & ~b & mask_);
    out[0] = k_ - out[1] - out[2] - out[3];
  }

 private:
  int k_;
  std::uint32_t mask_;
  double pw_[4][33];
};

/// Entry (i,j) of the k-fold Kronecker power of theta:
/// prod_d theta[bit_d(i)][bit_d(j)].
double edge_probability(const InitiatorMatrix& theta, int k, int i, int j);

/// Exact Bernoulli log-likelihood of the recovered adjacency under (theta,
/// sigma), summed over all unordered model-slot pairs; slots beyond the real
/// nodes are padding and contribute non-edge terms. The probability of an
/// unordered pair is taken from the (min,max) model-coordinate entry.
double log_likelihood(const InitiatorMatrix& theta, int k,
                      const DenseAdjacency& adjacency,
                      const NodeMapping& sigma);

/// log_likelihood delta for transposing sigma[i] and sigma[j], touching only
/// pairs involving positions i and j (O(N k) instead of O(N^2 k)).
double swap_delta(const InitiatorMatrix& theta, int k,
                  const DenseAdjacency& adjacency, const NodeMapping& sigma,
                  int i, int j);

/// Exact gradient of log_likelihood w.r.t. the four initiator entries.
Eigen::Matrix2d log_likelihood_gradient(const InitiatorMatrix& theta, int k,
                                        const DenseAdjacency& adjacency,
                                        const NodeMapping& sigma);

/// Samples a graph on 2^k nodes: each unordered pair (i<j) is an edge
/// independently with probability edge_probability(theta, k, i, j).
Graph sample_graph(const InitiatorMatrix& theta, int k, std::uint64_t seed);

}  // namespace inembed
