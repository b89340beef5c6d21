#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "inembed/graph.hpp"
#include "inembed/kronecker.hpp"

namespace inembed {

/// EM sampler state: the current permutation plus the full recovered
/// adjacency. Observed-observed bits mirror the incomplete graph and are
/// never rewritten by the samplers; bits on pairs with a missing endpoint
/// (ids >= n_observed) hold the current E-step sample.
struct CompletionState {
  NodeMapping sigma;
  DenseAdjacency adjacency;  // n_real() nodes: observed part + missing sample
  int n_observed = 0;
  int iteration = 0;

  /// The sampled missing part: every present pair with >= 1 missing
  /// endpoint.
  std::vector<Edge> missing_adjacency() const;

  /// Throws unless sigma/adjacency sizes line up for power k.
  void check(int k) const;
};

struct KronEMConfig {
  int em_iterations = 20;
  int gibbs_sweeps = 5;          // E-step sweeps; each = resample + MH moves
  int permutation_moves = 20000; // MH transposition proposals per sweep
  int sgd_steps = 30;            // per M-step
  double learning_rate = 1e-5;
  std::uint64_t seed = 0;
  int sample_average_count = 5;  // thinned samples retained per E-step

  // How the emitted missing part is chosen from the final E-step's retained
  // samples: per-pair majority vote (lower variance) or the last sample
  // (a single draw from the chain).
  enum class FinalSample { majority, last };
  FinalSample final_sample = FinalSample::majority;

  // Memory cap: refuse models with 2^k above this.
  int max_model_nodes = 1 << 15;

  void validate() const;
};

/// Output of the EM completion: the recovered graph on
/// n = observed_count + n_missing nodes (observed ids first, unchanged).
struct RecoveredGraph {
  Graph graph;
  int observed_count = 0;
  InitiatorMatrix fitted_theta;
  NodeMapping final_mapping;
  std::vector<double> ll_trace;  // sample-averaged log-likelihood per EM iter
  int iterations_run = 0;
  bool converged = false;
};

/// Resamples every pair with >= 1 missing endpoint as an independent
/// Bernoulli draw with the pair's model probability; observed-observed
/// pairs are untouched. Pure: returns the updated state.
CompletionState sample_missing_edges(const CompletionState& state,
                                     const InitiatorMatrix& theta, int k,
                                     std::uint64_t seed);

/// One Metropolis-Hastings move: proposes a uniform transposition (i,j) of
/// sigma and accepts with probability min(1, exp(swap_delta)).
CompletionState permutation_step(const CompletionState& state,
                                 const InitiatorMatrix& theta, int k,
                                 std::uint64_t seed);

/// config.sgd_steps ascent steps on the sample-averaged log-likelihood:
/// theta <- clamp(theta + learning_rate * mean-gradient).
InitiatorMatrix m_step_update(const InitiatorMatrix& theta, int k,
                              const std::vector<CompletionState>& samples,
                              const KronEMConfig& config);

/// Full EM completion of an incomplete graph with n_missing unobserved
/// nodes appended after the observed ones. Theta starts uniform in
/// (0.1, 0.9), sigma at identity; stops after em_iterations or when
/// max|dTheta| < 1e-4.
RecoveredGraph run_kronem(const Graph& incomplete, int n_missing,
                          const KronEMConfig& config);

/// Extends observed attribute rows to all recovered nodes: each missing
/// node's row is the elementwise mean of its observed neighbors' rows
/// (zero row if it has none).
Eigen::MatrixXd impute_attributes(const RecoveredGraph& recovered,
                                  const Eigen::MatrixXd& observed_attributes);

}  // namespace inembed
