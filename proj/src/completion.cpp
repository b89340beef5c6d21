#include "inembed/completion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "inembed/rng.hpp"

namespace inembed {

std::vector<Edge> CompletionState::missing_adjacency() const {
  std::vector<Edge> out;
  const int n_real = sigma.n_real();
  for (int u = 0; u < n_real; ++u)
    for (int v = std::max(u + 1, n_observed); v < n_real; ++v)
      if (adjacency.at(u, v)) out.emplace_back(u, v);
  return out;
}

void CompletionState::check(int k) const {
  sigma.check(k);
  if (adjacency.n() != sigma.n_real())
    throw std::runtime_error("completion: adjacency covers " +
                             std::to_string(adjacency.n()) +
                             " nodes, mapping expects " +
                             std::to_string(sigma.n_real()));
  if (n_observed != sigma.n_observed)
    throw std::runtime_error("completion: observed-count mismatch");
}

void KronEMConfig::validate() const {
  if (em_iterations < 1 || gibbs_sweeps < 1 || permutation_moves < 1 ||
      sgd_steps < 1 || sample_average_count < 1)
    throw std::runtime_error("kronem config: all counts must be >= 1");
  if (!(learning_rate > 0))
    throw std::runtime_error("kronem config: learning_rate must be > 0");
  if (max_model_nodes < 2)
    throw std::runtime_error("kronem config: max_model_nodes must be >= 2");
}

namespace {

// In-place E-step kernels; the public operations wrap them with copies.

void resample_missing(CompletionState& state, const PairProbTable& table,
                      Rng& rng) {
  const int n_real = state.sigma.n_real();
  for (int u = 0; u < n_real; ++u) {
    const int cu = state.sigma.sigma[static_cast<std::size_t>(u)];
    for (int v = std::max(u + 1, state.n_observed); v < n_real; ++v) {
      const int cv = state.sigma.sigma[static_cast<std::size_t>(v)];
      state.adjacency.set(u, v, rng.bernoulli(table.pair_prob(cu, cv)));
    }
  }
}

// Returns true when the proposed transposition was accepted.
bool mh_move(CompletionState& state, const InitiatorMatrix& theta, int k,
             Rng& rng) {
  const auto n = static_cast<std::uint64_t>(state.sigma.n_model());
  const int i = static_cast<int>(rng.uniform_int(n));
  const int j = static_cast<int>(rng.uniform_int(n));
  const double delta = swap_delta(theta, k, state.adjacency, state.sigma, i, j);
  const double u = rng.uniform();  // always drawn: fixed stream consumption
  if (u < std::exp(delta)) {
    std::swap(state.sigma.sigma[static_cast<std::size_t>(i)],
              state.sigma.sigma[static_cast<std::size_t>(j)]);
    return true;
  }
  return false;
}

}  // namespace

CompletionState sample_missing_edges(const CompletionState& state,
                                     const InitiatorMatrix& theta, int k,
                                     std::uint64_t seed) {
  state.check(k);
  CompletionState next = state;
  const PairProbTable table(theta, k);
  Rng rng(seed);
  resample_missing(next, table, rng);
  return next;
}

CompletionState permutation_step(const CompletionState& state,
                                 const InitiatorMatrix& theta, int k,
                                 std::uint64_t seed) {
  state.check(k);
  CompletionState next = state;
  Rng rng(seed);
  mh_move(next, theta, k, rng);
  return next;
}

InitiatorMatrix m_step_update(const InitiatorMatrix& theta, int k,
                              const std::vector<CompletionState>& samples,
                              const KronEMConfig& config) {
  if (samples.empty()) throw std::runtime_error("m_step: no samples");
  config.validate();
  InitiatorMatrix current = theta;
  for (int step = 0; step < config.sgd_steps; ++step) {
    Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
    for (const CompletionState& s : samples)
      grad += log_likelihood_gradient(current, k, s.adjacency, s.sigma);
    grad /= static_cast<double>(samples.size());
    current.entries += config.learning_rate * grad;
    current.clamp();
  }
  return current;
}

RecoveredGraph run_kronem(const Graph& incomplete, int n_missing,
                          const KronEMConfig& config) {
  config.validate();
  if (incomplete.n < 1) throw std::runtime_error("run_kronem: empty graph");
  if (n_missing < 0) throw std::runtime_error("run_kronem: negative n_missing");

  const int n_observed = incomplete.n;
  const int n_real = n_observed + n_missing;
  const int k = KroneckerConfig::for_nodes(n_real).k;
  if ((1LL << k) > config.max_model_nodes)
    throw std::runtime_error("run_kronem: model needs " +
                             std::to_string(1LL << k) + " slots, cap is " +
                             std::to_string(config.max_model_nodes));

  Rng rng(config.seed);
  // Row-major draw order for the four initiator entries.
  InitiatorMatrix theta(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                        rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));

  CompletionState state;
  state.sigma = NodeMapping::identity(k, n_observed, n_missing);
  state.adjacency = DenseAdjacency(n_real);
  for (auto [u, v] : incomplete.edges) state.adjacency.set(u, v, true);
  state.n_observed = n_observed;

  // Thinning schedule within each E-step: the first 20% of sweeps are
  // warm-up, then sample_average_count snapshots spread evenly over the
  // rest (capped by what is available).
  const int warmup = config.gibbs_sweeps / 5;
  const int eligible = config.gibbs_sweeps - warmup;
  const int retain = std::min(config.sample_average_count, eligible);

  RecoveredGraph out;
  std::vector<CompletionState> samples;
  for (int iter = 0; iter < config.em_iterations; ++iter) {
    const PairProbTable table(theta, k);
    samples.clear();
    int next_snapshot = 0;
    for (int sweep = 0; sweep < config.gibbs_sweeps; ++sweep) {
      resample_missing(state, table, rng);
      for (int move = 0; move < config.permutation_moves; ++move)
        mh_move(state, theta, k, rng);
      const int snapshot_at =
          warmup + static_cast<int>((static_cast<long long>(next_snapshot + 1) *
                                     eligible) /
                                    retain) -
          1;
      if (next_snapshot < retain && sweep == snapshot_at) {
        samples.push_back(state);
        ++next_snapshot;
      }
    }

    const InitiatorMatrix updated = m_step_update(theta, k, samples, config);
    double avg_ll = 0.0;
    for (const CompletionState& s : samples)
      avg_ll += log_likelihood(updated, k, s.adjacency, s.sigma);
    out.ll_trace.push_back(avg_ll / static_cast<double>(samples.size()));

    const double max_change =
        (updated.entries - theta.entries).cwiseAbs().maxCoeff();
    theta = updated;
    state.iteration = iter + 1;
    out.iterations_run = iter + 1;
    if (max_change < 1e-4) {
      out.converged = true;
      break;
    }
  }

  // Assemble the recovered graph: observed part verbatim, missing part by
  // per-pair majority over the final E-step's retained samples (strict
  // majority; ties resolve to absent) or the last sample alone.
  Graph recovered;
  recovered.n = n_real;
  recovered.edges = incomplete.edges;
  if (n_missing > 0) {
    if (config.final_sample == KronEMConfig::FinalSample::last) {
      const CompletionState& last = samples.back();
      for (int u = 0; u < n_real; ++u)
        for (int v = std::max(u + 1, n_observed); v < n_real; ++v)
          if (last.adjacency.at(u, v)) recovered.edges.emplace_back(u, v);
    } else {
      for (int u = 0; u < n_real; ++u) {
        for (int v = std::max(u + 1, n_observed); v < n_real; ++v) {
          int present = 0;
          for (const CompletionState& s : samples)
            present += s.adjacency.at(u, v) ? 1 : 0;
          if (2 * present > static_cast<int>(samples.size()))
            recovered.edges.emplace_back(u, v);
        }
      }
    }
  }
  recovered.normalize_edges();

  // Labels ride along (missing nodes get empty sets) so downstream
  // evaluation can keep using observed-node ground truth.
  if (incomplete.labels) {
    auto labels = *incomplete.labels;
    labels.resize(static_cast<std::size_t>(n_real));
    recovered.labels = std::move(labels);
  }
  recovered.class_universe = incomplete.class_universe;

  out.graph = std::move(recovered);
  out.observed_count = n_observed;
  out.fitted_theta = theta;
  out.final_mapping = state.sigma;
  return out;
}

Eigen::MatrixXd impute_attributes(const RecoveredGraph& recovered,
                                  const Eigen::MatrixXd& observed_attributes) {
  const int n_observed = recovered.observed_count;
  const int n_real = recovered.graph.n;
  if (observed_attributes.rows() != n_observed)
    throw std::runtime_error("impute_attributes: expected " +
                             std::to_string(n_observed) + " rows, got " +
                             std::to_string(observed_attributes.rows()));

  Eigen::MatrixXd out(n_real, observed_attributes.cols());
  out.setZero();
  out.topRows(n_observed) = observed_attributes;

  std::vector<int> neighbor_count(static_cast<std::size_t>(n_real), 0);
  for (auto [u, v] : recovered.graph.edges) {
    // Only observed neighbors contribute evidence.
    if (u >= n_observed && v < n_observed) {
      out.row(u) += observed_attributes.row(v);
      ++neighbor_count[static_cast<std::size_t>(u)];
    } else if (v >= n_observed && u < n_observed) {
      out.row(v) += observed_attributes.row(u);
      ++neighbor_count[static_cast<std::size_t>(v)];
    }
  }
  for (int m = n_observed; m < n_real; ++m)
    if (neighbor_count[static_cast<std::size_t>(m)] > 0)
      out.row(m) /= neighbor_count[static_cast<std::size_t>(m)];
  return out;
}

}  // namespace inembed
