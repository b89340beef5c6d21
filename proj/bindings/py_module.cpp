#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "inembed/autoencoder.hpp"
#include "inembed/pipeline.hpp"

namespace py = pybind11;
using namespace inembed;

namespace {

Graph make_graph(int n, const std::vector<Edge>& edges) {
  Graph g;
  g.n = n;
  g.edges = edges;
  g.normalize_edges();
  g.check();
  return g;
}

KronEMConfig make_completion_config(int em_iterations, int gibbs_sweeps,
                                    int permutation_moves, int sgd_steps,
                                    double learning_rate,
                                    int sample_average_count,
                                    const std::string& final_sample,
                                    std::uint64_t seed) {
  KronEMConfig config;
  config.em_iterations = em_iterations;
  config.gibbs_sweeps = gibbs_sweeps;
  config.permutation_moves = permutation_moves;
  config.sgd_steps = sgd_steps;
  config.learning_rate = learning_rate;
  config.sample_average_count = sample_average_count;
  config.seed = seed;
  if (final_sample == "majority")
    config.final_sample = KronEMConfig::FinalSample::majority;
  else if (final_sample == "last")
    config.final_sample = KronEMConfig::FinalSample::last;
  else
    throw std::runtime_error("final_sample must be 'majority' or 'last', got '" +
                             final_sample + "'");
  return config;
}

ViewSpec make_spec(int input_dim, const std::vector<int>& hidden) {
  ViewSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.check();
  return spec;
}

}  // namespace

PYBIND11_MODULE(inembed, m) {
  m.doc() =
      "Network completion via a stochastic Kronecker model plus dual-view "
      "autoencoder node embeddings";

  m.def(
      "sample_graph",
      [](const std::vector<double>& theta, int k, std::uint64_t seed) {
        if (theta.size() != 4)
          throw std::runtime_error("theta needs exactly 4 entries");
        const Graph g =
            sample_graph(InitiatorMatrix(theta[0], theta[1], theta[2], theta[3]),
                         k, seed);
        return py::make_tuple(g.n, g.edges);
      },
      py::arg("theta"), py::arg("k"), py::arg("seed") = 0,
      "Sample a graph from a 2x2 initiator: returns (n, edge list).");

  m.def(
      "complete",
      [](const std::vector<Edge>& edges, int n, int n_missing,
         int em_iterations, int gibbs_sweeps, int permutation_moves,
         int sgd_steps, double learning_rate, int sample_average_count,
         const std::string& final_sample, std::uint64_t seed) {
        const Graph g = make_graph(n, edges);
        const RecoveredGraph r = run_kronem(
            g, n_missing,
            make_completion_config(em_iterations, gibbs_sweeps,
                                   permutation_moves, sgd_steps, learning_rate,
                                   sample_average_count, final_sample, seed));
        py::dict out;
        out["n"] = r.graph.n;
        out["observed_count"] = r.observed_count;
        out["edges"] = r.graph.edges;
        out["theta"] = Eigen::Matrix2d(r.fitted_theta.entries);
        out["ll_trace"] = r.ll_trace;
        out["iterations_run"] = r.iterations_run;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("edges"), py::arg("n"), py::arg("n_missing"),
      py::arg("em_iterations") = 20, py::arg("gibbs_sweeps") = 5,
      py::arg("permutation_moves") = 20000, py::arg("sgd_steps") = 30,
      py::arg("learning_rate") = 1e-5, py::arg("sample_average_count") = 5,
      py::arg("final_sample") = "majority", py::arg("seed") = 0,
      "Restore n_missing nodes of a partially observed graph.");

  m.def(
      "embed",
      [](const std::vector<Edge>& edges, int n, int observed_count,
         const Eigen::MatrixXd& observed_attributes,
         const std::vector<int>& hidden_t, const std::vector<int>& hidden_p,
         double alpha, double beta, double learning_rate, int batch_size,
         int epochs, std::uint64_t seed) {
        RecoveredGraph r;
        r.graph = make_graph(n, edges);
        r.observed_count = observed_count;
        const Eigen::MatrixXd attrs = impute_attributes(r, observed_attributes);
        TrainConfig config;
        config.alpha = alpha;
        config.beta = beta;
        config.learning_rate = learning_rate;
        config.batch_size = batch_size;
        config.epochs = epochs;
        config.seed = seed;
        const TrainResult result =
            train(r, attrs, make_spec(n, hidden_t),
                  make_spec(static_cast<int>(attrs.cols()), hidden_p), config);
        return py::make_tuple(result.embeddings.rows, result.epoch_loss);
      },
      py::arg("edges"), py::arg("n"), py::arg("observed_count"),
      py::arg("observed_attributes"), py::arg("hidden_t") = std::vector<int>{16},
      py::arg("hidden_p") = std::vector<int>{8}, py::arg("alpha") = 0.5,
      py::arg("beta") = 0.8, py::arg("learning_rate") = 1e-3,
      py::arg("batch_size") = 50, py::arg("epochs") = 50, py::arg("seed") = 0,
      "Train the dual-view autoencoder: returns (embeddings, per-epoch "
      "loss). Rows past observed_count get attribute means imputed.");

  m.def(
      "auc",
      [](const std::vector<double>& positives,
         const std::vector<double>& negatives) {
        return auc(positives, negatives);
      },
      py::arg("positives"), py::arg("negatives"),
      "Pairwise ranking AUC of positive over negative scores.");

  m.def(
      "macro_f1",
      [](const std::vector<std::vector<int>>& predicted,
         const std::vector<std::vector<int>>& truth,
         const std::vector<int>& class_universe) {
        return macro_f1(predicted, truth, class_universe);
      },
      py::arg("predicted"), py::arg("truth"), py::arg("class_universe"),
      "Macro-averaged F1 over the class universe.");

  m.def(
      "run_pipeline",
      [](const py::dict& options) {
        PipelineConfig config;
        for (auto item : options)
          config.set(py::cast<std::string>(item.first),
                     py::cast<std::string>(item.second));
        run_pipeline(config);
        return config.out;
      },
      py::arg("options"),
      "Run the staged pipeline from {key: value} options (same keys as the "
      "config file, all strings); returns the artifact directory.");
}
