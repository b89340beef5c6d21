#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "inembed/autoencoder.hpp"
#include "inembed/graph.hpp"

namespace inembed {

/// One-vs-rest linear logistic scorers over embedding rows, plus the
/// train/test row split they were fitted on.
struct ClassifierModel {
  std::vector<int> classes;      // ascending class ids, one scorer per entry
  Eigen::MatrixXd weights;       // classes.size() x embedding dim
  Eigen::VectorXd biases;        // classes.size()
  std::vector<int> train_rows;   // fitted on these rows (ascending)
  std::vector<int> test_rows;    // the complement (ascending)
};

/// Per-cell outcome of an experiment grid: one value per run.
struct ExperimentResult {
  std::string task;
  std::string dataset;
  double missing_ratio = 0.0;
  double train_ratio = 0.0;  // labeled-node train share; kept-edge share for
                             // link prediction
  std::string metric;
  std::vector<double> values;

  double mean() const;
};

enum class EdgeScorer { kCosine, kInnerProduct };

/// Stage configuration shared by every grid cell. spec_t's input width must
/// equal the dataset node count (completion restores all nodes); per-cell
/// seeds are derived internally, so the seeds inside completion/embed are
/// ignored by the grids.
struct DownstreamConfig {
  KronEMConfig completion;
  ViewSpec spec_t;
  ViewSpec spec_p;
  TrainConfig embed;
  double edge_holdout = 0.2;  // held-out edge share for link prediction
  EdgeScorer scorer = EdgeScorer::kCosine;
};

/// Splits the labeled rows by train_ratio (shuffled, first round(ratio*L)
/// rows train) and fits each class's logistic scorer with full-batch
/// gradient descent on mean binary cross-entropy: 500 epochs, rate 0.1,
/// L2 penalty 1e-4 on the weights (bias unpenalized), zero init. The class
/// list is the sorted union of the given label sets.
ClassifierModel fit_classifier(const Eigen::MatrixXd& embeddings,
                               const std::vector<std::vector<int>>& labels,
                               double train_ratio, std::uint64_t seed);

/// Class probabilities: rows align with embedding rows, columns with
/// model.classes.
Eigen::MatrixXd class_scores(const ClassifierModel& model,
                             const Eigen::MatrixXd& embeddings);

/// Top-k classes per row with k = that row's label_cardinality; score ties
/// break toward the lower class id.
std::vector<std::vector<int>> predict_labels(
    const ClassifierModel& model, const Eigen::MatrixXd& embeddings,
    const std::vector<int>& label_cardinality);

/// Unweighted mean of per-class F1 over the class universe; a class with
/// precision+recall = 0 contributes F1 = 0.
double macro_f1(const std::vector<std::vector<int>>& predicted,
                const std::vector<std::vector<int>>& truth,
                const std::vector<int>& class_universe);

/// Cosine similarity of the endpoint rows (0 when either row is zero), or
/// the raw inner product.
std::vector<double> score_edges(const Eigen::MatrixXd& embeddings,
                                const std::vector<Edge>& pairs,
                                EdgeScorer scorer = EdgeScorer::kCosine);

/// Exact pairwise AUC: fraction of (positive, negative) pairs with the
/// positive scored higher, ties counted half.
double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores);

/// For each (missing_ratio, train_ratio) cell and run: remove nodes,
/// complete the graph, embed, fit the classifier on the observed labeled
/// nodes, and record macro-F1 on the held-out labeled nodes. Every cell and
/// run derives its own seeds from `seed`.
std::vector<ExperimentResult> run_classification_grid(
    const Graph& dataset, const std::string& dataset_name,
    const std::vector<double>& missing_ratios,
    const std::vector<double>& train_ratios, int runs,
    const DownstreamConfig& config, std::uint64_t seed);

/// For each missing_ratio cell and run: remove nodes, hold out edges with an
/// equal number of negative pairs, complete and embed the training graph
/// (held-out positives provably excluded), and record the AUC of the edge
/// scores.
std::vector<ExperimentResult> run_link_prediction_grid(
    const Graph& dataset, const std::string& dataset_name,
    const std::vector<double>& missing_ratios, int runs,
    const DownstreamConfig& config, std::uint64_t seed);

/// CSV "task,dataset,missing_ratio,train_ratio,run,metric,value": one row
/// per run plus a mean row flagged run=mean.
void write_results_csv(const std::vector<ExperimentResult>& results,
                       const std::string& path,
                       const std::string& extra_header = "");

}  // namespace inembed
