#include "inembed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "inembed/completion.hpp"
#include "inembed/rng.hpp"

namespace inembed {

namespace {

constexpr int kClassifierEpochs = 500;
constexpr double kClassifierRate = 0.1;
constexpr double kClassifierPenalty = 1e-4;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// The class list backing the one-vs-rest scorers: sorted distinct ids.
std::vector<int> label_union(const std::vector<std::vector<int>>& labels) {
  std::set<int> seen;
  for (const auto& set : labels) seen.insert(set.begin(), set.end());
  return {seen.begin(), seen.end()};
}

// Shared per-cell chain: corrupt via the caller, then complete + embed the
// given observed-side graph. `observed_attrs` rows align with graph nodes.
EmbeddingMatrix complete_and_embed(const Graph& to_complete, int n_missing,
                                   const Eigen::MatrixXd& observed_attrs,
                                   const DownstreamConfig& config,
                                   std::uint64_t cell_seed,
                                   RecoveredGraph* recovered_out) {
  KronEMConfig cc = config.completion;
  cc.seed = derive_seed(cell_seed, {kSeedComplete});
  RecoveredGraph recovered = run_kronem(to_complete, n_missing, cc);

  const Eigen::MatrixXd attrs = impute_attributes(recovered, observed_attrs);
  TrainConfig tc = config.embed;
  tc.seed = derive_seed(cell_seed, {kSeedEmbed});
  TrainResult trained =
      train(recovered, attrs, config.spec_t, config.spec_p, tc);
  if (recovered_out) *recovered_out = std::move(recovered);
  return std::move(trained.embeddings);
}

const Eigen::MatrixXd& require_attributes(const Graph& g,
                                          const std::string& who) {
  if (!g.attributes)
    throw std::runtime_error(who + ": dataset has no attribute matrix");
  return *g.attributes;
}

void check_runs(int runs) {
  if (runs < 1)
    throw std::runtime_error("experiment grid needs runs >= 1, got " +
                             std::to_string(runs));
}

}  // namespace

double ExperimentResult::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

ClassifierModel fit_classifier(const Eigen::MatrixXd& embeddings,
                               const std::vector<std::vector<int>>& labels,
                               double train_ratio, std::uint64_t seed) {
  const int n = static_cast<int>(embeddings.rows());
  if (static_cast<int>(labels.size()) != n)
    throw std::runtime_error("fit_classifier: " +
                             std::to_string(labels.size()) + " label sets for " +
                             std::to_string(n) + " embedding rows");
  if (!(train_ratio >= 0.0 && train_ratio <= 1.0))
    throw std::runtime_error("fit_classifier: train_ratio must lie in [0,1]");
  const int train_count =
      static_cast<int>(std::llround(train_ratio * static_cast<double>(n)));
  if (train_count < 1)
    throw std::runtime_error("fit_classifier: empty training split");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  ClassifierModel model;
  model.train_rows.assign(order.begin(), order.begin() + train_count);
  model.test_rows.assign(order.begin() + train_count, order.end());
  std::sort(model.train_rows.begin(), model.train_rows.end());
  std::sort(model.test_rows.begin(), model.test_rows.end());

  std::vector<std::vector<int>> train_labels;
  train_labels.reserve(model.train_rows.size());
  for (int r : model.train_rows)
    train_labels.push_back(labels[static_cast<std::size_t>(r)]);
  if (label_union(train_labels).size() < 2)
    throw std::runtime_error(
        "fit_classifier: training split holds fewer than 2 classes");

  model.classes = label_union(labels);
  const int c = static_cast<int>(model.classes.size());
  const auto m = static_cast<Eigen::Index>(model.train_rows.size());
  const Eigen::Index dim = embeddings.cols();

  Eigen::MatrixXd x(m, dim);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, c);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& set = labels[static_cast<std::size_t>(model.train_rows[r])];
    x.row(r) = embeddings.row(model.train_rows[r]);
    for (int cls : set) {
      const auto it =
          std::lower_bound(model.classes.begin(), model.classes.end(), cls);
      y(r, it - model.classes.begin()) = 1.0;
    }
  }

  // Full-batch descent on mean binary cross-entropy, all classes at once;
  // the penalty gradient 2*lambda*w leaves the biases alone.
  model.weights = Eigen::MatrixXd::Zero(c, dim);
  model.biases = Eigen::VectorXd::Zero(c);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int epoch = 0; epoch < kClassifierEpochs; ++epoch) {
    const Eigen::MatrixXd p = sigmoid(
        (x * model.weights.transpose()).rowwise() + model.biases.transpose());
    const Eigen::MatrixXd err = p - y;  // m x c
    model.weights -=
        kClassifierRate * (inv_m * err.transpose() * x +
                           2.0 * kClassifierPenalty * model.weights);
    model.biases -= kClassifierRate * (inv_m * err.colwise().sum().transpose());
  }
  return model;
}

Eigen::MatrixXd class_scores(const ClassifierModel& model,
                             const Eigen::MatrixXd& embeddings) {
  if (embeddings.cols() != model.weights.cols())
    throw std::runtime_error("class_scores: embedding dim " +
                             std::to_string(embeddings.cols()) +
                             " does not match the fitted dim " +
                             std::to_string(model.weights.cols()));
  return sigmoid((embeddings * model.weights.transpose()).rowwise() +
                 model.biases.transpose());
}

std::vector<std::vector<int>> predict_labels(
    const ClassifierModel& model, const Eigen::MatrixXd& embeddings,
    const std::vector<int>& label_cardinality) {
  const auto n = embeddings.rows();
  if (static_cast<Eigen::Index>(label_cardinality.size()) != n)
    throw std::runtime_error("predict_labels: " +
                             std::to_string(label_cardinality.size()) +
                             " cardinalities for " + std::to_string(n) +
                             " rows");
  const Eigen::MatrixXd scores = class_scores(model, embeddings);
  const int c = static_cast<int>(model.classes.size());

  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  std::vector<int> rank(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int want = label_cardinality[static_cast<std::size_t>(i)];
    if (want < 0)
      throw std::runtime_error("predict_labels: negative label cardinality");
    const int take = std::min(want, c);
    std::iota(rank.begin(), rank.end(), 0);
    // Stable sort on descending score keeps the ascending-id order inside
    // ties, which is the declared tie rule.
    std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
      return scores(i, a) > scores(i, b);
    });
    auto& set = out[static_cast<std::size_t>(i)];
    set.reserve(static_cast<std::size_t>(take));
    for (int r = 0; r < take; ++r)
      set.push_back(model.classes[static_cast<std::size_t>(rank[r])]);
    std::sort(set.begin(), set.end());
  }
  return out;
}

double macro_f1(const std::vector<std::vector<int>>& predicted,
                const std::vector<std::vector<int>>& truth,
                const std::vector<int>& class_universe) {
  if (class_universe.empty())
    throw std::runtime_error("macro_f1: empty class universe");
  if (predicted.size() != truth.size())
    throw std::runtime_error("macro_f1: " + std::to_string(predicted.size()) +
                             " predictions for " + std::to_string(truth.size()) +
                             " truth sets");

  struct Counts {
    long long tp = 0, fp = 0, fn = 0;
  };
  std::vector<Counts> counts(class_universe.size());
  std::vector<int> universe = class_universe;
  std::sort(universe.begin(), universe.end());
  const auto index_of = [&universe](int cls) -> int {
    const auto it = std::lower_bound(universe.begin(), universe.end(), cls);
    if (it == universe.end() || *it != cls) return -1;
    return static_cast<int>(it - universe.begin());
  };

  for (std::size_t node = 0; node < predicted.size(); ++node) {
    const auto& pred = predicted[node];
    const auto& gold = truth[node];
    for (int cls : pred) {
      const int idx = index_of(cls);
      if (idx < 0) continue;
      if (std::binary_search(gold.begin(), gold.end(), cls))
        ++counts[static_cast<std::size_t>(idx)].tp;
      else
        ++counts[static_cast<std::size_t>(idx)].fp;
    }
    for (int cls : gold) {
      const int idx = index_of(cls);
      if (idx < 0) continue;
      if (!std::binary_search(pred.begin(), pred.end(), cls))
        ++counts[static_cast<std::size_t>(idx)].fn;
    }
  }

  double total = 0.0;
  for (const Counts& c : counts) {
    const double precision =
        c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    const double recall =
        c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    if (precision + recall > 0.0)
      total += 2.0 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(universe.size());
}

std::vector<double> score_edges(const Eigen::MatrixXd& embeddings,
                                const std::vector<Edge>& pairs,
                                EdgeScorer scorer) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    if (u < 0 || v < 0 || u >= embeddings.rows() || v >= embeddings.rows())
      throw std::runtime_error("score_edges: pair (" + std::to_string(u) +
                               "," + std::to_string(v) +
                               ") outside the embedding rows");
    const double dot = embeddings.row(u).dot(embeddings.row(v));
    if (scorer == EdgeScorer::kInnerProduct) {
      scores.push_back(dot);
      continue;
    }
    const double nu = embeddings.row(u).norm();
    const double nv = embeddings.row(v).norm();
    scores.push_back(nu == 0.0 || nv == 0.0 ? 0.0 : dot / (nu * nv));
  }
  return scores;
}

double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty())
    throw std::runtime_error("auc: needs nonempty positive and negative lists");
  std::vector<double> neg = negative_scores;
  std::sort(neg.begin(), neg.end());
  long long wins = 0, ties = 0;
  for (double p : positive_scores) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += lo - neg.begin();
    ties += hi - lo;
  }
  const double pairs = static_cast<double>(positive_scores.size()) *
                       static_cast<double>(neg.size());
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) / pairs;
}

std::vector<ExperimentResult> run_classification_grid(
    const Graph& dataset, const std::string& dataset_name,
    const std::vector<double>& missing_ratios,
    const std::vector<double>& train_ratios, int runs,
    const DownstreamConfig& config, std::uint64_t seed) {
  check_runs(runs);
  if (!dataset.labels)
    throw std::runtime_error("run_classification_grid: dataset has no labels");
  require_attributes(dataset, "run_classification_grid");
  std::vector<int> universe = dataset.class_universe;
  if (universe.empty()) universe = label_union(*dataset.labels);

  std::vector<ExperimentResult> results;
  for (double mr : missing_ratios) {
    for (double tr : train_ratios) {
      ExperimentResult cell;
      cell.task = "classification";
      cell.dataset = dataset_name;
      cell.missing_ratio = mr;
      cell.train_ratio = tr;
      cell.metric = "macro_f1";
      for (int run = 0; run < runs; ++run) {
        const std::uint64_t cell_seed =
            derive_seed(seed, {kSeedGridClassification, ratio_tag(mr),
                               ratio_tag(tr),
                               static_cast<std::uint64_t>(run)});
        const MaskedGraph masked =
            remove_nodes(dataset, mr, derive_seed(cell_seed, {kSeedCorrupt}));
        const EmbeddingMatrix emb = complete_and_embed(
            masked.observed, dataset.n - masked.observed.n,
            require_attributes(masked.observed, "run_classification_grid"),
            config, cell_seed, nullptr);

        // Only surviving labeled nodes have ground truth; recovered nodes
        // stay out of the protocol.
        const auto& labels = *masked.observed.labels;
        std::vector<int> labeled;
        for (int i = 0; i < masked.observed.n; ++i)
          if (!labels[static_cast<std::size_t>(i)].empty()) labeled.push_back(i);
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(labeled.size()),
                             emb.rows.cols());
        std::vector<std::vector<int>> row_labels(labeled.size());
        for (std::size_t i = 0; i < labeled.size(); ++i) {
          rows.row(static_cast<Eigen::Index>(i)) = emb.rows.row(labeled[i]);
          row_labels[i] = labels[static_cast<std::size_t>(labeled[i])];
        }

        const ClassifierModel model = fit_classifier(
            rows, row_labels, tr, derive_seed(cell_seed, {kSeedClassifier}));
        Eigen::MatrixXd test(static_cast<Eigen::Index>(model.test_rows.size()),
                             rows.cols());
        std::vector<std::vector<int>> test_truth(model.test_rows.size());
        std::vector<int> cardinality(model.test_rows.size());
        for (std::size_t i = 0; i < model.test_rows.size(); ++i) {
          test.row(static_cast<Eigen::Index>(i)) = rows.row(model.test_rows[i]);
          test_truth[i] = row_labels[static_cast<std::size_t>(model.test_rows[i])];
          cardinality[i] = static_cast<int>(test_truth[i].size());
        }
        const auto predicted = predict_labels(model, test, cardinality);
        cell.values.push_back(macro_f1(predicted, test_truth, universe));
      }
      results.push_back(std::move(cell));
    }
  }
  return results;
}

std::vector<ExperimentResult> run_link_prediction_grid(
    const Graph& dataset, const std::string& dataset_name,
    const std::vector<double>& missing_ratios, int runs,
    const DownstreamConfig& config, std::uint64_t seed) {
  check_runs(runs);
  require_attributes(dataset, "run_link_prediction_grid");

  std::vector<ExperimentResult> results;
  for (double mr : missing_ratios) {
    ExperimentResult cell;
    cell.task = "link_prediction";
    cell.dataset = dataset_name;
    cell.missing_ratio = mr;
    cell.train_ratio = 1.0 - config.edge_holdout;
    cell.metric = "auc";
    for (int run = 0; run < runs; ++run) {
      const std::uint64_t cell_seed =
          derive_seed(seed, {kSeedGridLinkPrediction, ratio_tag(mr),
                             static_cast<std::uint64_t>(run)});
      const MaskedGraph masked =
          remove_nodes(dataset, mr, derive_seed(cell_seed, {kSeedCorrupt}));
      const EdgeHoldout holdout =
          hold_out_edges(masked.observed, config.edge_holdout,
                         derive_seed(cell_seed, {kSeedHoldout}));

      RecoveredGraph recovered;
      const EmbeddingMatrix emb = complete_and_embed(
          holdout.train, dataset.n - masked.observed.n,
          require_attributes(masked.observed, "run_link_prediction_grid"),
          config, cell_seed, &recovered);

      // Protocol isolation: the graph the embeddings saw must not contain
      // any held-out positive.
      for (const Edge& e : holdout.positives)
        if (recovered.graph.has_edge(e.first, e.second))
          throw std::logic_error(
              "run_link_prediction_grid: held-out edge leaked into the "
              "embedded graph");

      const auto pos = score_edges(emb.rows, holdout.positives, config.scorer);
      const auto neg = score_edges(emb.rows, holdout.negatives, config.scorer);
      cell.values.push_back(auc(pos, neg));
    }
    results.push_back(std::move(cell));
  }
  return results;
}

void write_results_csv(const std::vector<ExperimentResult>& results,
                       const std::string& path,
                       const std::string& extra_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
  if (!extra_header.empty()) out << "# " << extra_header << "\n";
  out << "task,dataset,missing_ratio,train_ratio,run,metric,value\n";
  std::ostringstream value;
  value << std::fixed << std::setprecision(6);
  const auto row = [&](const ExperimentResult& r, const std::string& run,
                       double v) {
    value.str("");
    value << v;
    out << r.task << "," << r.dataset << "," << r.missing_ratio << ","
        << r.train_ratio << "," << run << "," << r.metric << ","
        << value.str() << "\n";
  };
  for (const ExperimentResult& r : results) {
    for (std::size_t i = 0; i < r.values.size(); ++i)
      row(r, std::to_string(i + 1), r.values[i]);
    row(r, "mean", r.mean());
  }
  if (!out)
    throw std::runtime_error("write_results_csv: write failed on " + path);
}

}  // namespace inembed
