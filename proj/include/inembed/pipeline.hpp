#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "inembed/completion.hpp"
#include "inembed/eval.hpp"

namespace inembed {

/// Everything a pipeline run needs, loadable from a flat "key = value" file
/// with command-line overrides on top. Stage configs reuse the module
/// structs; the seeds inside them are ignored — every stage derives its own
/// stream from `seed`.
struct PipelineConfig {
  // Dataset.
  std::string edges;       // edge-list path (required by ingest)
  std::string attributes;  // optional attribute-matrix path
  std::string labels;      // optional label-list path
  std::string name = "dataset";
  int n_hint = -1;  // optional node-count floor for the edge list

  // Corruption: exactly one of the two when the corrupt stage runs.
  double missing_ratio = -1.0;
  int n_missing = -1;

  // Completion and embedding.
  KronEMConfig completion;
  std::vector<int> hidden_t{16};  // widths after the structure input dim
  std::vector<int> hidden_p{8};   // widths after the attribute input dim
  TrainConfig embed;

  // Evaluation grids.
  bool eval_classification = true;
  bool eval_link_prediction = true;
  std::vector<double> eval_missing_ratios;  // empty: fall back to missing_ratio
  std::vector<double> eval_train_ratios{0.5};
  int eval_runs = 1;
  double edge_holdout = 0.2;
  EdgeScorer scorer = EdgeScorer::kCosine;

  // Run control.
  std::uint64_t seed = 0;
  std::string out = "out";
  std::vector<std::string> stages{"ingest", "corrupt", "complete", "embed",
                                  "evaluate"};

  /// Parses a flat config file: one "key = value" per line, "#" comments.
  static PipelineConfig from_file(const std::string& path);

  /// Applies one "key" / "value" pair (same keys as the file); flags win
  /// over file values by being applied afterwards.
  void set(const std::string& key, const std::string& value);

  /// Canonical sorted key=value serialization of everything that affects
  /// artifact content (stage list and output directory excluded).
  std::string canonical() const;

  /// FNV-1a 64 over canonical(), the fingerprint stamped into artifacts.
  std::uint64_t config_hash() const;

  /// The "config=<hex16> seed=<u64>" comment line content for artifacts.
  std::string artifact_header() const;
};

/// A stage failure: carries which stage broke for the stage-tagged
/// diagnostic.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs the configured stages in order (ingest, corrupt, complete, embed,
/// evaluate), persisting each stage's artifacts into config.out:
///   corrupt  -> masked_edges.txt, masked_meta.txt
///   complete -> recovered_edges.txt, theta.txt, mapping.txt
///   embed    -> embeddings.txt, loss_log.csv
///   evaluate -> results.csv
/// A stage whose in-process input is missing loads the artifact from
/// config.out instead (refusing a config-hash mismatch), so a run can resume
/// from any stage; with no artifacts at all, complete treats the ingested
/// graph as a pre-masked input (requires n_missing) and embed treats it as
/// fully observed. Throws StageError on any failure.
void run_pipeline(const PipelineConfig& config);

/// Writes a sampled Kronecker graph as an edge list (the ground-truth
/// generator). Initiator entries must lie strictly inside (0,1); k is capped
/// at 15 (32768 nodes).
void write_synthetic_graph(const std::vector<double>& theta_entries, int k,
                           std::uint64_t seed, const std::string& path);

}  // namespace inembed
