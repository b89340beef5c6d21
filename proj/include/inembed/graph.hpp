#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace inembed {

using Edge = std::pair<int, int>;  // normalized: first < second

/// Undirected simple graph with optional node attributes and labels.
/// Edges are kept sorted, unique, and orientation-normalized (u < v).
struct Graph {
  int n = 0;
  std::vector<Edge> edges;
  // One row per node when present.
  std::optional<Eigen::MatrixXd> attributes;
  // Per-node sorted class-id sets when present; class_universe lists the
  // distinct class ids the labels may reference.
  std::optional<std::vector<std::vector<int>>> labels;
  std::vector<int> class_universe;

  bool has_edge(int u, int v) const;
  std::size_t edge_count() const { return edges.size(); }

  /// Sorts, deduplicates, and orientation-normalizes `edges`; drops
  /// self-loops. Returns how many self-loops were dropped. Call after bulk
  /// edge insertion.
  int normalize_edges();

  /// Throws if an edge endpoint is out of range, attributes have the wrong
  /// row count, or labels have the wrong length.
  void check() const;
};

/// Result of node-removal corruption: the surviving graph plus everything
/// needed to reconstruct the original (ids in `removed_*` are original ids).
struct MaskedGraph {
  Graph observed;
  std::vector<int> removed_nodes;   // ascending original ids
  std::vector<Edge> removed_edges;  // original-id pairs touching removed nodes
  int original_n = 0;
  std::vector<int> old_to_new;  // original id -> observed id, -1 if removed
  std::vector<int> new_to_old;  // observed id -> original id
};

/// Result of edge hold-out for link prediction: train keeps all nodes,
/// positives are the held-out edges, negatives are sampled non-edges.
struct EdgeHoldout {
  Graph train;
  std::vector<Edge> positives;
  std::vector<Edge> negatives;
};

/// Reads a whitespace-separated edge list ("#" starts a comment line).
/// Node count is max id + 1, raised to any "n=<count>" declared in the
/// leading comment block and to n_hint; ids >= n_hint are an error.
/// Self-loops are dropped; their count is written to *dropped_self_loops
/// when given.
Graph load_edge_list(const std::string& path,
                     std::optional<int> n_hint = std::nullopt,
                     int* dropped_self_loops = nullptr);

/// Attaches a dense attribute matrix (one whitespace-separated row of reals
/// per node, row i binds to node i). Throws on row-count mismatch or ragged
/// rows.
Graph load_attributes(const std::string& path, const Graph& graph);

/// Attaches label sets from "node_id class_id" lines; a node may appear on
/// several lines. The class universe is the set of distinct class ids seen.
Graph load_labels(const std::string& path, const Graph& graph);

/// Writes the edge list with a "# n=<n>" header line (plus an optional
/// caller-supplied "# ..." comment) so isolated nodes survive a round-trip.
void save_edge_list(const Graph& graph, const std::string& path,
                    const std::string& extra_header = "");

/// Removes exactly the given node ids (deduplicated, any order) together
/// with their incident edges, attribute rows, and labels; survivors are
/// compactly re-indexed in ascending-id order and the id maps recorded.
/// The deterministic core of the corruption ops, also used to rebuild a
/// masked graph from a persisted removal list.
MaskedGraph mask_out_nodes(const Graph& graph, const std::vector<int>& nodes);

/// Removes `count` uniformly chosen nodes (without replacement) together
/// with their incident edges, attribute rows, and labels; survivors are
/// compactly re-indexed in ascending-id order and the id maps recorded.
MaskedGraph remove_node_count(const Graph& graph, int count,
                              std::uint64_t seed);

/// Ratio flavor of node removal: removes round(ratio * n) nodes.
MaskedGraph remove_nodes(const Graph& graph, double ratio, std::uint64_t seed);

/// Holds out round(ratio * |E|) uniformly chosen edges as positives and
/// samples an equal number of distinct non-edges as negatives. The train
/// graph keeps all nodes (and attributes/labels).
EdgeHoldout hold_out_edges(const Graph& graph, double ratio,
                           std::uint64_t seed);

/// Samples `count` distinct unordered non-edges (no self-pairs, none in
/// graph.edges or `exclude`). Returned ascending. Throws when fewer than
/// `count` such pairs exist.
std::vector<Edge> sample_negative_pairs(const Graph& graph, int count,
                                        std::uint64_t seed,
                                        const std::vector<Edge>& exclude = {});

}  // namespace inembed
