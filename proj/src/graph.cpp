#include "inembed/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "inembed/rng.hpp"

namespace inembed {

namespace {

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string where(const std::string& path, int line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

long long parse_id(const std::string& tok, const std::string& path,
                   int line_no) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where(path, line_no) + "expected an integer, got '" +
                             tok + "'");
  }
  if (used != tok.size())
    throw std::runtime_error(where(path, line_no) + "expected an integer, got '" +
                             tok + "'");
  if (v < 0)
    throw std::runtime_error(where(path, line_no) + "negative node id " +
                             std::to_string(v));
  return v;
}

double parse_real(const std::string& tok, const std::string& path,
                  int line_no) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where(path, line_no) + "expected a real, got '" +
                             tok + "'");
  }
  if (used != tok.size())
    throw std::runtime_error(where(path, line_no) + "expected a real, got '" +
                             tok + "'");
  return v;
}

}  // namespace

bool Graph::has_edge(int u, int v) const {
  if (u == v) return false;
  if (u > v) std::swap(u, v);
  return std::binary_search(edges.begin(), edges.end(), Edge{u, v});
}

int Graph::normalize_edges() {
  int self_loops = 0;
  std::vector<Edge> kept;
  kept.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) {
      ++self_loops;
      continue;
    }
    if (u > v) std::swap(u, v);
    kept.emplace_back(u, v);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  edges = std::move(kept);
  return self_loops;
}

void Graph::check() const {
  for (auto [u, v] : edges) {
    if (u < 0 || v >= n || u >= v)
      throw std::runtime_error("graph: bad edge (" + std::to_string(u) + "," +
                               std::to_string(v) + ") for n=" +
                               std::to_string(n));
  }
  for (std::size_t e = 1; e < edges.size(); ++e)
    if (edges[e - 1] >= edges[e])
      throw std::runtime_error("graph: edges not sorted/unique");
  if (attributes && attributes->rows() != n)
    throw std::runtime_error("graph: attribute rows " +
                             std::to_string(attributes->rows()) +
                             " != n=" + std::to_string(n));
  if (labels && static_cast<int>(labels->size()) != n)
    throw std::runtime_error("graph: label sets " +
                             std::to_string(labels->size()) +
                             " != n=" + std::to_string(n));
}

Graph load_edge_list(const std::string& path, std::optional<int> n_hint,
                     int* dropped_self_loops) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  if (n_hint && *n_hint < 0)
    throw std::runtime_error("load_edge_list: negative n_hint");

  Graph g;
  std::string line;
  int line_no = 0;
  long long max_id = -1;
  long long header_n = 0;
  bool seen_data = false;
  int self_loops = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!seen_data) {
      // A leading comment may declare the node count ("# n=<count>"), the
      // floor that lets isolated tail nodes survive a save/load round-trip.
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] == '#') {
        std::istringstream hs(line.substr(first + 1));
        std::string token;
        while (hs >> token) {
          if (token.rfind("n=", 0) != 0) continue;
          try {
            header_n = std::max(header_n, std::stoll(token.substr(2)));
          } catch (const std::exception&) {
            // not a count; just a comment that happens to contain "n="
          }
        }
      }
    }
    std::istringstream ls(strip_comment(line));
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    seen_data = true;
    if (!(ls >> b))
      throw std::runtime_error(where(path, line_no) +
                               "expected two node ids, got one");
    if (ls >> extra)
      throw std::runtime_error(where(path, line_no) +
                               "expected two node ids, got more");
    const long long u = parse_id(a, path, line_no);
    const long long v = parse_id(b, path, line_no);
    if (n_hint && (u >= *n_hint || v >= *n_hint))
      throw std::runtime_error(where(path, line_no) + "node id " +
                               std::to_string(std::max(u, v)) +
                               " >= n_hint=" + std::to_string(*n_hint));
    max_id = std::max({max_id, u, v});
    if (max_id >= (1LL << 31) - 1)
      throw std::runtime_error(where(path, line_no) + "node id too large");
    if (u == v) {
      ++self_loops;
      continue;
    }
    g.edges.emplace_back(static_cast<int>(std::min(u, v)),
                         static_cast<int>(std::max(u, v)));
  }
  if (header_n >= (1LL << 31) - 1)
    throw std::runtime_error(where(path, 1) + "declared node count too large");
  g.n = static_cast<int>(std::max(max_id + 1, header_n));
  if (n_hint) g.n = std::max(g.n, *n_hint);
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  if (dropped_self_loops) *dropped_self_loops = self_loops;
  return g;
}

Graph load_attributes(const std::string& path, const Graph& graph) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_attributes: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(strip_comment(line));
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(parse_real(tok, path, line_no));
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(
          where(path, line_no) + "ragged row: " + std::to_string(row.size()) +
          " values, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != graph.n)
    throw std::runtime_error("load_attributes: " + std::to_string(rows.size()) +
                             " rows for a graph with n=" +
                             std::to_string(graph.n));

  Graph out = graph;
  const auto cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd attrs(graph.n, cols);
  for (int i = 0; i < graph.n; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      attrs(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  out.attributes = std::move(attrs);
  return out;
}

Graph load_labels(const std::string& path, const Graph& graph) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_labels: cannot open " + path);

  std::vector<std::vector<int>> labels(static_cast<std::size_t>(graph.n));
  std::set<int> classes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(strip_comment(line));
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    if (!(ls >> b) || (ls >> extra))
      throw std::runtime_error(where(path, line_no) +
                               "expected 'node_id class_id'");
    const long long node = parse_id(a, path, line_no);
    const long long cls = parse_id(b, path, line_no);
    if (node >= graph.n)
      throw std::runtime_error(where(path, line_no) + "node id " +
                               std::to_string(node) + " >= n=" +
                               std::to_string(graph.n));
    labels[static_cast<std::size_t>(node)].push_back(static_cast<int>(cls));
    classes.insert(static_cast<int>(cls));
  }
  for (auto& set : labels) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }

  Graph out = graph;
  out.labels = std::move(labels);
  out.class_universe.assign(classes.begin(), classes.end());
  return out;
}

void save_edge_list(const Graph& graph, const std::string& path,
                    const std::string& extra_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  out << "# n=" << graph.n << "\n";
  if (!extra_header.empty()) out << "# " << extra_header << "\n";
  for (auto [u, v] : graph.edges) out << u << " " << v << "\n";
  if (!out) throw std::runtime_error("save_edge_list: write failed: " + path);
}

MaskedGraph mask_out_nodes(const Graph& graph, const std::vector<int>& nodes) {
  if (graph.n <= 0) throw std::runtime_error("mask_out_nodes: empty graph");
  std::vector<int> removed = nodes;
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
  if (removed.size() != nodes.size())
    throw std::runtime_error("mask_out_nodes: duplicate node ids");
  for (int v : removed)
    if (v < 0 || v >= graph.n)
      throw std::runtime_error("mask_out_nodes: node id " + std::to_string(v) +
                               " outside [0," + std::to_string(graph.n) + ")");
  const int count = static_cast<int>(removed.size());
  if (graph.n - count < 2)
    throw std::runtime_error("mask_out_nodes: removing " +
                             std::to_string(count) + " of " +
                             std::to_string(graph.n) +
                             " nodes leaves fewer than 2");

  MaskedGraph out;
  out.original_n = graph.n;
  out.removed_nodes = std::move(removed);

  std::vector<char> is_removed(static_cast<std::size_t>(graph.n), 0);
  for (int v : out.removed_nodes) is_removed[static_cast<std::size_t>(v)] = 1;

  out.old_to_new.assign(static_cast<std::size_t>(graph.n), -1);
  out.new_to_old.reserve(static_cast<std::size_t>(graph.n - count));
  for (int v = 0; v < graph.n; ++v) {
    if (is_removed[static_cast<std::size_t>(v)]) continue;
    out.old_to_new[static_cast<std::size_t>(v)] =
        static_cast<int>(out.new_to_old.size());
    out.new_to_old.push_back(v);
  }

  out.observed.n = graph.n - count;
  for (auto [u, v] : graph.edges) {
    if (is_removed[static_cast<std::size_t>(u)] ||
        is_removed[static_cast<std::size_t>(v)]) {
      out.removed_edges.emplace_back(u, v);
    } else {
      // old->new is increasing on survivors, so order and u<v are preserved.
      out.observed.edges.emplace_back(out.old_to_new[static_cast<std::size_t>(u)],
                                      out.old_to_new[static_cast<std::size_t>(v)]);
    }
  }

  if (graph.attributes) {
    Eigen::MatrixXd attrs(out.observed.n, graph.attributes->cols());
    for (int i = 0; i < out.observed.n; ++i)
      attrs.row(i) = graph.attributes->row(out.new_to_old[static_cast<std::size_t>(i)]);
    out.observed.attributes = std::move(attrs);
  }
  if (graph.labels) {
    std::vector<std::vector<int>> labels;
    labels.reserve(static_cast<std::size_t>(out.observed.n));
    for (int i = 0; i < out.observed.n; ++i)
      labels.push_back((*graph.labels)[static_cast<std::size_t>(
          out.new_to_old[static_cast<std::size_t>(i)])]);
    out.observed.labels = std::move(labels);
  }
  out.observed.class_universe = graph.class_universe;
  return out;
}

MaskedGraph remove_node_count(const Graph& graph, int count,
                              std::uint64_t seed) {
  if (graph.n <= 0) throw std::runtime_error("remove_nodes: empty graph");
  if (count < 0) throw std::runtime_error("remove_nodes: negative count");
  if (graph.n - count < 2)
    throw std::runtime_error("remove_nodes: removing " + std::to_string(count) +
                             " of " + std::to_string(graph.n) +
                             " nodes leaves fewer than 2");
  Rng rng(seed);
  return mask_out_nodes(graph, rng.sample_indices(graph.n, count));
}

MaskedGraph remove_nodes(const Graph& graph, double ratio, std::uint64_t seed) {
  if (graph.n <= 0) throw std::runtime_error("remove_nodes: empty graph");
  if (ratio < 0.0 || ratio >= 1.0)
    throw std::runtime_error("remove_nodes: ratio " + std::to_string(ratio) +
                             " outside [0,1)");
  const int count = static_cast<int>(std::llround(ratio * graph.n));
  return remove_node_count(graph, count, seed);
}

EdgeHoldout hold_out_edges(const Graph& graph, double ratio,
                           std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::runtime_error("hold_out_edges: ratio " + std::to_string(ratio) +
                             " outside (0,1)");
  const int m = static_cast<int>(graph.edges.size());
  const int holdout = static_cast<int>(std::llround(ratio * m));
  if (holdout < 1)
    throw std::runtime_error("hold_out_edges: " + std::to_string(m) +
                             " edges is too few for ratio " +
                             std::to_string(ratio));

  Rng rng(seed);
  const std::vector<int> picked = rng.sample_indices(m, holdout);
  std::vector<char> held(static_cast<std::size_t>(m), 0);
  for (int e : picked) held[static_cast<std::size_t>(e)] = 1;

  EdgeHoldout out;
  out.train = graph;
  out.train.edges.clear();
  for (int e = 0; e < m; ++e) {
    if (held[static_cast<std::size_t>(e)])
      out.positives.push_back(graph.edges[static_cast<std::size_t>(e)]);
    else
      out.train.edges.push_back(graph.edges[static_cast<std::size_t>(e)]);
  }
  out.negatives = sample_negative_pairs(
      graph, holdout, derive_seed(seed, {kSeedNegatives}));
  return out;
}

std::vector<Edge> sample_negative_pairs(const Graph& graph, int count,
                                        std::uint64_t seed,
                                        const std::vector<Edge>& exclude) {
  if (count < 0)
    throw std::runtime_error("sample_negative_pairs: negative count");
  if (count == 0) return {};

  // Forbidden = edges ∪ exclude, normalized.
  std::vector<Edge> forbidden = graph.edges;
  for (auto [u, v] : exclude) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    forbidden.emplace_back(u, v);
  }
  std::sort(forbidden.begin(), forbidden.end());
  forbidden.erase(std::unique(forbidden.begin(), forbidden.end()),
                  forbidden.end());

  const long long n = graph.n;
  const long long total = n * (n - 1) / 2;
  const long long available = total - static_cast<long long>(forbidden.size());
  if (count > available)
    throw std::runtime_error("sample_negative_pairs: requested " +
                             std::to_string(count) + " non-edges but only " +
                             std::to_string(available) + " exist");

  const auto is_forbidden = [&](const Edge& e) {
    return std::binary_search(forbidden.begin(), forbidden.end(), e);
  };

  Rng rng(seed);
  std::vector<Edge> result;
  result.reserve(static_cast<std::size_t>(count));

  if (2 * static_cast<long long>(count) >= available || available <= 1024) {
    // Dense regime: enumerate the non-edges and take a uniform subset.
    std::vector<Edge> pool;
    pool.reserve(static_cast<std::size_t>(available));
    for (int u = 0; u < graph.n; ++u)
      for (int v = u + 1; v < graph.n; ++v)
        if (!is_forbidden({u, v})) pool.emplace_back(u, v);
    for (int i = 0; i < count; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     static_cast<std::size_t>(rng.uniform_int(
                         static_cast<std::uint64_t>(available - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      result.push_back(pool[static_cast<std::size_t>(i)]);
    }
  } else {
    // Sparse regime: rejection sampling with a seen-set.
    std::set<Edge> seen;
    while (static_cast<int>(result.size()) < count) {
      int u = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      int v = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      const Edge e{u, v};
      if (is_forbidden(e) || !seen.insert(e).second) continue;
      result.push_back(e);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace inembed
