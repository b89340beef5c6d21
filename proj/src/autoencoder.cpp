#include "inembed/autoencoder.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "inembed/rng.hpp"

namespace inembed {

namespace {

// Stream tag separating the batch-order draws from the init_params draws, so
// train(epochs=0) reproduces init_params(seed) exactly.
constexpr std::uint64_t kBatchOrderTag = 0xb0;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Forward pass keeping every activation: acts[0] is the input, acts[l+1] the
// output of layer l. Needed for reverse-mode accumulation.
std::vector<Eigen::MatrixXd> run_traced(const LayerStack& stack,
                                        const Eigen::MatrixXd& in) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(stack.weights.size() + 1);
  acts.push_back(in);
  for (std::size_t l = 0; l < stack.weights.size(); ++l)
    acts.push_back(
        sigmoid((acts.back() * stack.weights[l]).rowwise() + stack.biases[l]));
  return acts;
}

// Accumulates this stack's gradient into `grad` given dL/d(output activation)
// and returns dL/d(input rows).
Eigen::MatrixXd backprop(const LayerStack& stack,
                         const std::vector<Eigen::MatrixXd>& acts,
                         Eigen::MatrixXd d_out, LayerStack& grad) {
  for (int l = static_cast<int>(stack.weights.size()) - 1; l >= 0; --l) {
    const auto& a = acts[static_cast<std::size_t>(l) + 1];
    const Eigen::MatrixXd dz =
        (d_out.array() * a.array() * (1.0 - a.array())).matrix();
    grad.weights[static_cast<std::size_t>(l)] +=
        acts[static_cast<std::size_t>(l)].transpose() * dz;
    grad.biases[static_cast<std::size_t>(l)] += dz.colwise().sum();
    d_out = dz * stack.weights[static_cast<std::size_t>(l)].transpose();
  }
  return d_out;
}

LayerStack zeros_like(const LayerStack& stack) {
  LayerStack z;
  for (std::size_t l = 0; l < stack.weights.size(); ++l) {
    z.weights.push_back(Eigen::MatrixXd::Zero(stack.weights[l].rows(),
                                              stack.weights[l].cols()));
    z.biases.push_back(Eigen::RowVectorXd::Zero(stack.biases[l].size()));
  }
  return z;
}

ModelParams zeros_like(const ModelParams& p) {
  return {zeros_like(p.encode_t),  zeros_like(p.encode_p),
          zeros_like(p.decode_t),  zeros_like(p.decode_p),
          zeros_like(p.decode_tp), zeros_like(p.decode_pt)};
}

void axpy(LayerStack& dst, const LayerStack& g, double scale) {
  for (std::size_t l = 0; l < dst.weights.size(); ++l) {
    dst.weights[l] += scale * g.weights[l];
    dst.biases[l] += scale * g.biases[l];
  }
}

void apply_update(ModelParams& p, const ModelParams& g, double scale) {
  axpy(p.encode_t, g.encode_t, scale);
  axpy(p.encode_p, g.encode_p, scale);
  axpy(p.decode_t, g.decode_t, scale);
  axpy(p.decode_p, g.decode_p, scale);
  axpy(p.decode_tp, g.decode_tp, scale);
  axpy(p.decode_pt, g.decode_pt, scale);
}

LayerStack make_stack(const std::vector<int>& sizes, Rng& rng) {
  LayerStack s;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) w(r, c) = rng.uniform(-bound, bound);
    s.weights.push_back(std::move(w));
    s.biases.push_back(Eigen::RowVectorXd::Zero(fan_out));
  }
  return s;
}

std::vector<int> mirrored(const ViewSpec& spec) {
  return {spec.layer_sizes.rbegin(), spec.layer_sizes.rend()};
}

// Decoder from `from`'s representation into `to`'s input space: `to`'s
// mirrored chain with the first width replaced by `from`'s representation
// dim.
std::vector<int> crossed(const ViewSpec& from, const ViewSpec& to) {
  std::vector<int> sizes = mirrored(to);
  sizes.front() = from.rep_dim();
  return sizes;
}

int stack_input_dim(const LayerStack& s) {
  return static_cast<int>(s.weights.front().rows());
}

void check_batch(const ModelParams& params, const Eigen::MatrixXd& xt,
                 const Eigen::MatrixXd& xp) {
  if (xt.rows() != xp.rows())
    throw std::runtime_error("forward: batch row mismatch, " +
                             std::to_string(xt.rows()) + " structure vs " +
                             std::to_string(xp.rows()) + " attribute rows");
  if (xt.cols() != stack_input_dim(params.encode_t))
    throw std::runtime_error(
        "forward: structure rows have dim " + std::to_string(xt.cols()) +
        ", encoder expects " + std::to_string(stack_input_dim(params.encode_t)));
  if (xp.cols() != stack_input_dim(params.encode_p))
    throw std::runtime_error(
        "forward: attribute rows have dim " + std::to_string(xp.cols()) +
        ", encoder expects " + std::to_string(stack_input_dim(params.encode_p)));
}

Eigen::MatrixXd adjacency_rows(const Graph& g) {
  Eigen::MatrixXd xt = Eigen::MatrixXd::Zero(g.n, g.n);
  for (auto [u, v] : g.edges) {
    xt(u, v) = 1.0;
    xt(v, u) = 1.0;
  }
  return xt;
}

std::vector<bool> observed_rows(const RecoveredGraph& recovered) {
  if (recovered.observed_count < 0 || recovered.observed_count > recovered.graph.n)
    throw std::runtime_error("observed_count " +
                             std::to_string(recovered.observed_count) +
                             " out of range for n=" +
                             std::to_string(recovered.graph.n));
  std::vector<bool> mask(static_cast<std::size_t>(recovered.graph.n));
  for (int i = 0; i < recovered.observed_count; ++i)
    mask[static_cast<std::size_t>(i)] = true;
  return mask;
}

}  // namespace

void ViewSpec::check() const {
  if (layer_sizes.size() < 2)
    throw std::runtime_error("view spec needs an input and a representation " \
                             "width, got " +
                             std::to_string(layer_sizes.size()) + " entries");
  for (int s : layer_sizes)
    if (s <= 0)
      throw std::runtime_error("view spec has non-positive width " +
                               std::to_string(s));
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::runtime_error("alpha must lie in [0,1], got " +
                             std::to_string(alpha));
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::runtime_error("beta must lie in [0,1], got " +
                             std::to_string(beta));
  if (!(learning_rate > 0.0))
    throw std::runtime_error("learning_rate must be positive");
  if (batch_size < 1)
    throw std::runtime_error("batch_size must be >= 1, got " +
                             std::to_string(batch_size));
  if (epochs < 0)
    throw std::runtime_error("epochs must be >= 0, got " +
                             std::to_string(epochs));
}

Eigen::MatrixXd LayerStack::run(const Eigen::MatrixXd& in) const {
  Eigen::MatrixXd a = in;
  for (std::size_t l = 0; l < weights.size(); ++l)
    a = sigmoid((a * weights[l]).rowwise() + biases[l]);
  return a;
}

ModelParams init_params(const ViewSpec& spec_t, const ViewSpec& spec_p,
                        std::uint64_t seed) {
  spec_t.check();
  spec_p.check();
  Rng rng(seed);
  ModelParams p;
  p.encode_t = make_stack(spec_t.layer_sizes, rng);
  p.encode_p = make_stack(spec_p.layer_sizes, rng);
  p.decode_t = make_stack(mirrored(spec_t), rng);
  p.decode_p = make_stack(mirrored(spec_p), rng);
  p.decode_tp = make_stack(crossed(spec_t, spec_p), rng);
  p.decode_pt = make_stack(crossed(spec_p, spec_t), rng);
  return p;
}

ForwardPass forward(const ModelParams& params, const Eigen::MatrixXd& xt,
                    const Eigen::MatrixXd& xp) {
  check_batch(params, xt, xp);
  ForwardPass fp;
  fp.yt = params.encode_t.run(xt);
  fp.yp = params.encode_p.run(xp);
  fp.t_self = params.decode_t.run(fp.yt);
  fp.p_self = params.decode_p.run(fp.yp);
  fp.p_cross = params.decode_tp.run(fp.yt);
  fp.t_cross = params.decode_pt.run(fp.yp);
  return fp;
}

double loss(const ForwardPass& fp, const Eigen::MatrixXd& xt,
            const Eigen::MatrixXd& xp, const std::vector<bool>& observed_mask,
            const TrainConfig& config) {
  const auto rows = xt.rows();
  if (static_cast<Eigen::Index>(observed_mask.size()) != rows)
    throw std::runtime_error("loss: mask covers " +
                             std::to_string(observed_mask.size()) +
                             " rows, batch has " + std::to_string(rows));
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double w = observed_mask[static_cast<std::size_t>(i)]
                         ? config.beta
                         : 1.0 - config.beta;
    const double self = (xt.row(i) - fp.t_self.row(i)).squaredNorm() +
                        (xp.row(i) - fp.p_self.row(i)).squaredNorm();
    const double cross = (xt.row(i) - fp.t_cross.row(i)).squaredNorm() +
                         (xp.row(i) - fp.p_cross.row(i)).squaredNorm();
    total += w * ((1.0 - config.alpha) * self + config.alpha * cross);
  }
  return total;
}

ModelParams gradients(const ModelParams& params, const Eigen::MatrixXd& xt,
                      const Eigen::MatrixXd& xp,
                      const std::vector<bool>& observed_mask,
                      const TrainConfig& config) {
  check_batch(params, xt, xp);
  const auto rows = xt.rows();
  if (static_cast<Eigen::Index>(observed_mask.size()) != rows)
    throw std::runtime_error("gradients: mask covers " +
                             std::to_string(observed_mask.size()) +
                             " rows, batch has " + std::to_string(rows));

  const auto t_acts = run_traced(params.encode_t, xt);
  const auto p_acts = run_traced(params.encode_p, xp);
  const auto& yt = t_acts.back();
  const auto& yp = p_acts.back();
  const auto ts_acts = run_traced(params.decode_t, yt);
  const auto ps_acts = run_traced(params.decode_p, yp);
  const auto pc_acts = run_traced(params.decode_tp, yt);
  const auto tc_acts = run_traced(params.decode_pt, yp);

  Eigen::VectorXd w(rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    w(i) = observed_mask[static_cast<std::size_t>(i)] ? config.beta
                                                      : 1.0 - config.beta;

  // dL/d(reconstruction) for each of the four outputs; rows scale by their
  // observed/recovered weight.
  const auto weighted = [&w](Eigen::MatrixXd m) -> Eigen::MatrixXd {
    m.array().colwise() *= w.array();
    return m;
  };
  const double ws = 2.0 * (1.0 - config.alpha);
  const double wc = 2.0 * config.alpha;
  const Eigen::MatrixXd d_tself = weighted(ws * (ts_acts.back() - xt));
  const Eigen::MatrixXd d_pself = weighted(ws * (ps_acts.back() - xp));
  const Eigen::MatrixXd d_pcross = weighted(wc * (pc_acts.back() - xp));
  const Eigen::MatrixXd d_tcross = weighted(wc * (tc_acts.back() - xt));

  ModelParams g = zeros_like(params);
  Eigen::MatrixXd d_yt = backprop(params.decode_t, ts_acts, d_tself, g.decode_t);
  d_yt += backprop(params.decode_tp, pc_acts, d_pcross, g.decode_tp);
  Eigen::MatrixXd d_yp = backprop(params.decode_p, ps_acts, d_pself, g.decode_p);
  d_yp += backprop(params.decode_pt, tc_acts, d_tcross, g.decode_pt);
  backprop(params.encode_t, t_acts, std::move(d_yt), g.encode_t);
  backprop(params.encode_p, p_acts, std::move(d_yp), g.encode_p);
  return g;
}

TrainResult train(const RecoveredGraph& recovered,
                  const Eigen::MatrixXd& attributes, const ViewSpec& spec_t,
                  const ViewSpec& spec_p, const TrainConfig& config) {
  spec_t.check();
  spec_p.check();
  config.validate();
  const Graph& g = recovered.graph;
  if (spec_t.input_dim() != g.n)
    throw std::runtime_error("train: structure view expects input dim " +
                             std::to_string(spec_t.input_dim()) +
                             " but the graph has " + std::to_string(g.n) +
                             " nodes");
  if (attributes.rows() != g.n)
    throw std::runtime_error("train: " + std::to_string(attributes.rows()) +
                             " attribute rows for " + std::to_string(g.n) +
                             " nodes");
  if (spec_p.input_dim() != attributes.cols())
    throw std::runtime_error("train: attribute view expects input dim " +
                             std::to_string(spec_p.input_dim()) +
                             " but rows have " +
                             std::to_string(attributes.cols()) + " columns");

  const Eigen::MatrixXd xt = adjacency_rows(g);
  const std::vector<bool> mask = observed_rows(recovered);

  TrainResult out;
  out.params = init_params(spec_t, spec_p, config.seed);

  Rng order(derive_seed(config.seed, {kBatchOrderTag}));
  std::vector<int> idx(static_cast<std::size_t>(g.n));
  std::iota(idx.begin(), idx.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order.shuffle(idx);
    for (int start = 0; start < g.n; start += config.batch_size) {
      const int b = std::min(config.batch_size, g.n - start);
      Eigen::MatrixXd xt_b(b, xt.cols());
      Eigen::MatrixXd xp_b(b, attributes.cols());
      std::vector<bool> mask_b(static_cast<std::size_t>(b));
      for (int r = 0; r < b; ++r) {
        const int node = idx[static_cast<std::size_t>(start + r)];
        xt_b.row(r) = xt.row(node);
        xp_b.row(r) = attributes.row(node);
        mask_b[static_cast<std::size_t>(r)] = mask[static_cast<std::size_t>(node)];
      }
      const ModelParams grad =
          gradients(out.params, xt_b, xp_b, mask_b, config);
      apply_update(out.params, grad, -config.learning_rate);
    }
    out.epoch_loss.push_back(
        loss(forward(out.params, xt, attributes), xt, attributes, mask, config));
  }

  out.embeddings = extract_embeddings(out.params, recovered, attributes);
  return out;
}

EmbeddingMatrix extract_embeddings(const ModelParams& params,
                                   const RecoveredGraph& recovered,
                                   const Eigen::MatrixXd& attributes) {
  const Graph& g = recovered.graph;
  if (attributes.rows() != g.n)
    throw std::runtime_error("extract_embeddings: " +
                             std::to_string(attributes.rows()) +
                             " attribute rows for " + std::to_string(g.n) +
                             " nodes");
  const Eigen::MatrixXd xt = adjacency_rows(g);
  const ForwardPass fp = forward(params, xt, attributes);
  EmbeddingMatrix emb;
  emb.rows.resize(g.n, fp.yt.cols() + fp.yp.cols());
  emb.rows << fp.yt, fp.yp;
  emb.observed_count = recovered.observed_count;
  return emb;
}

void save_embeddings(const EmbeddingMatrix& embeddings, const std::string& path,
                     const std::string& extra_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_embeddings: cannot open " + path);
  if (!extra_header.empty()) out << "# " << extra_header << "\n";
  out << "# observed=" << embeddings.observed_count << "\n";
  out << embeddings.rows.rows() << " " << embeddings.rows.cols() << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < embeddings.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < embeddings.rows.cols(); ++j) {
      if (j) out << " ";
      out << embeddings.rows(i, j);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_embeddings: write failed on " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);
  EmbeddingMatrix emb;
  emb.observed_count = -1;
  std::string line;
  int line_no = 0;
  long long n = -1, dim = -1;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') {
      const auto pos = line.find("observed=");
      if (pos != std::string::npos)
        emb.observed_count = std::stoi(line.substr(pos + 9));
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (n < 0) {
      if (!(ss >> n >> dim) || n < 0 || dim <= 0)
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected 'n dim' header");
      emb.rows.resize(n, dim);
      continue;
    }
    if (row >= n)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": more rows than the header announced");
    for (long long j = 0; j < dim; ++j)
      if (!(ss >> emb.rows(row, j)))
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": row needs " + std::to_string(dim) +
                                 " values");
    double extra;
    if (ss >> extra)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": row has more than " + std::to_string(dim) +
                               " values");
    ++row;
  }
  if (n < 0) throw std::runtime_error(path + ": missing 'n dim' header");
  if (row != n)
    throw std::runtime_error(path + ": header announced " + std::to_string(n) +
                             " rows, found " + std::to_string(row));
  if (emb.observed_count < 0) emb.observed_count = static_cast<int>(n);
  return emb;
}

void save_loss_log(const std::vector<double>& epoch_loss,
                   const std::string& path, const std::string& extra_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_loss_log: cannot open " + path);
  if (!extra_header.empty()) out << "# " << extra_header << "\n";
  out << "epoch,loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e)
    out << (e + 1) << "," << epoch_loss[e] << "\n";
  if (!out) throw std::runtime_error("save_loss_log: write failed on " + path);
}

}  // namespace inembed
