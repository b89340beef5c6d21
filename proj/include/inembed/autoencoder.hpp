#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "inembed/completion.hpp"

namespace inembed {

/// Layer widths of one view's encoder: input dim first, representation dim
/// last. The decoder mirrors the reversed sequence.
struct ViewSpec {
  std::vector<int> layer_sizes;

  int input_dim() const { return layer_sizes.front(); }
  int rep_dim() const { return layer_sizes.back(); }
  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }

  /// Throws unless there are >= 2 sizes, all positive.
  void check() const;
};

/// A chain of dense layers with sigmoid activations: out = s(in * W + b)
/// applied layer by layer. weights[l] is (sizes[l] x sizes[l+1]); rows of the
/// input matrix are independent samples.
struct LayerStack {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;

  /// Forward through every layer.
  Eigen::MatrixXd run(const Eigen::MatrixXd& in) const;
};

/// All parameters of the two-view autoencoder. Each view has its own encoder
/// and mirror decoder; the two cross stacks decode one view's representation
/// into the other view's input space.
struct ModelParams {
  LayerStack encode_t;   // structure rows -> T representation
  LayerStack encode_p;   // attribute rows -> P representation
  LayerStack decode_t;   // T representation -> structure rows
  LayerStack decode_p;   // P representation -> attribute rows
  LayerStack decode_tp;  // T representation -> attribute rows
  LayerStack decode_pt;  // P representation -> structure rows
};

struct TrainConfig {
  double alpha = 0.5;          // cross-view reconstruction weight
  double beta = 0.8;           // observed-row weight (recovered rows: 1-beta)
  double learning_rate = 1e-3;
  int batch_size = 50;
  int epochs = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One forward evaluation of a row batch: both representations and all four
/// reconstructions. *_self is the view rebuilt from its own representation,
/// *_cross the same view rebuilt from the other view's representation.
struct ForwardPass {
  Eigen::MatrixXd yt, yp;
  Eigen::MatrixXd t_self, t_cross;
  Eigen::MatrixXd p_self, p_cross;
};

/// Per-node embedding rows: concatenation of the two view representations.
struct EmbeddingMatrix {
  Eigen::MatrixXd rows;
  int observed_count = 0;
};

struct TrainResult {
  ModelParams params;
  EmbeddingMatrix embeddings;
  std::vector<double> epoch_loss;  // full-pass loss after each epoch
};

/// Fresh parameters: every weight uniform in [-s, s] with
/// s = sqrt(6 / (fan_in + fan_out)), biases zero. Deterministic per seed.
ModelParams init_params(const ViewSpec& spec_t, const ViewSpec& spec_p,
                        std::uint64_t seed);

/// Encodes both batches and decodes all four reconstructions.
ForwardPass forward(const ModelParams& params, const Eigen::MatrixXd& xt,
                    const Eigen::MatrixXd& xp);

/// Weighted squared reconstruction error. Each row contributes
///   w * ((1-alpha) * (|xt-t_self|^2 + |xp-p_self|^2)
///        + alpha   * (|xt-t_cross|^2 + |xp-p_cross|^2))
/// with w = beta for observed rows and 1-beta for recovered ones.
double loss(const ForwardPass& fp, const Eigen::MatrixXd& xt,
            const Eigen::MatrixXd& xp, const std::vector<bool>& observed_mask,
            const TrainConfig& config);

/// Exact reverse-mode gradient of loss() with respect to every weight and
/// bias, returned in a parameter-shaped container.
ModelParams gradients(const ModelParams& params, const Eigen::MatrixXd& xt,
                      const Eigen::MatrixXd& xp,
                      const std::vector<bool>& observed_mask,
                      const TrainConfig& config);

/// Shuffled mini-batch gradient descent on the recovered graph's adjacency
/// rows (T view) and attribute rows (P view). Rows with id >=
/// recovered.observed_count are the recovered ones and carry weight 1-beta.
/// epochs = 0 returns the initial parameters untouched.
TrainResult train(const RecoveredGraph& recovered,
                  const Eigen::MatrixXd& attributes, const ViewSpec& spec_t,
                  const ViewSpec& spec_p, const TrainConfig& config);

/// Embedding rows for every node under fixed parameters: row i is the
/// concatenation of the two view representations of node i.
EmbeddingMatrix extract_embeddings(const ModelParams& params,
                                   const RecoveredGraph& recovered,
                                   const Eigen::MatrixXd& attributes);

/// Text matrix: optional "#"-comment header lines, then "n dim", then one
/// whitespace-separated row per node.
void save_embeddings(const EmbeddingMatrix& embeddings, const std::string& path,
                     const std::string& extra_header = "");
EmbeddingMatrix load_embeddings(const std::string& path);

/// CSV "epoch,loss" with epochs numbered from 1.
void save_loss_log(const std::vector<double>& epoch_loss,
                   const std::string& path,
                   const std::string& extra_header = "");

}  // namespace inembed
