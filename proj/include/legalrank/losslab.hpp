#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "legalrank/text.hpp"

namespace legalrank::losslab {

/// Loss value and its gradient with respect to the loss input (same shape).
struct LossReport {
    double loss = 0.0;
    Eigen::MatrixXd gradient;
};

/// In-batch softmax ranking loss over a B x B similarity matrix whose diagonal
/// holds the matched pairs:
///   L = -(1/B) sum_i log softmax(scale * sim.row(i))_i
///   dL/dsim_ij = (scale/B) * (softmax_ij - [i == j])
LossReport mnrl_loss(const Eigen::MatrixXd& sim, double scale = 20.0);

/// Mean binary cross-entropy on raw logits, evaluated as
/// max(x,0) - x*y + log1p(exp(-|x|)); dL/dx = (sigmoid(x) - y) / n.
LossReport bce_with_logits(const Eigen::VectorXd& logits, const Eigen::VectorXd& labels);

/// Mean squared error between similarities and targets; dL/ds = 2(s - t)/n.
LossReport cosine_mse_loss(const Eigen::VectorXd& sims, const Eigen::VectorXd& targets);

double sigmoid(double x);

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double eps = 1e-5);

enum class LossKind { mnrl, cosine_mse };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct TokenPair {
    Tokens query;
    Tokens document;
};

struct ToyConfig {
    double learning_rate = 4e-5;
    std::size_t epochs = 11;
    std::size_t batch_size = 64;
    std::uint64_t seed = 42;
    std::size_t dim = 16;
    double scale = 20.0;      // mnrl similarity scale
    double init_std = 0.1;    // weight initialisation
};

/// Linear bag-of-tokens encoder: embedding = counts^T W, compared by cosine.
/// Tokens outside the vocabulary are ignored.
class ToyEmbedder {
  public:
    ToyEmbedder() = default;
    ToyEmbedder(std::map<std::string, std::size_t> vocabulary, Eigen::MatrixXd weights);

    const std::map<std::string, std::size_t>& vocabulary() const noexcept { return vocab_; }
    const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    Eigen::MatrixXd& weights() noexcept { return weights_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(weights_.cols()); }

    /// Token-count row vector over the vocabulary.
    Eigen::RowVectorXd counts(std::span<const std::string> tokens) const;
    Eigen::RowVectorXd encode(std::span<const std::string> tokens) const;
    double similarity(std::span<const std::string> a, std::span<const std::string> b) const;

  private:
    std::map<std::string, std::size_t> vocab_;
    Eigen::MatrixXd weights_;
};

/// Cosine similarity of every query (rows) against every document (columns).
Eigen::MatrixXd similarity_matrix(const ToyEmbedder& embedder, std::span<const TokenPair> pairs);

/// Loss of one batch and its gradient with respect to the encoder weights.
/// For cosine_mse every pair's target is 1.
LossReport batch_loss(const ToyEmbedder& embedder, std::span<const TokenPair> batch, LossKind kind,
                      double scale);

struct EpochTrace {
    std::size_t epoch = 0;  // 0 = before the first update
    double loss = 0.0;      // mean batch loss (epoch 0: loss at initialisation)
    double diag_mean = 0.0;
    double offdiag_mean = 0.0;
};

struct ToyTrainingResult {
    ToyEmbedder embedder;
    std::vector<EpochTrace> trace;
};

/// Plain mini-batch gradient descent (no momentum, no weight decay). Batches are
/// reshuffled each epoch from SplitMix64(seed). Throws ParameterError for mnrl
/// with fewer than 2 pairs and TrainingError when the loss becomes non-finite.
ToyTrainingResult toy_train(std::span<const TokenPair> pairs, LossKind kind, const ToyConfig& config);

/// Eight question/document pairs. Each pair has its own topic tokens; every text
/// also carries the same legal boilerplate tokens.
std::vector<TokenPair> demo_pairs();

/// Toy-scale settings used with demo_pairs().
ToyConfig demo_config();

}  // namespace legalrank::losslab
