#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bcnn/dataset.hpp"
#include "bcnn/network.hpp"

namespace bcnn {

enum class Optimizer { Sgd, Momentum };

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::Momentum;
  double momentum = 0.9;
  double lr_decay = 1.0;  // per-epoch multiplicative factor

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;            // mean training loss over the epoch
  double train_accuracy = 0.0;  // of predictions made before each update
  std::optional<double> test_accuracy;
};

struct TrainHistory {
  std::vector<EpochMetrics> epochs;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

struct TrainResult {
  Network model;
  TrainHistory history;
};

/// Mean loss and mean parameter gradients over the listed samples.
double batch_gradients(const Network& net, const Dataset& data,
                       std::span<const std::size_t> batch, NetworkGradients& grads);

/// Mini-batch SGD over the first-vectors and biases. Only first-vectors are
/// parameters, so every update leaves the weights block-circulant. A fixed
/// seed reproduces the run bit for bit. Throws Error(Numeric) naming the
/// epoch when the loss becomes NaN or infinite.
TrainResult sgd_train(Network model, const Dataset& data, const TrainConfig& cfg,
                      const Dataset* eval = nullptr, const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Variational Bayesian training: a mean-field Gaussian per first-vector
// entry, w = mu + exp(log_sigma) * eps, one weight sample per example.
// Biases stay point estimates.

struct BayesianConfig {
  double init_log_sigma = -5.0;
  double prior_sigma = 1.0;
  double kl_scale = 1.0;  // final KL weight; annealed from 0 over the first half
  bool anneal = true;
};

struct BayesianWeights {
  std::vector<std::vector<double>> mean;       // per layer, empty for pooling
  std::vector<std::vector<double>> log_sigma;

  static BayesianWeights from_model(const Network& net, double init_log_sigma);
};

struct BayesianResult {
  BayesianWeights posterior;
  Network model;  // weights set to the posterior means
  TrainHistory history;
};

struct BayesianGradients {
  NetworkGradients mean;  // also carries bias gradients
  std::vector<std::vector<double>> log_sigma;
  double loss = 0.0;
  std::size_t correct = 0;  // top-1 hits under the sampled weights
};

/// Gradient of the per-example negative ELBO, averaged over `batch`:
/// data term from sampled weights plus kl_weight / dataset_size times the
/// KL divergence to the N(0, prior_sigma^2) prior.
BayesianGradients bayesian_batch_gradients(const Network& means, const BayesianWeights& q,
                                           const Dataset& data,
                                           std::span<const std::size_t> batch,
                                           std::mt19937_64& rng, double kl_weight,
                                           double prior_sigma);

BayesianResult bayesian_train(Network model, const Dataset& data, const TrainConfig& cfg,
                              const BayesianConfig& bayes, const Dataset* eval = nullptr,
                              const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t classes = 0;
  std::vector<std::size_t> confusion;  // [true * classes + predicted]
};

EvalResult evaluate_predictions(std::span<const std::size_t> predicted,
                                std::span<const std::size_t> labels, std::size_t classes);
/// Top-1 accuracy. Throws Error(Data) on an empty dataset.
EvalResult evaluate(const Network& net, const Dataset& data);

}  // namespace bcnn
