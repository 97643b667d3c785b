#include "bcnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::Config, "learning_rate must be a finite non-negative number");
  }
  if (batch_size == 0) {
    throw Error(ErrorKind::Config, "batch_size must be positive");
  }
  if (epochs == 0) {
    throw Error(ErrorKind::Config, "epochs must be positive");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw Error(ErrorKind::Config, "momentum must be in [0, 1)");
  }
  if (!(lr_decay > 0.0)) {
    throw Error(ErrorKind::Config, "lr_decay must be positive");
  }
}

namespace {

void check_data(const Network& net, const Dataset& data) {
  validate(net);
  if (data.size() == 0) {
    throw Error(ErrorKind::Data, "training set is empty");
  }
  if (data.dim() != net.input_size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "dataset samples have " + std::to_string(data.dim()) +
                    " values, model expects " + std::to_string(net.input_size()));
  }
  const std::size_t classes = net.output_size();
  for (const std::size_t label : data.labels) {
    if (label >= classes) {
      throw Error(ErrorKind::ShapeMismatch, "label " + std::to_string(label) +
                                                " exceeds model output size " +
                                                std::to_string(classes));
    }
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

// Parameter update with optional heavy-ball momentum: v = mu v + g, w -= lr v.
class Stepper {
 public:
  Stepper(const Network& net, const TrainConfig& cfg)
      : velocity_(NetworkGradients::zeros_like(net)), cfg_(cfg) {}

  void apply(Network& net, const NetworkGradients& grads, double lr) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (!is_trainable(net.layers[l])) {
        continue;
      }
      const std::vector<double>& gw = direction(velocity_.layers[l].weights, grads.layers[l].weights);
      layer_weights(net.layers[l]).add_scaled(gw, -lr);
      const std::vector<double>& gb = direction(velocity_.layers[l].bias, grads.layers[l].bias);
      auto& bias = layer_bias(net.layers[l]);
      for (std::size_t t = 0; t < bias.size(); ++t) {
        bias[t] -= lr * gb[t];
      }
    }
  }

  // Same rule on a free-standing parameter vector (posterior log-sigma).
  void apply(std::vector<double>& params, std::vector<double>& velocity,
             const std::vector<double>& grad, double lr) const {
    const std::vector<double>& d = direction(velocity, grad);
    for (std::size_t t = 0; t < params.size(); ++t) {
      params[t] -= lr * d[t];
    }
  }

 private:
  const std::vector<double>& direction(std::vector<double>& velocity,
                                       const std::vector<double>& grad) const {
    if (cfg_.optimizer == Optimizer::Sgd) {
      return grad;
    }
    for (std::size_t t = 0; t < velocity.size(); ++t) {
      velocity[t] = cfg_.momentum * velocity[t] + grad[t];
    }
    return velocity;
  }

  NetworkGradients velocity_;
  TrainConfig cfg_;
};

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorKind::Numeric,
                "training diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
  }
}

struct BatchOutcome {
  double loss = 0.0;
  std::size_t correct = 0;
};

BatchOutcome run_batch(const Network& net, const Dataset& data,
                       std::span<const std::size_t> batch, NetworkGradients& grads) {
  BatchOutcome out;
  for (const std::size_t idx : batch) {
    std::size_t predicted = 0;
    out.loss += accumulate_gradients(net, data.sample(idx), data.labels[idx], grads, false,
                                     &predicted);
    out.correct += predicted == data.labels[idx] ? 1 : 0;
  }
  return out;
}

template <class StepFn>
TrainHistory run_epochs(Network& model, const Dataset& data, const TrainConfig& cfg,
                        const Dataset* eval, const EpochCallback& on_epoch, StepFn&& step) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  double lr = cfg.learning_rate;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const BatchOutcome outcome = step(batch, lr, rng);
      check_finite(outcome.loss, epoch);
      loss_sum += outcome.loss * static_cast<double>(batch.size());
      correct += outcome.correct;
    }
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.loss = loss_sum / static_cast<double>(data.size());
    metrics.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    check_finite(metrics.loss, epoch);
    if (eval != nullptr) {
      metrics.test_accuracy = evaluate(model, *eval).accuracy;
    }
    history.epochs.push_back(metrics);
    if (on_epoch) {
      on_epoch(metrics);
    }
    lr *= cfg.lr_decay;
  }
  return history;
}

BatchOutcome mean_batch_gradients(const Network& net, const Dataset& data,
                                  std::span<const std::size_t> batch, NetworkGradients& grads) {
  grads = NetworkGradients::zeros_like(net);
  BatchOutcome out = run_batch(net, data, batch, grads);
  const double inv = 1.0 / static_cast<double>(batch.size());
  grads.scale(inv);
  out.loss *= inv;
  return out;
}

}  // namespace

double batch_gradients(const Network& net, const Dataset& data,
                       std::span<const std::size_t> batch, NetworkGradients& grads) {
  return mean_batch_gradients(net, data, batch, grads).loss;
}

TrainResult sgd_train(Network model, const Dataset& data, const TrainConfig& cfg,
                      const Dataset* eval, const EpochCallback& on_epoch) {
  cfg.validate();
  check_data(model, data);
  Stepper stepper(model, cfg);
  NetworkGradients grads;
  TrainHistory history = run_epochs(
      model, data, cfg, eval, on_epoch,
      [&](std::span<const std::size_t> batch, double lr, std::mt19937_64&) {
        const BatchOutcome out = mean_batch_gradients(model, data, batch, grads);
        if (std::isfinite(out.loss)) {
          stepper.apply(model, grads, lr);
        }
        return out;
      });
  return {std::move(model), std::move(history)};
}

// ---------------------------------------------------------------------------

BayesianWeights BayesianWeights::from_model(const Network& net, double init_log_sigma) {
  BayesianWeights q;
  q.mean.resize(net.layers.size());
  q.log_sigma.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (is_trainable(net.layers[l])) {
      const auto w = layer_weights(net.layers[l]).first_vectors();
      q.mean[l].assign(w.begin(), w.end());
      q.log_sigma[l].assign(w.size(), init_log_sigma);
    }
  }
  return q;
}

BayesianGradients bayesian_batch_gradients(const Network& means, const BayesianWeights& q,
                                           const Dataset& data,
                                           std::span<const std::size_t> batch,
                                           std::mt19937_64& rng, double kl_weight,
                                           double prior_sigma) {
  const std::size_t layers = means.layers.size();
  BayesianGradients out;
  out.mean = NetworkGradients::zeros_like(means);
  out.log_sigma.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    out.log_sigma[l].assign(q.log_sigma[l].size(), 0.0);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  Network sampled = means;
  std::vector<std::vector<double>> eps(layers);
  for (const std::size_t idx : batch) {
    for (std::size_t l = 0; l < layers; ++l) {
      if (!is_trainable(sampled.layers[l])) {
        continue;
      }
      eps[l].resize(q.mean[l].size());
      std::vector<double> w(q.mean[l].size());
      for (std::size_t t = 0; t < w.size(); ++t) {
        eps[l][t] = normal(rng);
        w[t] = q.mean[l][t] + std::exp(q.log_sigma[l][t]) * eps[l][t];
      }
      layer_weights(sampled.layers[l]).assign(std::move(w));
    }
    NetworkGradients g = NetworkGradients::zeros_like(sampled);
    std::size_t predicted = 0;
    out.loss += accumulate_gradients(sampled, data.sample(idx), data.labels[idx], g, false,
                                     &predicted);
    out.correct += predicted == data.labels[idx] ? 1 : 0;
    for (std::size_t l = 0; l < layers; ++l) {
      auto& dm = out.mean.layers[l];
      for (std::size_t t = 0; t < g.layers[l].weights.size(); ++t) {
        const double gw = g.layers[l].weights[t];
        dm.weights[t] += gw;
        out.log_sigma[l][t] += gw * eps[l][t] * std::exp(q.log_sigma[l][t]);
      }
      for (std::size_t t = 0; t < g.layers[l].bias.size(); ++t) {
        dm.bias[t] += g.layers[l].bias[t];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.mean.scale(inv);
  for (auto& v : out.log_sigma) {
    for (auto& x : v) x *= inv;
  }
  out.loss *= inv;

  if (kl_weight > 0.0) {
    // KL(N(mu, s^2) || N(0, p^2)) = log(p/s) + (s^2 + mu^2) / (2 p^2) - 1/2
    const double scale = kl_weight / static_cast<double>(data.size());
    const double prior_var = prior_sigma * prior_sigma;
    double kl = 0.0;
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t t = 0; t < q.mean[l].size(); ++t) {
        const double mu = q.mean[l][t];
        const double var = std::exp(2.0 * q.log_sigma[l][t]);
        kl += std::log(prior_sigma) - q.log_sigma[l][t] + (var + mu * mu) / (2.0 * prior_var) - 0.5;
        out.mean.layers[l].weights[t] += scale * mu / prior_var;
        out.log_sigma[l][t] += scale * (var / prior_var - 1.0);
      }
    }
    out.loss += scale * kl;
  }
  return out;
}

BayesianResult bayesian_train(Network model, const Dataset& data, const TrainConfig& cfg,
                              const BayesianConfig& bayes, const Dataset* eval,
                              const EpochCallback& on_epoch) {
  cfg.validate();
  check_data(model, data);
  if (!(bayes.prior_sigma > 0.0)) {
    throw Error(ErrorKind::Config, "prior_sigma must be positive");
  }
  BayesianWeights q = BayesianWeights::from_model(model, bayes.init_log_sigma);
  std::vector<std::vector<double>> sigma_velocity(q.log_sigma.size());
  for (std::size_t l = 0; l < q.log_sigma.size(); ++l) {
    sigma_velocity[l].assign(q.log_sigma[l].size(), 0.0);
  }
  Stepper stepper(model, cfg);

  const std::size_t steps_per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double anneal_steps =
      std::max(1.0, 0.5 * static_cast<double>(steps_per_epoch * cfg.epochs));
  std::size_t step = 0;

  TrainHistory history = run_epochs(
      model, data, cfg, eval, on_epoch,
      [&](std::span<const std::size_t> batch, double lr, std::mt19937_64& rng) {
        const double beta =
            bayes.anneal ? bayes.kl_scale * std::min(1.0, static_cast<double>(step) / anneal_steps)
                         : bayes.kl_scale;
        ++step;
        BayesianGradients g =
            bayesian_batch_gradients(model, q, data, batch, rng, beta, bayes.prior_sigma);
        if (!std::isfinite(g.loss)) {
          return BatchOutcome{g.loss, g.correct};
        }
        stepper.apply(model, g.mean, lr);
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
          if (!is_trainable(model.layers[l])) {
            continue;
          }
          const auto w = layer_weights(model.layers[l]).first_vectors();
          q.mean[l].assign(w.begin(), w.end());
          stepper.apply(q.log_sigma[l], sigma_velocity[l], g.log_sigma[l], lr);
        }
        return BatchOutcome{g.loss, g.correct};
      });
  return {std::move(q), std::move(model), std::move(history)};
}

// ---------------------------------------------------------------------------

EvalResult evaluate_predictions(std::span<const std::size_t> predicted,
                                std::span<const std::size_t> labels, std::size_t classes) {
  if (labels.empty()) {
    throw Error(ErrorKind::Data, "evaluate: empty dataset");
  }
  if (predicted.size() != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "evaluate: prediction count mismatch");
  }
  EvalResult r;
  r.classes = classes;
  r.total = labels.size();
  r.confusion.assign(classes * classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes || predicted[i] >= classes) {
      throw Error(ErrorKind::ShapeMismatch, "evaluate: class index out of range");
    }
    ++r.confusion[labels[i] * classes + predicted[i]];
    r.correct += predicted[i] == labels[i] ? 1 : 0;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

EvalResult evaluate(const Network& net, const Dataset& data) {
  if (data.size() == 0) {
    throw Error(ErrorKind::Data, "evaluate: empty dataset");
  }
  std::vector<std::size_t> predicted(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    predicted[i] = argmax(forward(net, data.sample(i)));
  }
  return evaluate_predictions(predicted, data.labels, std::max(data.classes, net.output_size()));
}

}  // namespace bcnn
