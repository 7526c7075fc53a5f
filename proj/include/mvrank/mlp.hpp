#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mvrank/sample.hpp"
#include "mvrank/score_gen.hpp"

namespace mvrank {

/// One-hidden-layer perceptron x -> sigmoid(w2 . relu(W1 x + b1) + b2) with
/// hidden width 2d. W1 is stored row-major (hidden x input).
struct MlpScorer {
  std::size_t input_dim = 0;
  std::size_t hidden_size = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;

  // Shape and finiteness checks.
  void validate() const;

  std::size_t parameter_count() const noexcept {
    return w1.size() + b1.size() + w2.size() + 1;
  }
  // Flat view in the order w1, b1, w2, b2.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  friend bool operator==(const MlpScorer&, const MlpScorer&) = default;
};

// Gradient with the same layout as MlpScorer's parameters.
using Gradient = std::vector<double>;

MlpScorer mlp_new(std::size_t d, std::uint64_t seed);

// Network with explicit shape; used by fixtures and deserialization.
MlpScorer mlp_from_weights(std::size_t d, std::size_t hidden, std::vector<double> w1,
                           std::vector<double> b1, std::vector<double> w2, double b2);

double forward(const MlpScorer& model, std::span<const double> x);

// Scores every point of `sample`.
std::vector<double> score_all(const MlpScorer& model, const Sample& sample);

// -y ln(y_hat) - (1-y) ln(1 - y_hat); y_hat is clamped to [1e-12, 1 - 1e-12]
// with a warning when it reaches the boundary.
double bce_loss(double y_hat, int y);

// Gradient of bce_loss(forward(model, x), y). relu'(0) = 0.
Gradient bce_gradient(const MlpScorer& model, std::span<const double> x, int y);

MlpScorer sgd_step_bce(const MlpScorer& model, std::span<const double> x, int y, double lr);

struct TrainConfig {
  std::size_t epochs = 30;
  double lambda = 0.0;
  ScoreGen phi = ScoreGen::mww();
  double learning_rate = 0.05;
  // Step size of the end-of-epoch regularized step.
  double batch_learning_rate = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Mean BCE over the labeled sample.
double batch_bce(const MlpScorer& model, const Sample& train);

// Proxy rank statistic of the label-1 points of `train`.
double batch_proxy(const MlpScorer& model, const Sample& train, const ScoreGen& phi);

// mean BCE - lambda * proxy.
double regularized_loss(const MlpScorer& model, const Sample& train, const ScoreGen& phi,
                        double lambda);
Gradient regularized_gradient(const MlpScorer& model, const Sample& train,
                              const ScoreGen& phi, double lambda);

// One full-batch gradient step on regularized_loss.
MlpScorer batch_step_regularized(const MlpScorer& model, const Sample& train,
                                 const TrainConfig& cfg);

struct EpochTrace {
  std::size_t epoch = 0;
  double bce = 0.0;
  double w_proxy = 0.0;
  std::optional<double> acc_75;
};

// Called once per epoch with the current model; returns Acc at n_lowest = 75
// on a held-out set.
using EvalHook = std::function<double(const MlpScorer&)>;

struct TrainResult {
  MlpScorer model;
  std::vector<EpochTrace> traces;
};

/// Runs cfg.epochs epochs. Each epoch makes one per-sample SGD pass over the
/// training set (shuffled with the run seed), then one full-batch step on the
/// regularized loss. The trace records batch BCE and proxy after the epoch.
TrainResult train(const Sample& train_set, const TrainConfig& cfg, const EvalHook& hook = {});

// Same as train with initial parameters supplied by the caller.
TrainResult train_from(MlpScorer model, const Sample& train_set, const TrainConfig& cfg,
                       const EvalHook& hook = {});

// Flat JSON: {"input_dim", "hidden_size", "w1" (row-major), "b1", "w2", "b2"}.
void write_model_json(std::ostream& out, const MlpScorer& model);
MlpScorer read_model_json(std::istream& in);

}  // namespace mvrank
