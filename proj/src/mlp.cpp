#include "mvrank/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "mvrank/errors.hpp"
#include "mvrank/random.hpp"
#include "mvrank/rank_stats.hpp"

namespace mvrank {

namespace {

constexpr double kBceClamp = 1e-12;
// Largest double below 1; forward() never returns 0 or 1.
constexpr double kMaxScore = 1.0 - 0x1.0p-53;
constexpr double kMinScore = std::numeric_limits<double>::min();

double sigmoid(double z) {
  double s = 0.0;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kMinScore, kMaxScore);
}

// Forward pass keeping the hidden pre-activations.
struct Activations {
  std::vector<double> hidden_pre;
  double output = 0.0;
};

void forward_into(const MlpScorer& model, std::span<const double> x, Activations& act) {
  const std::size_t d = model.input_dim;
  act.hidden_pre.resize(model.hidden_size);
  double logit = model.b2;
  for (std::size_t j = 0; j < model.hidden_size; ++j) {
    double z = model.b1[j];
    const double* row = model.w1.data() + j * d;
    for (std::size_t k = 0; k < d; ++k) z += row[k] * x[k];
    act.hidden_pre[j] = z;
    if (z > 0.0) logit += model.w2[j] * z;
  }
  act.output = sigmoid(logit);
}

// Adds d(loss)/d(params) to `grad` given d(loss)/d(logit) at input x.
void backprop_into(const MlpScorer& model, std::span<const double> x, const Activations& act,
                   double dlogit, Gradient& grad) {
  const std::size_t d = model.input_dim;
  const std::size_t h = model.hidden_size;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * d;
  double* g_w2 = g_b1 + h;
  double& g_b2 = g_w2[h];
  g_b2 += dlogit;
  for (std::size_t j = 0; j < h; ++j) {
    const double z = act.hidden_pre[j];
    if (z <= 0.0) continue;
    g_w2[j] += dlogit * z;
    const double dz = dlogit * model.w2[j];
    g_b1[j] += dz;
    for (std::size_t k = 0; k < d; ++k) g_w1[j * d + k] += dz * x[k];
  }
}

void apply_step(MlpScorer& model, const Gradient& grad, double lr) {
  std::size_t offset = 0;
  for (double& w : model.w1) w -= lr * grad[offset++];
  for (double& b : model.b1) b -= lr * grad[offset++];
  for (double& w : model.w2) w -= lr * grad[offset++];
  model.b2 -= lr * grad[offset];
}

void check_input(const MlpScorer& model, std::span<const double> x) {
  if (x.size() != model.input_dim) throw ParameterError("input dimension does not match model");
}

void check_labeled(const MlpScorer& model, const Sample& train) {
  if (!train.has_labels()) throw ParameterError("training sample must be labeled");
  if (train.dim() != model.input_dim) throw ParameterError("sample dimension does not match model");
}

}  // namespace

void MlpScorer::validate() const {
  if (input_dim == 0 || hidden_size == 0) throw ParameterError("model has an empty layer");
  if (w1.size() != hidden_size * input_dim || b1.size() != hidden_size ||
      w2.size() != hidden_size) {
    throw ParameterError("model weight shapes are inconsistent");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(w1.begin(), w1.end(), finite) || !std::all_of(b1.begin(), b1.end(), finite) ||
      !std::all_of(w2.begin(), w2.end(), finite) || !std::isfinite(b2)) {
    throw ParameterError("model has non-finite parameters");
  }
}

std::vector<double> MlpScorer::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), w1.begin(), w1.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.push_back(b2);
  return flat;
}

void MlpScorer::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ParameterError("flat parameter size mismatch");
  auto it = flat.begin();
  for (double& w : w1) w = *it++;
  for (double& b : b1) b = *it++;
  for (double& w : w2) w = *it++;
  b2 = *it;
}

MlpScorer mlp_new(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw ParameterError("input dimension must be positive");
  MlpScorer model;
  model.input_dim = d;
  model.hidden_size = 2 * d;
  Rng rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(model.hidden_size));
  model.w1.resize(model.hidden_size * d);
  for (double& w : model.w1) w = bound1 * (2.0 * rng.uniform_open() - 1.0);
  model.b1.assign(model.hidden_size, 0.0);
  model.w2.resize(model.hidden_size);
  for (double& w : model.w2) w = bound2 * (2.0 * rng.uniform_open() - 1.0);
  model.b2 = 0.0;
  return model;
}

MlpScorer mlp_from_weights(std::size_t d, std::size_t hidden, std::vector<double> w1,
                           std::vector<double> b1, std::vector<double> w2, double b2) {
  MlpScorer model{d, hidden, std::move(w1), std::move(b1), std::move(w2), b2};
  model.validate();
  return model;
}

double forward(const MlpScorer& model, std::span<const double> x) {
  check_input(model, x);
  Activations act;
  forward_into(model, x, act);
  return act.output;
}

std::vector<double> score_all(const MlpScorer& model, const Sample& sample) {
  if (sample.dim() != model.input_dim) throw ParameterError("sample dimension does not match model");
  std::vector<double> scores(sample.size());
  Activations act;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    forward_into(model, sample.point(i), act);
    scores[i] = act.output;
  }
  return scores;
}

double bce_loss(double y_hat, int y) {
  if (std::isnan(y_hat)) throw DomainError("bce_loss: prediction is NaN");
  if (y != kNormalLabel && y != kOutlierLabel) throw ParameterError("bce_loss: label must be 0 or 1");
  if (!(y_hat > 0.0 && y_hat < 1.0)) warn("bce_loss: prediction outside (0,1) was clamped");
  const double p = std::clamp(y_hat, kBceClamp, 1.0 - kBceClamp);
  return y == kNormalLabel ? -std::log(p) : -std::log1p(-p);
}

// The logit form (y_hat - y) is used for d(BCE)/d(logit); it agrees with the
// clamped loss wherever the clamp is inactive.
Gradient bce_gradient(const MlpScorer& model, std::span<const double> x, int y) {
  check_input(model, x);
  Activations act;
  forward_into(model, x, act);
  Gradient grad(model.parameter_count(), 0.0);
  backprop_into(model, x, act, act.output - static_cast<double>(y), grad);
  return grad;
}

MlpScorer sgd_step_bce(const MlpScorer& model, std::span<const double> x, int y, double lr) {
  if (!(lr > 0.0)) throw ParameterError("learning rate must be positive");
  MlpScorer next = model;
  apply_step(next, bce_gradient(model, x, y), lr);
  return next;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be >= 0");
  if (!(learning_rate > 0.0) || !(batch_learning_rate > 0.0)) {
    throw ParameterError("learning rates must be positive");
  }
}

double batch_bce(const MlpScorer& model, const Sample& train) {
  check_labeled(model, train);
  const auto scores = score_all(model, train);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += bce_loss(scores[i], train.label(i));
  return total / static_cast<double>(scores.size());
}

namespace {

std::vector<double> normal_scores(const MlpScorer& model, const Sample& train) {
  std::vector<double> out;
  Activations act;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.label(i) != kNormalLabel) continue;
    forward_into(model, train.point(i), act);
    out.push_back(act.output);
  }
  return out;
}

}  // namespace

double batch_proxy(const MlpScorer& model, const Sample& train, const ScoreGen& phi) {
  check_labeled(model, train);
  const auto scores = normal_scores(model, train);
  return w_phi_proxy(phi, scores, scores.size(), train.size() - scores.size());
}

double regularized_loss(const MlpScorer& model, const Sample& train, const ScoreGen& phi,
                        double lambda) {
  const double bce = batch_bce(model, train);
  if (lambda == 0.0) return bce;
  return bce - lambda * batch_proxy(model, train, phi);
}

Gradient regularized_gradient(const MlpScorer& model, const Sample& train,
                              const ScoreGen& phi, double lambda) {
  check_labeled(model, train);
  const std::size_t total = train.size();
  const std::size_t n = train.count_label(kNormalLabel);
  const std::size_t m = total - n;

  std::vector<double> proxy_grad;
  if (lambda != 0.0) proxy_grad = w_phi_proxy_gradient(phi, normal_scores(model, train), n, m);

  Gradient grad(model.parameter_count(), 0.0);
  Activations act;
  const double inv_total = 1.0 / static_cast<double>(total);
  std::size_t normal_index = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const auto x = train.point(i);
    const int y = train.label(i);
    forward_into(model, x, act);
    const double s = act.output;
    double dlogit = (s - static_cast<double>(y)) * inv_total;
    if (y == kNormalLabel) {
      if (lambda != 0.0) dlogit -= lambda * proxy_grad[normal_index] * s * (1.0 - s);
      ++normal_index;
    }
    backprop_into(model, x, act, dlogit, grad);
  }
  return grad;
}

MlpScorer batch_step_regularized(const MlpScorer& model, const Sample& train,
                                 const TrainConfig& cfg) {
  cfg.validate();
  MlpScorer next = model;
  apply_step(next, regularized_gradient(model, train, cfg.phi, cfg.lambda),
             cfg.batch_learning_rate);
  return next;
}

TrainResult train(const Sample& train_set, const TrainConfig& cfg, const EvalHook& hook) {
  return train_from(mlp_new(train_set.dim(), split_seed(cfg.seed, 0)), train_set, cfg, hook);
}

TrainResult train_from(MlpScorer model, const Sample& train_set, const TrainConfig& cfg,
                       const EvalHook& hook) {
  cfg.validate();
  model.validate();
  check_labeled(model, train_set);
  if (train_set.count_label(kNormalLabel) == 0 || train_set.count_label(kOutlierLabel) == 0) {
    throw ParameterError("training sample needs both labels");
  }
  Rng shuffle_rng(split_seed(cfg.seed, 1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.traces.reserve(cfg.epochs);
  Gradient grad(model.parameter_count());
  Activations act;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    for (std::size_t idx : order) {
      const auto x = train_set.point(idx);
      const int y = train_set.label(idx);
      forward_into(model, x, act);
      std::fill(grad.begin(), grad.end(), 0.0);
      backprop_into(model, x, act, act.output - static_cast<double>(y), grad);
      apply_step(model, grad, cfg.learning_rate);
    }
    apply_step(model, regularized_gradient(model, train_set, cfg.phi, cfg.lambda),
               cfg.batch_learning_rate);

    EpochTrace trace;
    trace.epoch = epoch;
    trace.bce = batch_bce(model, train_set);
    trace.w_proxy = batch_proxy(model, train_set, cfg.phi);
    if (hook) trace.acc_75 = hook(model);
    result.traces.push_back(trace);
  }
  result.model = std::move(model);
  return result;
}

void write_model_json(std::ostream& out, const MlpScorer& model) {
  model.validate();
  nlohmann::ordered_json doc;
  doc["input_dim"] = model.input_dim;
  doc["hidden_size"] = model.hidden_size;
  doc["w1"] = model.w1;
  doc["b1"] = model.b1;
  doc["w2"] = model.w2;
  doc["b2"] = model.b2;
  out << doc.dump(2) << '\n';
}

MlpScorer read_model_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
    return mlp_from_weights(doc.at("input_dim").get<std::size_t>(),
                            doc.at("hidden_size").get<std::size_t>(),
                            doc.at("w1").get<std::vector<double>>(),
                            doc.at("b1").get<std::vector<double>>(),
                            doc.at("w2").get<std::vector<double>>(), doc.at("b2").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace mvrank
