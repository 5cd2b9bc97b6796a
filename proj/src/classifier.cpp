#include "d2dspl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "d2dspl/rng.hpp"
#include "json.hpp"

namespace d2dspl::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {

constexpr double kStdFloor = 1e-8;

// Inputs as columns, already normalized.
MatrixXd normalized_inputs(const Normalizer& norm, const distill::TrainingDataset& ds) {
  const auto d = static_cast<Eigen::Index>(ds.n_state_vars);
  MatrixXd x(d, static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      x(k, static_cast<Eigen::Index>(i)) =
          (ds.inputs[i][static_cast<std::size_t>(k)] - norm.mean(k)) / norm.std(k);
    }
  }
  return x;
}

void check_dataset(const MlpModel& model, const distill::TrainingDataset& ds) {
  if (ds.size() == 0) throw UsageError("classifier: empty dataset");
  if (ds.n_state_vars != model.input_dim()) throw UsageError("classifier: input width mismatch");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.inputs[i].size() != ds.n_state_vars) throw UsageError("classifier: ragged input row");
    if (ds.targets[i] >= model.output_dim()) throw UsageError("classifier: target out of range");
  }
}

// Single-sample logits without heap traffic in the common small case.
void compute_logits(const MlpModel& m, const ContinuousState& state, double* hidden, double* logits) {
  const Eigen::Index d = m.hidden_weights.cols();
  const Eigen::Index h = m.hidden_weights.rows();
  const Eigen::Index a = m.output_weights.rows();
  double x[64];
  std::vector<double> x_heap;
  double* xp = x;
  if (d > 64) {
    x_heap.resize(static_cast<std::size_t>(d));
    xp = x_heap.data();
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    xp[k] = (state[static_cast<std::size_t>(k)] - m.normalizer.mean(k)) / m.normalizer.std(k);
  }
  for (Eigen::Index j = 0; j < h; ++j) {
    double z = m.hidden_bias(j);
    for (Eigen::Index k = 0; k < d; ++k) z += m.hidden_weights(j, k) * xp[k];
    hidden[j] = std::tanh(z);
  }
  for (Eigen::Index o = 0; o < a; ++o) {
    double z = m.output_bias(o);
    for (Eigen::Index j = 0; j < h; ++j) z += m.output_weights(o, j) * hidden[j];
    logits[o] = z;
  }
}

template <typename F>
void with_logits(const MlpModel& m, const ContinuousState& state, F&& f) {
  if (state.size() != m.input_dim()) {
    throw UsageError("classifier: state has " + std::to_string(state.size()) +
                     " variables, model expects " + std::to_string(m.input_dim()));
  }
  const auto h = m.hidden_dim();
  const auto a = m.output_dim();
  if (h <= 128 && a <= 32) {
    double hidden[128];
    double logits[32];
    compute_logits(m, state, hidden, logits);
    f(logits, a);
  } else {
    std::vector<double> hidden(h), logits(a);
    compute_logits(m, state, hidden.data(), logits.data());
    f(logits.data(), a);
  }
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

MatrixXd matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) {
    throw ValidationError(std::string("model: ") + what + " has the wrong row count");
  }
  MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError(std::string("model: ") + what + " has the wrong column count");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

VectorXd vector_from_json(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw ValidationError(std::string("model: ") + what + " has the wrong length");
  }
  VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

struct Batch {
  MatrixXd hidden;  // activations, hidden x n
  MatrixXd probs;   // output x n
  double loss = 0.0;
  double accuracy = 0.0;
};

// Forward pass over all columns of x; reuses the storage already in b.
void run_batch(const MlpModel& m, const MatrixXd& x, const std::vector<ActionId>& targets, Batch& b) {
  const Eigen::Index n = x.cols();
  const Eigen::Index a = m.output_weights.rows();
  b.hidden.noalias() = m.hidden_weights * x;
  b.hidden.colwise() += m.hidden_bias;
  b.hidden = b.hidden.array().tanh().matrix();
  b.probs.noalias() = m.output_weights * b.hidden;
  b.probs.colwise() += m.output_bias;
  double loss = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double* col = b.probs.col(i).data();
    const auto best = static_cast<Eigen::Index>(argmax(col, static_cast<std::size_t>(a)));
    const double mx = col[best];
    const auto y = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]);
    const double target_logit = col[y];
    double total = 0.0;
    for (Eigen::Index o = 0; o < a; ++o) {
      col[o] = std::exp(col[o] - mx);
      total += col[o];
    }
    for (Eigen::Index o = 0; o < a; ++o) col[o] /= total;
    loss += std::log(total) - (target_logit - mx);
    if (best == y) ++correct;
  }
  b.loss = loss / static_cast<double>(n);
  b.accuracy = static_cast<double>(correct) / static_cast<double>(n);
}

Batch run_batch(const MlpModel& m, const MatrixXd& x, const std::vector<ActionId>& targets) {
  Batch b;
  run_batch(m, x, targets, b);
  return b;
}

struct BackpropScratch {
  MatrixXd d_logits;
  MatrixXd d_hidden;
};

void backprop(const MlpModel& m, const MatrixXd& x, const std::vector<ActionId>& targets,
              const Batch& b, Gradients& g, BackpropScratch& s) {
  const Eigen::Index n = x.cols();
  s.d_logits = b.probs;
  for (Eigen::Index i = 0; i < n; ++i) {
    s.d_logits(static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]), i) -= 1.0;
  }
  s.d_logits /= static_cast<double>(n);

  g.output_weights.noalias() = s.d_logits * b.hidden.transpose();
  g.output_bias = s.d_logits.rowwise().sum();
  s.d_hidden.noalias() = m.output_weights.transpose() * s.d_logits;
  s.d_hidden.array() *= 1.0 - b.hidden.array().square();
  g.hidden_weights.noalias() = s.d_hidden * x.transpose();
  g.hidden_bias = s.d_hidden.rowwise().sum();
}

Gradients backprop(const MlpModel& m, const MatrixXd& x, const std::vector<ActionId>& targets,
                   const Batch& b) {
  Gradients g;
  BackpropScratch s;
  backprop(m, x, targets, b, g, s);
  return g;
}

// Visits every trainable scalar in a fixed order.
template <typename M, typename F>
void for_each_parameter(M& m, F&& f) {
  for (Eigen::Index i = 0; i < m.hidden_weights.size(); ++i) f(m.hidden_weights.data()[i]);
  for (Eigen::Index i = 0; i < m.hidden_bias.size(); ++i) f(m.hidden_bias.data()[i]);
  for (Eigen::Index i = 0; i < m.output_weights.size(); ++i) f(m.output_weights.data()[i]);
  for (Eigen::Index i = 0; i < m.output_bias.size(); ++i) f(m.output_bias.data()[i]);
}

}  // namespace

Normalizer fit_normalizer(const distill::TrainingDataset& dataset) {
  if (dataset.size() == 0) throw UsageError("fit_normalizer: empty dataset");
  const auto d = static_cast<Eigen::Index>(dataset.n_state_vars);
  const auto n = static_cast<double>(dataset.size());
  Normalizer norm{VectorXd::Zero(d), VectorXd::Zero(d)};
  for (const auto& row : dataset.inputs) {
    for (Eigen::Index k = 0; k < d; ++k) norm.mean(k) += row[static_cast<std::size_t>(k)];
  }
  norm.mean /= n;
  for (const auto& row : dataset.inputs) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double c = row[static_cast<std::size_t>(k)] - norm.mean(k);
      norm.std(k) += c * c;
    }
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    const double s = std::sqrt(norm.std(k) / n);
    norm.std(k) = s < kStdFloor ? 1.0 : s;
  }
  return norm;
}

MlpModel MlpModel::zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim) {
  const auto d = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden_dim);
  const auto a = static_cast<Eigen::Index>(output_dim);
  MlpModel m;
  m.hidden_weights = MatrixXd::Zero(h, d);
  m.hidden_bias = VectorXd::Zero(h);
  m.output_weights = MatrixXd::Zero(a, h);
  m.output_bias = VectorXd::Zero(a);
  m.normalizer = {VectorXd::Zero(d), VectorXd::Ones(d)};
  return m;
}

void MlpModel::validate() const {
  const auto d = hidden_weights.cols();
  const auto h = hidden_weights.rows();
  if (d == 0 || h == 0 || output_weights.rows() == 0) {
    throw ValidationError("model: dimensions must be positive");
  }
  if (hidden_bias.size() != h || output_weights.cols() != h ||
      output_bias.size() != output_weights.rows() || normalizer.mean.size() != d ||
      normalizer.std.size() != d) {
    throw ValidationError("model: inconsistent dimensions");
  }
  if (!hidden_weights.allFinite() || !hidden_bias.allFinite() || !output_weights.allFinite() ||
      !output_bias.allFinite() || !normalizer.mean.allFinite() || !normalizer.std.allFinite()) {
    throw ValidationError("model: non-finite parameter");
  }
  if ((normalizer.std.array() <= 0.0).any()) {
    throw ValidationError("model: normalizer std must be positive");
  }
  if (activation != "tanh") throw ValidationError("model: unsupported activation " + activation);
}

std::string MlpModel::to_json() const {
  json j;
  j["dims"] = {{"input", input_dim()}, {"hidden", hidden_dim()}, {"output", output_dim()}};
  j["activation"] = activation;
  j["normalizer"] = {{"mean", vector_to_json(normalizer.mean)},
                     {"std", vector_to_json(normalizer.std)}};
  j["hidden"] = {{"weights", matrix_to_json(hidden_weights)}, {"bias", vector_to_json(hidden_bias)}};
  j["output"] = {{"weights", matrix_to_json(output_weights)}, {"bias", vector_to_json(output_bias)}};
  j["train_meta"] = {{"seed", meta.seed},
                     {"epochs", meta.epochs},
                     {"final_loss", meta.final_loss},
                     {"final_accuracy", meta.final_accuracy},
                     {"final_learning_rate", meta.final_learning_rate}};
  return j.dump(2) + "\n";
}

MlpModel MlpModel::from_json(const std::string& text) {
  MlpModel m;
  try {
    const json j = json::parse(text);
    const auto d = j.at("dims").at("input").get<std::size_t>();
    const auto h = j.at("dims").at("hidden").get<std::size_t>();
    const auto a = j.at("dims").at("output").get<std::size_t>();
    m.activation = j.at("activation").get<std::string>();
    m.normalizer.mean = vector_from_json(j.at("normalizer").at("mean"), d, "normalizer.mean");
    m.normalizer.std = vector_from_json(j.at("normalizer").at("std"), d, "normalizer.std");
    m.hidden_weights = matrix_from_json(j.at("hidden").at("weights"), h, d, "hidden.weights");
    m.hidden_bias = vector_from_json(j.at("hidden").at("bias"), h, "hidden.bias");
    m.output_weights = matrix_from_json(j.at("output").at("weights"), a, h, "output.weights");
    m.output_bias = vector_from_json(j.at("output").at("bias"), a, "output.bias");
    if (j.contains("train_meta")) {
      const json& t = j["train_meta"];
      m.meta.seed = t.value("seed", std::uint64_t{0});
      m.meta.epochs = t.value("epochs", std::size_t{0});
      m.meta.final_loss = t.value("final_loss", 0.0);
      m.meta.final_accuracy = t.value("final_accuracy", 0.0);
      m.meta.final_learning_rate = t.value("final_learning_rate", 0.0);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: malformed JSON: ") + e.what());
  }
  m.validate();
  return m;
}

void MlpModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Fault("cannot write model file: " + path);
  out << to_json();
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ValidationError("train: epochs must be positive");
  if (!(learning_rate > 0)) throw ValidationError("train: learning rate must be positive");
  if (loss != "cross_entropy") throw ValidationError("train: unsupported loss " + loss);
}

std::vector<double> forward(const MlpModel& model, const ContinuousState& state) {
  std::vector<double> probs;
  with_logits(model, state, [&](const double* logits, std::size_t a) {
    const double mx = *std::max_element(logits, logits + a);
    probs.resize(a);
    double total = 0.0;
    for (std::size_t o = 0; o < a; ++o) {
      probs[o] = std::exp(logits[o] - mx);
      total += probs[o];
    }
    for (double& p : probs) p /= total;
  });
  return probs;
}

ActionId predict(const MlpModel& model, const ContinuousState& state) {
  // Softmax is monotone, so the argmax of the logits is the argmax of forward().
  ActionId best = 0;
  with_logits(model, state, [&](const double* logits, std::size_t a) { best = argmax(logits, a); });
  return best;
}

LossAndGradient loss_and_gradient(const MlpModel& model, const distill::TrainingDataset& dataset) {
  check_dataset(model, dataset);
  const MatrixXd x = normalized_inputs(model.normalizer, dataset);
  const Batch b = run_batch(model, x, dataset.targets);
  return {b.loss, b.accuracy, backprop(model, x, dataset.targets, b)};
}

double mean_loss(const MlpModel& model, const distill::TrainingDataset& dataset) {
  check_dataset(model, dataset);
  return run_batch(model, normalized_inputs(model.normalizer, dataset), dataset.targets).loss;
}

double accuracy(const MlpModel& model, const distill::TrainingDataset& dataset) {
  check_dataset(model, dataset);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (predict(model, dataset.inputs[i]) == dataset.targets[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

TrainResult train(const distill::TrainingDataset& dataset, std::size_t hidden_dim,
                  const TrainConfig& config) {
  config.validate();
  if (dataset.size() == 0) throw UsageError("train: empty dataset");
  if (hidden_dim == 0) throw ValidationError("train: hidden_dim must be positive");

  MlpModel m = MlpModel::zeros(dataset.n_state_vars, hidden_dim, dataset.n_actions);
  check_dataset(m, dataset);

  SeedStream rng(config.seed);
  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(dataset.n_state_vars));
  const double output_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (Eigen::Index i = 0; i < m.hidden_weights.size(); ++i) {
    m.hidden_weights.data()[i] = rng.uniform(-hidden_scale, hidden_scale);
  }
  for (Eigen::Index i = 0; i < m.hidden_bias.size(); ++i) {
    m.hidden_bias.data()[i] = rng.uniform(-hidden_scale, hidden_scale);
  }
  for (Eigen::Index i = 0; i < m.output_weights.size(); ++i) {
    m.output_weights.data()[i] = rng.uniform(-output_scale, output_scale);
  }
  for (Eigen::Index i = 0; i < m.output_bias.size(); ++i) {
    m.output_bias.data()[i] = rng.uniform(-output_scale, output_scale);
  }
  m.normalizer = fit_normalizer(dataset);

  const MatrixXd x = normalized_inputs(m.normalizer, dataset);
  TrainResult result;
  result.loss_history.reserve(config.epochs);

  double lr = config.learning_rate;
  Batch current = run_batch(m, x, dataset.targets);
  Batch next = current;
  Gradients g;
  BackpropScratch scratch;
  MlpModel candidate = m;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (!std::isfinite(current.loss)) {
      throw Fault("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    backprop(m, x, dataset.targets, current, g, scratch);
    candidate.hidden_weights = m.hidden_weights - lr * g.hidden_weights;
    candidate.hidden_bias = m.hidden_bias - lr * g.hidden_bias;
    candidate.output_weights = m.output_weights - lr * g.output_weights;
    candidate.output_bias = m.output_bias - lr * g.output_bias;
    run_batch(candidate, x, dataset.targets, next);
    if (std::isfinite(next.loss) && next.loss <= current.loss) {
      std::swap(m.hidden_weights, candidate.hidden_weights);
      std::swap(m.hidden_bias, candidate.hidden_bias);
      std::swap(m.output_weights, candidate.output_weights);
      std::swap(m.output_bias, candidate.output_bias);
      std::swap(current, next);
    } else {
      lr *= 0.5;
    }
    result.loss_history.push_back(current.loss);
  }

  m.meta = {config.seed, config.epochs, current.loss, current.accuracy, lr};
  result.model = std::move(m);
  return result;
}

double gradient_check(const MlpModel& model, const distill::TrainingDataset& dataset,
                      double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw UsageError("gradient_check: epsilon must lie in [1e-7, 1e-3]");
  }
  const LossAndGradient analytic = loss_and_gradient(model, dataset);

  std::vector<double> analytic_flat;
  Gradients g = analytic.grad;
  for_each_parameter(g, [&](double& v) { analytic_flat.push_back(v); });

  MlpModel probe = model;
  std::vector<double*> params;
  for_each_parameter(probe, [&](double& v) { params.push_back(&v); });

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + epsilon;
    const double up = mean_loss(probe, dataset);
    *params[i] = saved - epsilon;
    const double down = mean_loss(probe, dataset);
    *params[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic_flat[i];
    // Absolute floor keeps vanishing gradients from inflating the ratio.
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace d2dspl::nn
