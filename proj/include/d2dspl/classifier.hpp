#ifndef D2DSPL_CLASSIFIER_HPP
#define D2DSPL_CLASSIFIER_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "d2dspl/distill.hpp"
#include "d2dspl/envcore.hpp"

// Single-hidden-layer tanh network with a softmax output, trained by
// full-batch gradient descent on mean cross-entropy.
namespace d2dspl::nn {

struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

// Per-feature mean and population std; std below 1e-8 becomes 1.
Normalizer fit_normalizer(const distill::TrainingDataset& dataset);

struct TrainMeta {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  double final_learning_rate = 0.0;
};

struct MlpModel {
  Eigen::MatrixXd hidden_weights;  // hidden x input
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;  // output x hidden
  Eigen::VectorXd output_bias;
  Normalizer normalizer;
  std::string activation = "tanh";
  TrainMeta meta;

  // All-zero parameters, identity normalization.
  static MlpModel zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

  std::size_t input_dim() const { return static_cast<std::size_t>(hidden_weights.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(hidden_weights.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(output_weights.rows()); }

  // Throws ValidationError on inconsistent dimensions, non-finite values or
  // non-positive std entries.
  void validate() const;

  std::string to_json() const;
  static MlpModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static MlpModel load(const std::string& path);
};

struct TrainConfig {
  std::size_t epochs = 5000;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  std::string loss = "cross_entropy";

  void validate() const;
};

// Class probabilities for one state.
std::vector<double> forward(const MlpModel& model, const ContinuousState& state);

// argmax of forward(); ties to the lowest action.
ActionId predict(const MlpModel& model, const ContinuousState& state);

struct Gradients {
  Eigen::MatrixXd hidden_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;
  Eigen::VectorXd output_bias;
};

struct LossAndGradient {
  double loss = 0.0;
  double accuracy = 0.0;
  Gradients grad;
};

// Mean cross-entropy over the dataset (inputs normalized with the model's
// stored statistics) and its gradient with respect to every weight and bias.
LossAndGradient loss_and_gradient(const MlpModel& model, const distill::TrainingDataset& dataset);

double mean_loss(const MlpModel& model, const distill::TrainingDataset& dataset);
double accuracy(const MlpModel& model, const distill::TrainingDataset& dataset);

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // one entry per epoch, non-increasing
};

// Seeded init uniform in +-1/sqrt(fan_in), normalizer fitted to the data,
// then `epochs` full-batch steps. A step that would raise the loss is
// rejected and the learning rate halved.
TrainResult train(const distill::TrainingDataset& dataset, std::size_t hidden_dim,
                  const TrainConfig& config);

// Max relative error between analytic and central-difference gradients over
// every parameter. epsilon must lie in [1e-7, 1e-3].
double gradient_check(const MlpModel& model, const distill::TrainingDataset& dataset,
                      double epsilon);

}  // namespace d2dspl::nn

#endif  // D2DSPL_CLASSIFIER_HPP
