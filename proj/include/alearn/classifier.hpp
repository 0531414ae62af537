// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "alearn/dataset.hpp"

namespace alearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Hyperparameters of softmax-regression training.
struct TrainConfig {
  double l2_penalty = 1e-3;
  double learning_rate = 0.1;
  std::size_t max_epochs = 500;
  /// Training stops once the max-norm of the gradient falls below this.
  double convergence_tol = 1e-6;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Weights (m x d) and biases (m) of a multinomial logistic model.
struct ModelParams {
  Matrix weights;
  Vector biases;

  static ModelParams zeros(std::size_t num_classes, std::size_t dimensionality);

  std::size_t num_classes() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dimensionality() const { return static_cast<std::size_t>(weights.cols()); }

  bool operator==(const ModelParams& o) const {
    return weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
           biases.size() == o.biases.size() && weights == o.weights && biases == o.biases;
  }
};

/// Row i holds p(y | x_i) for every class y.
struct PosteriorMatrix {
  Matrix values;
  std::vector<InstanceId> instance_ids;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

  /// Checks shape, range, finiteness and that every row sums to 1 within `tol`.
  void validate(double tol = 1e-9) const;
};

/// Features of `examples` stacked as rows.
Matrix feature_matrix(std::span<const Example> examples);

/// Mean cross-entropy plus (l2/2)*||W||^2. Biases are not penalised.
double softmax_loss(const ModelParams& params, const Matrix& x, std::span<const int> y,
                    double l2_penalty);

/// Analytic gradient of `softmax_loss`, written into `grad` (same shapes as `params`).
void softmax_gradient(const ModelParams& params, const Matrix& x, std::span<const int> y,
                      double l2_penalty, ModelParams& grad);

/// Trains by full-batch gradient descent from zero weights.
///
/// The step starts at `learning_rate` and is halved whenever a step would
/// increase the loss, so the loss sequence is non-increasing.
/// `loss_trace`, when given, receives the loss before the first and after
/// every accepted step.
ModelParams train(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                  const TrainConfig& cfg, std::vector<double>* loss_trace = nullptr);

/// Softmax of `x * W^T + b`, one row per input row.
Matrix predict_proba(const ModelParams& model, const Matrix& x);
PosteriorMatrix predict_proba(const ModelParams& model, const Matrix& x,
                              std::vector<InstanceId> ids);

/// Row-wise softmax with max-shift; rows are renormalised after exponentiation.
Matrix softmax_rows(const Matrix& logits);

/// Index of the largest entry in each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

/// Fraction of rows whose argmax equals the label.
double accuracy_from_proba(const Matrix& proba, std::span<const int> y);
double accuracy(const ModelParams& model, const Matrix& x, std::span<const int> y);

/// Versioned text format: "alm1", then "m d", m weight rows, one bias row.
void save_model(const ModelParams& model, std::ostream& out);
ModelParams load_model(std::istream& in);

}  // namespace alearn
