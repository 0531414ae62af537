// Copyright 2026 The alearn Authors
// SPDX-License-Identifier: Apache-2.0

#include "alearn/classifier.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "alearn/errors.hpp"

namespace alearn {

namespace {

void check_labels(const Matrix& x, std::span<const int> y, std::size_t num_classes) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("feature rows (" + std::to_string(x.rows()) + ") and labels (" +
                     std::to_string(y.size()) + ") differ");
  }
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw ShapeError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
  }
}

void check_dims(const ModelParams& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.dimensionality()) {
    throw ShapeError("features have " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(model.dimensionality()));
  }
}

Matrix logits(const ModelParams& p, const Matrix& x) {
  Matrix z = x * p.weights.transpose();
  z.rowwise() += p.biases.transpose();
  return z;
}

// Mean cross-entropy and the softmax probabilities in one pass.
double forward(const ModelParams& p, const Matrix& x, std::span<const int> y, double l2,
               Matrix& proba) {
  const Matrix z = logits(p, x);
  proba.resize(z.rows(), z.cols());
  double ce = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double zmax = z.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const double e = std::exp(z(i, c) - zmax);
      proba(i, c) = e;
      sum += e;
    }
    proba.row(i) /= sum;
    ce += zmax + std::log(sum) - z(i, y[static_cast<std::size_t>(i)]);
  }
  const double n = static_cast<double>(std::max<Eigen::Index>(z.rows(), 1));
  return ce / n + 0.5 * l2 * p.weights.squaredNorm();
}

void gradient_from_proba(const ModelParams& p, const Matrix& x, std::span<const int> y,
                         double l2, Matrix residual, ModelParams& grad) {
  for (std::size_t i = 0; i < y.size(); ++i) residual(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
  const double n = static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  grad.weights = residual.transpose() * x / n + l2 * p.weights;
  grad.biases = residual.colwise().sum().transpose() / n;
}

double max_abs(const ModelParams& g) {
  double v = g.weights.size() ? g.weights.cwiseAbs().maxCoeff() : 0.0;
  if (g.biases.size()) v = std::max(v, g.biases.cwiseAbs().maxCoeff());
  return v;
}

// Applied to the step after every accepted descent step.
constexpr double kStepGrowth = 1.25;

void write_number(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) {
    throw ConfigError("l2_penalty must be nonnegative");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be positive");
}

ModelParams ModelParams::zeros(std::size_t num_classes, std::size_t dimensionality) {
  ModelParams p;
  p.weights = Matrix::Zero(static_cast<Eigen::Index>(num_classes),
                           static_cast<Eigen::Index>(dimensionality));
  p.biases = Vector::Zero(static_cast<Eigen::Index>(num_classes));
  return p;
}

void PosteriorMatrix::validate(double tol) const {
  if (!instance_ids.empty() && instance_ids.size() != rows()) {
    throw ShapeError("posterior matrix has " + std::to_string(rows()) + " rows but " +
                     std::to_string(instance_ids.size()) + " ids");
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = values(i, c);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ShapeError("posterior entry (" + std::to_string(i) + ", " + std::to_string(c) +
                         ") outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw ShapeError("posterior row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

Matrix feature_matrix(std::span<const Example> examples) {
  if (examples.empty()) return Matrix(0, 0);
  const auto d = static_cast<Eigen::Index>(examples.front().features.size());
  Matrix x(static_cast<Eigen::Index>(examples.size()), d);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& f = examples[i].features;
    if (static_cast<Eigen::Index>(f.size()) != d) throw ShapeError("ragged feature vectors");
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(f.data(), d).transpose();
  }
  return x;
}

double softmax_loss(const ModelParams& params, const Matrix& x, std::span<const int> y,
                    double l2_penalty) {
  check_dims(params, x);
  check_labels(x, y, params.num_classes());
  Matrix proba;
  return forward(params, x, y, l2_penalty, proba);
}

void softmax_gradient(const ModelParams& params, const Matrix& x, std::span<const int> y,
                      double l2_penalty, ModelParams& grad) {
  check_dims(params, x);
  check_labels(x, y, params.num_classes());
  Matrix proba;
  forward(params, x, y, l2_penalty, proba);
  gradient_from_proba(params, x, y, l2_penalty, std::move(proba), grad);
}

ModelParams train(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                  const TrainConfig& cfg, std::vector<double>* loss_trace) {
  cfg.validate();
  if (num_classes < 2) throw TrainingError("need at least 2 classes");
  check_labels(x, y, num_classes);
  if (std::set<int>(y.begin(), y.end()).size() < 2) {
    throw TrainingError("training data must contain at least 2 distinct classes");
  }

  ModelParams params = ModelParams::zeros(num_classes, static_cast<std::size_t>(x.cols()));
  ModelParams grad;
  ModelParams candidate;
  Matrix proba;
  Matrix candidate_proba;
  double loss = forward(params, x, y, cfg.l2_penalty, proba);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(loss);
  }
  double step = cfg.learning_rate;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    gradient_from_proba(params, x, y, cfg.l2_penalty, proba, grad);
    if (max_abs(grad) < cfg.convergence_tol) break;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      candidate.weights = params.weights - step * grad.weights;
      candidate.biases = params.biases - step * grad.biases;
      const double next = forward(candidate, x, y, cfg.l2_penalty, candidate_proba);
      if (next <= loss) {
        std::swap(params, candidate);
        std::swap(proba, candidate_proba);
        loss = next;
        accepted = true;
        step *= kStepGrowth;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (loss_trace) loss_trace->push_back(loss);
  }
  return params;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double zmax = z.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      out(i, c) = std::exp(z(i, c) - zmax);
      sum += out(i, c);
    }
    out.row(i) /= sum;
  }
  return out;
}

Matrix predict_proba(const ModelParams& model, const Matrix& x) {
  check_dims(model, x);
  return softmax_rows(logits(model, x));
}

PosteriorMatrix predict_proba(const ModelParams& model, const Matrix& x,
                              std::vector<InstanceId> ids) {
  if (ids.size() != static_cast<std::size_t>(x.rows())) {
    throw ShapeError("id count does not match feature rows");
  }
  return PosteriorMatrix{predict_proba(model, x), std::move(ids)};
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(i, c) > m(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy_from_proba(const Matrix& proba, std::span<const int> y) {
  if (y.empty()) throw ConfigError("accuracy needs a nonempty test set");
  if (static_cast<std::size_t>(proba.rows()) != y.size()) {
    throw ShapeError("prediction rows and labels differ");
  }
  const auto pred = argmax_rows(proba);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

double accuracy(const ModelParams& model, const Matrix& x, std::span<const int> y) {
  if (y.empty()) throw ConfigError("accuracy needs a nonempty test set");
  return accuracy_from_proba(predict_proba(model, x), y);
}

void save_model(const ModelParams& model, std::ostream& out) {
  out << "alm1\n" << model.num_classes() << ' ' << model.dimensionality() << '\n';
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
      if (c) out << ' ';
      write_number(out, model.weights(r, c));
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < model.biases.size(); ++r) {
    if (r) out << ' ';
    write_number(out, model.biases(r));
  }
  out << '\n';
  if (!out) throw IoError("model write failed");
}

ModelParams load_model(std::istream& in) {
  std::string tag;
  if (!(in >> tag) || tag != "alm1") throw ParseError("expected 'alm1' model header");
  std::size_t m = 0, d = 0;
  if (!(in >> m >> d)) throw ParseError("model header lacks dimensions");
  ModelParams p = ModelParams::zeros(m, d);
  auto read = [&](double& v) {
    std::string tok;
    if (!(in >> tok)) throw ParseError("truncated model");
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw ParseError("bad model value '" + tok + "'");
    }
  };
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      read(p.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
  }
  for (std::size_t r = 0; r < m; ++r) read(p.biases(static_cast<Eigen::Index>(r)));
  return p;
}

}  // namespace alearn
