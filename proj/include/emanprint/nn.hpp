#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emanprint/error.hpp"
#include "emanprint/random.hpp"

namespace emanprint::nn {

enum class Activation { ReLU, Linear };

struct LayerSpec {
  int units = 1;
  Activation activation = Activation::ReLU;
  double dropout_after = 0.0;
  bool operator==(const LayerSpec &) const = default;
};

struct MlpArchitecture {
  int input_dim = 21;
  std::vector<LayerSpec> hidden{{290, Activation::ReLU, 0.05}, {350, Activation::ReLU, 0.05}};
  int output_dim = 7; ///< softmax output

  std::int64_t parameter_count() const;
  std::string describe() const; ///< e.g. "21-290r.05-350r.05-7"
  bool operator==(const MlpArchitecture &) const = default;
};

/// 21 -> 290 ReLU (dropout 0.05) -> 350 ReLU (dropout 0.05) -> classes.
MlpArchitecture default_architecture(int classes);
void validate(const MlpArchitecture &arch);

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 200;
  std::uint64_t seed = 0;
  bool shuffle = true;

  static TrainConfig baseline_preset(); ///< batch 32, 1000 epochs
  static TrainConfig voip_preset();     ///< batch 256, 100 epochs
};

void validate(const TrainConfig &config);

/// Dense ReLU/linear stack with a softmax head. Weights are (in x out) and a
/// batch is one sample per row: Z = A W + b.
template <typename Scalar> class Mlp {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  struct Layer {
    Matrix weights;
    RowVector bias;
    Activation activation = Activation::Linear;
    double dropout_after = 0.0;
  };

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<RowVector> bias;
  };

  struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<RowVector> m_bias, v_bias;
    std::int64_t step = 0;
  };

  Mlp() = default;

  /// Glorot-uniform weights, zero biases.
  Mlp(const MlpArchitecture &arch, std::uint64_t seed) : arch_(arch) {
    validate(arch);
    Rng rng(seed);
    int fan_in = arch.input_dim;
    const auto add = [&](int units, Activation act, double dropout) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + units));
      Layer layer{Matrix(fan_in, units), RowVector::Zero(units), act, dropout};
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
          layer.weights(r, c) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * limit);
      layers_.push_back(std::move(layer));
      fan_in = units;
    };
    for (const auto &h : arch.hidden)
      add(h.units, h.activation, h.dropout_after);
    add(arch.output_dim, Activation::Linear, 0.0);
    reset_optimizer();
  }

  const MlpArchitecture &architecture() const { return arch_; }
  std::vector<Layer> &layers() { return layers_; }
  const std::vector<Layer> &layers() const { return layers_; }
  AdamState &adam() { return adam_; }
  const AdamState &adam() const { return adam_; }

  void reset_optimizer() {
    adam_ = AdamState{};
    for (const auto &l : layers_) {
      adam_.m_weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
      adam_.v_weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
      adam_.m_bias.push_back(RowVector::Zero(l.bias.size()));
      adam_.v_bias.push_back(RowVector::Zero(l.bias.size()));
    }
  }

  /// Class probabilities, one row per sample. Dropout masks are drawn from
  /// rng only when training; the pass state is kept for backward().
  Matrix forward(const Matrix &x, bool training, Rng *rng = nullptr) {
    if (x.cols() != arch_.input_dim)
      throw Error(ErrorKind::DimensionMismatch,
                  "input has " + std::to_string(x.cols()) + " columns, model expects " +
                      std::to_string(arch_.input_dim));
    if (training && rng == nullptr)
      throw Error(ErrorKind::InvalidArgument, "training pass needs a generator");
    inputs_.assign(1, x);
    pre_.clear();
    masks_.clear();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer &l = layers_[i];
      Matrix z = inputs_.back() * l.weights;
      z.rowwise() += l.bias;
      pre_.push_back(z);
      if (i + 1 == layers_.size())
        break;
      Matrix a = l.activation == Activation::ReLU ? Matrix(z.cwiseMax(Scalar(0))) : z;
      Matrix mask;
      if (training && l.dropout_after > 0.0) {
        const Scalar keep_scale = Scalar(1.0 / (1.0 - l.dropout_after));
        mask.resize(a.rows(), a.cols());
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
          for (Eigen::Index r = 0; r < mask.rows(); ++r)
            mask(r, c) = uniform01(*rng) < l.dropout_after ? Scalar(0) : keep_scale;
        a = a.cwiseProduct(mask);
      }
      masks_.push_back(std::move(mask));
      inputs_.push_back(std::move(a));
    }
    probabilities_ = softmax(pre_.back());
    return probabilities_;
  }

  /// Pre-activations of every layer from the last forward pass.
  const std::vector<Matrix> &pre_activations() const { return pre_; }

  /// Gradient of the mean sparse cross-entropy of the last forward pass.
  Gradients backward(std::span<const int> labels) const {
    const Eigen::Index n = probabilities_.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n || n == 0)
      throw Error(ErrorKind::DimensionMismatch, "labels do not match the last forward batch");
    Matrix delta = probabilities_;
    for (Eigen::Index r = 0; r < n; ++r) {
      const int y = labels[static_cast<std::size_t>(r)];
      if (y < 0 || y >= arch_.output_dim)
        throw Error(ErrorKind::LabelOutOfRange, "label out of range");
      delta(r, y) -= Scalar(1);
    }
    delta /= static_cast<Scalar>(n);

    Gradients g;
    g.weights.resize(layers_.size());
    g.bias.resize(layers_.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      g.weights[i] = inputs_[i].transpose() * delta;
      g.bias[i] = delta.colwise().sum();
      if (i == 0)
        break;
      Matrix back = delta * layers_[i].weights.transpose();
      if (masks_[i - 1].size() != 0)
        back = back.cwiseProduct(masks_[i - 1]);
      if (layers_[i - 1].activation == Activation::ReLU)
        back = back.cwiseProduct((pre_[i - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
      delta = std::move(back);
    }
    return g;
  }

  void adam_step(const Gradients &g, const TrainConfig &config) {
    ++adam_.step;
    const double t = static_cast<double>(adam_.step);
    const Scalar b1 = static_cast<Scalar>(config.beta1), b2 = static_cast<Scalar>(config.beta2);
    const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(config.beta1, t));
    const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(config.beta2, t));
    const Scalar lr = static_cast<Scalar>(config.learning_rate);
    const Scalar eps = static_cast<Scalar>(config.epsilon);
    const auto update = [&](auto &theta, auto &m, auto &v, const auto &grad) {
      m = b1 * m + (Scalar(1) - b1) * grad;
      v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
      theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      update(layers_[i].weights, adam_.m_weights[i], adam_.v_weights[i], g.weights[i]);
      update(layers_[i].bias, adam_.m_bias[i], adam_.v_bias[i], g.bias[i]);
    }
  }

  /// Row-wise softmax with max subtraction.
  static Matrix softmax(const Matrix &logits) {
    Matrix p = logits;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      p.row(r).array() -= p.row(r).maxCoeff();
      p.row(r) = p.row(r).array().exp().matrix();
      p.row(r) /= p.row(r).sum();
    }
    return p;
  }

private:
  MlpArchitecture arch_;
  std::vector<Layer> layers_;
  AdamState adam_;
  std::vector<Matrix> inputs_, pre_, masks_;
  Matrix probabilities_;
};

using MlpModel = Mlp<double>;

/// Mean of -log p[label] with p clamped to [1e-7, 1 - 1e-7].
double sparse_cce_loss(const Eigen::MatrixXd &probabilities, std::span<const int> labels);

/// argmax per row.
std::vector<int> predict_labels(const Eigen::MatrixXd &probabilities);

/// z-score fitted on the training split; zero-variance columns pass through
/// centred.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd &x);
  Eigen::MatrixXd transform(const Eigen::MatrixXd &x) const;
};

struct History {
  std::vector<double> train_loss;
  std::vector<double> val_accuracy; ///< NaN when no validation split
};

void write_history(const History &history, const std::filesystem::path &path);

/// Standardizer + network, the unit that gets checkpointed.
struct Classifier {
  Standardizer standardizer;
  MlpModel model;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd &x);
  std::vector<int> predict(const Eigen::MatrixXd &x);
};

struct TrainResult {
  Classifier classifier;
  History history;
};

/// Mini-batch Adam on standardized inputs. Initialization, shuffling and
/// dropout all derive from config.seed.
TrainResult train(const MlpArchitecture &arch, const Eigen::MatrixXd &x_train,
                  std::span<const int> y_train, const Eigen::MatrixXd &x_val,
                  std::span<const int> y_val, const TrainConfig &config);

struct Metrics {
  Eigen::MatrixXi confusion; ///< true x predicted
  Eigen::VectorXd precision;
  Eigen::VectorXd recall;
  double accuracy = 0.0;

  static Metrics from_confusion(const Eigen::MatrixXi &confusion);
};

Metrics evaluate_metrics(std::span<const int> truth, std::span<const int> predicted, int classes);
Metrics evaluate_metrics(Classifier &classifier, const Eigen::MatrixXd &x, std::span<const int> y);

/// floor(n_train / (alpha (n_in + n_out)))
int demuth_bound(std::int64_t train_samples, int input_dim, int output_dim, double alpha = 2.0);

/// Layers {1,2,3} x units {50,100,...,bound} x dropout {0,0.05,0.1}, equal
/// width per layer.
std::vector<MlpArchitecture> default_search_space(int input_dim, int classes, int bound);

/// Stratified k folds: each class is shuffled and dealt round-robin.
std::vector<std::vector<Eigen::Index>> stratified_folds(std::span<const int> labels, int classes,
                                                        int folds, std::uint64_t seed);

struct GridCell {
  MlpArchitecture architecture;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  const MlpArchitecture &best_architecture() const { return cells.at(best).architecture; }
};

/// Highest mean accuracy, then fewer parameters, then earlier cell.
std::size_t select_best(std::span<const GridCell> cells);

GridResult grid_search(const Eigen::MatrixXd &x, std::span<const int> y, int classes,
                       std::span<const MlpArchitecture> space, const TrainConfig &config,
                       int folds = 3);

/// Binary checkpoint: magic, version, seeds, architecture, standardizer,
/// weights (row-major f64) and Adam state.
void save_checkpoint(const Classifier &classifier, const std::filesystem::path &path);
Classifier load_checkpoint(const std::filesystem::path &path);

} // namespace emanprint::nn
