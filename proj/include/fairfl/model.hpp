#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fairfl/data.hpp"
#include "fairfl/error.hpp"
#include "fairfl/rng.hpp"

namespace fairfl {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weight;  // out x in
  VectorX<Scalar> bias;    // out

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }

  bool operator==(const DenseLayer& o) const {
    return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
           bias.size() == o.bias.size() && weight == o.weight && bias == o.bias;
  }
};

/// Feed-forward binary classifier: ReLU on hidden layers, sigmoid on the
/// single output unit.
template <typename Scalar>
struct BasicModelWeights {
  std::vector<DenseLayer<Scalar>> layers;

  std::size_t num_layers() const { return layers.size(); }
  Eigen::Index input_dim() const { return layers.front().in(); }

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(static_cast<std::size_t>(layers.front().in()));
    for (const auto& l : layers) d.push_back(static_cast<std::size_t>(l.out()));
    return d;
  }

  void validate() const {
    require(!layers.empty(), "model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      require(layers[i].bias.size() == layers[i].out(), "bias length != layer output size");
      if (i > 0) require(layers[i].in() == layers[i - 1].out(), "adjacent layer dims mismatch");
    }
    require(layers.back().out() == 1, "final layer must have a single output");
  }

  bool same_shape(const BasicModelWeights& o) const { return dims() == o.dims(); }

  bool operator==(const BasicModelWeights&) const = default;
};

using ModelWeights = BasicModelWeights<double>;

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t local_epochs = 1;
  std::uint64_t rng_seed = 0;
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return std::max(z, Scalar(0)) + log1p(exp(-abs(z)));
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
template <typename Scalar = double>
BasicModelWeights<Scalar> init_model(std::span<const std::size_t> layer_dims,
                                     std::uint64_t rng_seed) {
  require(layer_dims.size() >= 2, "init_model: need at least input and output dims");
  require(layer_dims.back() == 1, "init_model: last dim must be 1");
  for (auto d : layer_dims) require(d >= 1, "init_model: dims must be positive");

  Rng rng(derive_seed(rng_seed, {stream::init}));
  BasicModelWeights<Scalar> m;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(layer_dims[i]);
    const auto out = static_cast<Eigen::Index>(layer_dims[i + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer<Scalar> layer{MatrixX<Scalar>(out, in), VectorX<Scalar>(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = Scalar(u(rng));
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = Scalar(u(rng));
    m.layers.push_back(std::move(layer));
  }
  return m;
}

template <typename Scalar = double>
BasicModelWeights<Scalar> init_model(std::initializer_list<std::size_t> layer_dims,
                                     std::uint64_t rng_seed) {
  const std::vector<std::size_t> d(layer_dims);
  return init_model<Scalar>(std::span<const std::size_t>(d), rng_seed);
}

/// Activations of every layer for a batch (rows are samples).
/// pre[l] is the pre-activation of layer l, post[l] its input.
template <typename Scalar>
struct ForwardCache {
  std::vector<MatrixX<Scalar>> pre;
  std::vector<MatrixX<Scalar>> post;

  const MatrixX<Scalar>& logits() const { return pre.back(); }
};

template <typename Scalar, typename Derived>
ForwardCache<Scalar> forward_cache(const BasicModelWeights<Scalar>& w,
                                   const Eigen::MatrixBase<Derived>& x) {
  require(x.cols() == w.input_dim(), "forward: feature dimension mismatch");
  ForwardCache<Scalar> cache;
  MatrixX<Scalar> a = x.template cast<Scalar>();
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& layer = w.layers[l];
    MatrixX<Scalar> z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    cache.post.push_back(std::move(a));
    if (l + 1 < w.layers.size()) a = z.cwiseMax(Scalar(0));
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

/// Output logits for a batch.
template <typename Scalar, typename Derived>
VectorX<Scalar> logits(const BasicModelWeights<Scalar>& w, const Eigen::MatrixBase<Derived>& x) {
  return forward_cache(w, x).logits().col(0);
}

template <typename Scalar>
Scalar clamp_open_unit(Scalar p) {
  return std::clamp(p, std::numeric_limits<Scalar>::min(),
                    Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2));
}

/// Probabilities for a batch, each strictly inside (0, 1).
template <typename Scalar, typename Derived>
VectorX<Scalar> predict_proba(const BasicModelWeights<Scalar>& w,
                              const Eigen::MatrixBase<Derived>& x) {
  return logits(w, x).unaryExpr([](Scalar z) { return clamp_open_unit(sigmoid(z)); });
}

template <typename Scalar, typename Derived>
Scalar forward(const BasicModelWeights<Scalar>& w, const Eigen::MatrixBase<Derived>& features) {
  require(features.cols() == 1 || features.rows() == 1, "forward: expected a single sample");
  if (features.cols() == 1) return predict_proba(w, features.transpose())(0);
  return predict_proba(w, features)(0);
}

template <typename Scalar>
std::vector<int> predict_labels(const BasicModelWeights<Scalar>& w, const Dataset& data,
                                double threshold = 0.5) {
  const auto p = predict_proba(w, data.features);
  std::vector<int> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[static_cast<std::size_t>(i)] = static_cast<double>(p(i)) >= threshold ? 1 : 0;
  return out;
}

/// Mean binary cross-entropy of logits against 0/1 labels.
template <typename Scalar>
Scalar bce_from_logits(const VectorX<Scalar>& z, std::span<const int> labels) {
  Scalar sum(0);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    sum += softplus(z(i)) - Scalar(labels[static_cast<std::size_t>(i)]) * z(i);
  return sum / Scalar(z.size());
}

/// Backpropagates d(loss)/d(logit) for every sample through the network.
template <typename Scalar>
BasicModelWeights<Scalar> backprop(const BasicModelWeights<Scalar>& w,
                                   const ForwardCache<Scalar>& cache,
                                   MatrixX<Scalar> dz) {
  BasicModelWeights<Scalar> grad;
  grad.layers.resize(w.layers.size());
  for (std::size_t l = w.layers.size(); l-- > 0;) {
    grad.layers[l].weight = dz.transpose() * cache.post[l];
    grad.layers[l].bias = dz.colwise().sum().transpose();
    if (l == 0) break;
    MatrixX<Scalar> da = dz * w.layers[l].weight;
    dz = da.cwiseProduct(
        cache.pre[l - 1].unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
  }
  return grad;
}

/// Mean BCE over the batch and its gradient with respect to every parameter.
template <typename Scalar, typename Derived>
std::pair<Scalar, BasicModelWeights<Scalar>> bce_loss_and_gradient(
    const BasicModelWeights<Scalar>& w, const Eigen::MatrixBase<Derived>& x,
    std::span<const int> labels) {
  require(static_cast<std::size_t>(x.rows()) == labels.size() && !labels.empty(),
          "bce_loss_and_gradient: batch/label size mismatch");
  const auto cache = forward_cache(w, x);
  const VectorX<Scalar> z = cache.logits().col(0);
  MatrixX<Scalar> dz(z.size(), 1);
  const Scalar inv_n = Scalar(1) / Scalar(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    dz(i, 0) = (sigmoid(z(i)) - Scalar(labels[static_cast<std::size_t>(i)])) * inv_n;
  return {bce_from_logits(z, labels), backprop(w, cache, std::move(dz))};
}

/// w <- w - lr * g, coefficient-wise.
template <typename Scalar>
void sgd_step(BasicModelWeights<Scalar>& w, const BasicModelWeights<Scalar>& g, Scalar lr) {
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    w.layers[l].weight -= lr * g.layers[l].weight;
    w.layers[l].bias -= lr * g.layers[l].bias;
  }
}

/// One pass of mini-batch SGD on mean BCE. Batches come from a shuffle
/// seeded by config.rng_seed; the last batch may be short.
template <typename Scalar>
BasicModelWeights<Scalar> sgd_epoch(BasicModelWeights<Scalar> w, const Dataset& train,
                                    const TrainConfig& config) {
  require(!train.empty(), "sgd_epoch: empty training set");
  require(config.learning_rate >= 0.0, "sgd_epoch: learning_rate must be >= 0");
  require(config.batch_size >= 1, "sgd_epoch: batch_size must be >= 1");
  w.validate();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.rng_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const Scalar lr(config.learning_rate);
  Matrix batch;
  std::vector<int> labels;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const auto end = std::min(order.size(), start + config.batch_size);
    batch.resize(static_cast<Eigen::Index>(end - start), train.features.cols());
    labels.resize(end - start);
    for (std::size_t r = start; r < end; ++r) {
      batch.row(static_cast<Eigen::Index>(r - start)) =
          train.features.row(static_cast<Eigen::Index>(order[r]));
      labels[r - start] = train.labels[order[r]];
    }
    const auto [loss, grad] = bce_loss_and_gradient(w, batch, std::span<const int>(labels));
    sgd_step(w, grad, lr);
  }
  return w;
}

/// {"layer_dims": [...], "weights": [[row-major]...], "biases": [[...]...]}
nlohmann::json to_json(const ModelWeights& w);
ModelWeights model_from_json(const nlohmann::json& j);

}  // namespace fairfl
