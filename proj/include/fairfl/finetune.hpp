#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "fairfl/data.hpp"
#include "fairfl/error.hpp"
#include "fairfl/model.hpp"
#include "fairfl/rng.hpp"

namespace fairfl {

struct FtConfig {
  double alpha_ft = 2.0;  // weight of the accuracy loss; the fairness loss has weight 1
  double eta = 5e-3;
  std::size_t rounds = 200;
  /// 0 or >= |train| means full batch.
  std::size_t batch_size = 256;
  std::uint64_t rng_seed = 0;
};

template <typename Scalar>
struct FrozenSplit {
  std::vector<DenseLayer<Scalar>> frozen;  // layers 1..L-1
  DenseLayer<Scalar> trainable;            // layer L, an independent copy
};

template <typename Scalar>
FrozenSplit<Scalar> split_frozen(const BasicModelWeights<Scalar>& w) {
  w.validate();
  if (w.num_layers() < 2)
    fail(ErrorKind::invalid_argument, "fine-tuning needs a model with at least 2 layers");
  return {{w.layers.begin(), w.layers.end() - 1}, w.layers.back()};
}

/// Output of the frozen layers (ReLU after each) for every row of `x`.
template <typename Scalar, typename Derived>
MatrixX<Scalar> frozen_features(std::span<const DenseLayer<Scalar>> frozen,
                                const Eigen::MatrixBase<Derived>& x) {
  MatrixX<Scalar> a = x.template cast<Scalar>();
  for (const auto& layer : frozen) {
    require(a.cols() == layer.in(), "frozen_features: dimension mismatch");
    MatrixX<Scalar> z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    a = z.cwiseMax(Scalar(0));
  }
  return a;
}

namespace detail {

template <typename Scalar>
Scalar sign(Scalar v) {
  return v > Scalar(0) ? Scalar(1) : (v < Scalar(0) ? Scalar(-1) : Scalar(0));
}

/// Soft TPR/FPR gap loss and its gradient with respect to the probabilities.
/// With `strict`, an empty (a, y) cell throws; otherwise the gap term that
/// needs the empty cell is dropped (used for mini-batches).
template <typename Scalar>
std::pair<Scalar, VectorX<Scalar>> soft_gap(const VectorX<Scalar>& prob,
                                            std::span<const int> labels,
                                            std::span<const int> attrs, bool strict) {
  require(static_cast<std::size_t>(prob.size()) == labels.size() && labels.size() == attrs.size(),
          "fairness_surrogate: length mismatch");
  // sums[a][y], counts[a][y]
  Scalar sums[2][2] = {{Scalar(0), Scalar(0)}, {Scalar(0), Scalar(0)}};
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums[attrs[i]][labels[i]] += prob(static_cast<Eigen::Index>(i));
    ++counts[attrs[i]][labels[i]];
  }
  if (strict) {
    for (int a : {0, 1})
      for (int y : {0, 1})
        if (counts[a][y] == 0)
          throw UnmeasurableError(a, y, "fairness surrogate: no samples with A=" +
                                            std::to_string(a) + ", Y=" + std::to_string(y));
  }

  Scalar value(0);
  Scalar slope[2] = {Scalar(0), Scalar(0)};  // d value / d (soft rate gap) for y = 0, 1
  for (int y : {0, 1}) {
    if (counts[0][y] == 0 || counts[1][y] == 0) continue;
    const Scalar gap = sums[1][y] / Scalar(counts[1][y]) - sums[0][y] / Scalar(counts[0][y]);
    using std::abs;
    value += abs(gap);
    slope[y] = sign(gap);
  }

  VectorX<Scalar> grad = VectorX<Scalar>::Zero(prob.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int a = attrs[i], y = labels[i];
    if (slope[y] == Scalar(0)) continue;
    const Scalar dir = a == 1 ? Scalar(1) : Scalar(-1);
    grad(static_cast<Eigen::Index>(i)) = slope[y] * dir / Scalar(counts[a][y]);
  }
  return {value, grad};
}

}  // namespace detail

/// |softTPR_1 - softTPR_0| + |softFPR_1 - softFPR_0|, where the soft rate of
/// cell (a, y) is the mean predicted probability over that cell.
template <typename Scalar>
Scalar fairness_surrogate(const VectorX<Scalar>& probabilities, std::span<const int> labels,
                          std::span<const int> attrs) {
  return detail::soft_gap(probabilities, labels, attrs, true).first;
}

/// Gradient of fairness_surrogate with respect to the probabilities
/// (subgradient 0 where a gap is exactly 0).
template <typename Scalar>
VectorX<Scalar> fairness_surrogate_gradient(const VectorX<Scalar>& probabilities,
                                            std::span<const int> labels,
                                            std::span<const int> attrs) {
  return detail::soft_gap(probabilities, labels, attrs, true).second;
}

/// alpha_ft * mean BCE + fairness surrogate for the last layer applied to
/// frozen features `hidden`, and its gradient with respect to that layer.
template <typename Scalar>
std::pair<Scalar, DenseLayer<Scalar>> composite_loss_and_gradient(
    const DenseLayer<Scalar>& last, const MatrixX<Scalar>& hidden, std::span<const int> labels,
    std::span<const int> attrs, Scalar alpha_ft, bool strict = true) {
  require(static_cast<std::size_t>(hidden.rows()) == labels.size() && !labels.empty(),
          "composite loss: batch/label size mismatch");
  MatrixX<Scalar> z = hidden * last.weight.transpose();
  z.rowwise() += last.bias.transpose();
  const VectorX<Scalar> logit = z.col(0);
  const VectorX<Scalar> prob = logit.unaryExpr([](Scalar v) { return sigmoid(v); });
  const auto [fair, dfair] = detail::soft_gap(prob, labels, attrs, strict);

  const Scalar inv_n = Scalar(1) / Scalar(logit.size());
  MatrixX<Scalar> dz(logit.size(), 1);
  for (Eigen::Index i = 0; i < logit.size(); ++i) {
    const Scalar p = prob(i);
    const Scalar y = Scalar(labels[static_cast<std::size_t>(i)]);
    dz(i, 0) = alpha_ft * (p - y) * inv_n + dfair(i) * p * (Scalar(1) - p);
  }
  DenseLayer<Scalar> grad{dz.transpose() * hidden, dz.colwise().sum().transpose()};
  return {alpha_ft * bce_from_logits(logit, labels) + fair, std::move(grad)};
}

/// Gradient descent on alpha_ft * BCE + fairness surrogate over the last
/// layer only; layers 1..L-1 are returned bit-identical.
template <typename Scalar>
BasicModelWeights<Scalar> finetune_last_layer(const BasicModelWeights<Scalar>& weights,
                                              const Dataset& train, const FtConfig& config) {
  auto split = split_frozen(weights);
  require(!train.empty(), "finetune_last_layer: empty training set");
  require(config.eta > 0.0, "finetune_last_layer: eta must be positive");
  require(config.alpha_ft >= 0.0, "finetune_last_layer: alpha_ft must be >= 0");
  if (train.has_empty_cell()) {
    const auto c = train.cell_counts();
    for (int y : {1, 0})
      for (int a : {1, 0})
        if (c[cell_index(y, a)] == 0)
          throw UnmeasurableError(a, y, "finetune: no training samples with A=" +
                                            std::to_string(a) + ", Y=" + std::to_string(y));
  }

  const MatrixX<Scalar> hidden =
      frozen_features(std::span<const DenseLayer<Scalar>>(split.frozen), train.features);
  const Scalar eta(config.eta), alpha(config.alpha_ft);
  auto& last = split.trainable;
  const auto n = train.size();
  const bool full_batch = config.batch_size == 0 || config.batch_size >= n;

  std::vector<std::size_t> order(n);
  MatrixX<Scalar> batch;
  std::vector<int> labels, attrs;
  for (std::size_t r = 0; r < config.rounds; ++r) {
    if (full_batch) {
      const auto [loss, g] = composite_loss_and_gradient(
          last, hidden, std::span<const int>(train.labels), std::span<const int>(train.sensitive),
          alpha);
      last.weight -= eta * g.weight;
      last.bias -= eta * g.bias;
      continue;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.rng_seed, {stream::finetune, r}));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const auto end = std::min(n, start + config.batch_size);
      batch.resize(static_cast<Eigen::Index>(end - start), hidden.cols());
      labels.resize(end - start);
      attrs.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.row(static_cast<Eigen::Index>(i - start)) = hidden.row(static_cast<Eigen::Index>(order[i]));
        labels[i - start] = train.labels[order[i]];
        attrs[i - start] = train.sensitive[order[i]];
      }
      const auto [loss, g] = composite_loss_and_gradient(
          last, batch, std::span<const int>(labels), std::span<const int>(attrs), alpha, false);
      last.weight -= eta * g.weight;
      last.bias -= eta * g.bias;
    }
  }

  BasicModelWeights<Scalar> out = weights;
  out.layers.back() = last;
  return out;
}

}  // namespace fairfl
