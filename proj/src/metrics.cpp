#include "fairfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairfl/error.hpp"

namespace fairfl {

namespace {

[[noreturn]] void unmeasurable(int group, int label) {
  throw UnmeasurableError(group, label,
                          "rate undefined: no samples with A=" + std::to_string(group) +
                              ", Y=" + std::to_string(label));
}

void check_lengths(std::size_t a, std::size_t b) {
  require(a == b, "metric inputs have different lengths");
  require(a >= 1, "metric inputs are empty");
}

}  // namespace

double GroupRates::tpr(int a) const {
  const auto& c = group.at(static_cast<std::size_t>(a));
  if (c.positives() <= 0) unmeasurable(a, 1);
  return c.tp / c.positives();
}

double GroupRates::fpr(int a) const {
  const auto& c = group.at(static_cast<std::size_t>(a));
  if (c.negatives() <= 0) unmeasurable(a, 0);
  return c.fp / c.negatives();
}

bool GroupRates::measurable() const {
  return std::all_of(group.begin(), group.end(),
                     [](const Confusion& c) { return c.positives() > 0 && c.negatives() > 0; });
}

Confusion GroupRates::pooled() const {
  return {group[0].tp + group[1].tp, group[0].fp + group[1].fp, group[0].tn + group[1].tn,
          group[0].fn + group[1].fn};
}

GroupRates count_by_group(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const int> attrs) {
  check_lengths(predictions.size(), labels.size());
  check_lengths(labels.size(), attrs.size());
  GroupRates r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = r.group.at(static_cast<std::size_t>(attrs[i]));
    const bool yhat = predictions[i] == 1;
    if (labels[i] == 1) {
      (yhat ? c.tp : c.fn) += 1;
    } else {
      (yhat ? c.fp : c.tn) += 1;
    }
  }
  return r;
}

GroupRates confusion_by_group(std::span<const int> predictions, std::span<const int> labels,
                              std::span<const int> attrs) {
  auto r = count_by_group(predictions, labels, attrs);
  for (int a : {0, 1}) {
    const auto& c = r.group[static_cast<std::size_t>(a)];
    if (c.positives() <= 0) unmeasurable(a, 1);
    if (c.negatives() <= 0) unmeasurable(a, 0);
  }
  return r;
}

double eod(const GroupRates& rates) {
  return std::max(std::abs(rates.tpr(1) - rates.tpr(0)), std::abs(rates.fpr(1) - rates.fpr(0)));
}

double accuracy(const Confusion& c) {
  require(c.total() > 0, "accuracy: empty input");
  return (c.tp + c.tn) / c.total();
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double balanced_accuracy(const Confusion& c) {
  if (c.positives() <= 0) throw UnmeasurableError(-1, 1, "balanced accuracy: no positive labels");
  if (c.negatives() <= 0) throw UnmeasurableError(-1, 0, "balanced accuracy: no negative labels");
  return 0.5 * (c.tp / c.positives() + c.tn / c.negatives());
}

double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size());
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool yhat = predictions[i] == 1;
    if (labels[i] == 1) {
      (yhat ? c.tp : c.fn) += 1;
    } else {
      (yhat ? c.fp : c.tn) += 1;
    }
  }
  return balanced_accuracy(c);
}

double weighted_average(std::span<const double> values, std::span<const std::size_t> sizes) {
  require(values.size() == sizes.size(), "weighted_average: length mismatch");
  require(!values.empty(), "weighted_average: empty input");
  double num = 0.0;
  std::size_t den = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    require(sizes[k] >= 1, "weighted_average: sizes must be >= 1");
    num += static_cast<double>(sizes[k]) * values[k];
    den += sizes[k];
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return std::clamp(num / static_cast<double>(den), *lo, *hi);
}

}  // namespace fairfl
