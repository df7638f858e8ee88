#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace fairfl {

/// Confusion counts of one sensitive group. Counts are doubles so that the
/// same type carries expected counts of a randomized predictor; for hard
/// predictions they are exact integers.
struct Confusion {
  double tp = 0, fp = 0, tn = 0, fn = 0;

  double positives() const { return tp + fn; }
  double negatives() const { return fp + tn; }
  double total() const { return tp + fp + tn + fn; }
};

struct GroupRates {
  std::array<Confusion, 2> group;  // indexed by sensitive attribute a

  /// Throw UnmeasurableError when the group has no positives / negatives.
  double tpr(int a) const;
  double fpr(int a) const;

  bool measurable() const;
  double total() const { return group[0].total() + group[1].total(); }
  Confusion pooled() const;
};

/// Counts only; never throws on empty cells.
GroupRates count_by_group(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const int> attrs);

/// As count_by_group, but throws UnmeasurableError naming the first empty
/// (group, label) cell.
GroupRates confusion_by_group(std::span<const int> predictions, std::span<const int> labels,
                              std::span<const int> attrs);

/// max(|TPR_1 - TPR_0|, |FPR_1 - FPR_0|)
double eod(const GroupRates& rates);

double accuracy(std::span<const int> predictions, std::span<const int> labels);
double accuracy(const Confusion& c);

/// (TPR + TNR) / 2; throws UnmeasurableError when one class is absent.
double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels);
double balanced_accuracy(const Confusion& c);

/// sum_k n_k x_k / sum_k n_k
double weighted_average(std::span<const double> values, std::span<const std::size_t> sizes);

}  // namespace fairfl
