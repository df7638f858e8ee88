#pragma once

#include <array>
#include <random>
#include <span>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fairfl/metrics.hpp"

namespace fairfl {

/// Empirical joint distribution of (Y_hat, A, Y) on a client's data.
class JointStats {
 public:
  /// Pr(Y_hat = yhat, A = a, Y = y).
  double pr(int yhat, int a, int y) const { return cells_[index(yhat, a, y)]; }

  /// Pr(A = a, Y = y).
  double margin(int a, int y) const { return pr(0, a, y) + pr(1, a, y); }

  /// Pr(Y_hat = 1 | A = a, Y = y). Requires margin(a, y) > 0.
  double positive_rate(int a, int y) const { return pr(1, a, y) / margin(a, y); }

  /// Builds from raw cell probabilities; throws if any is negative, they do
  /// not sum to 1 within 1e-12 or an (a, y) margin is zero.
  static JointStats from_cells(const std::array<double, 8>& cells);

  static constexpr std::size_t index(int yhat, int a, int y) {
    return static_cast<std::size_t>(yhat * 4 + a * 2 + y);
  }

 private:
  std::array<double, 8> cells_{};
};

/// p_{ya} = Pr(Y_tilde = 1 | Y_hat = y, A = a). Member pYA names the
/// prediction first and the group second.
struct DerivedPredictor {
  double p00 = 0, p01 = 0, p10 = 1, p11 = 1;

  static DerivedPredictor identity() { return {0, 0, 1, 1}; }

  double at(int yhat, int a) const {
    return yhat == 0 ? (a == 0 ? p00 : p01) : (a == 0 ? p10 : p11);
  }

  /// (p00, p01, p10, p11)
  Eigen::Vector4d as_vector() const { return {p00, p01, p10, p11}; }
  static DerivedPredictor from_vector(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }

  bool valid() const;
  bool operator==(const DerivedPredictor&) const = default;
};

/// Per-group rates of the randomized predictor Y_tilde.
struct DerivedRates {
  std::array<double, 2> tpr{};
  std::array<double, 2> fpr{};

  double tpr_gap() const { return tpr[1] - tpr[0]; }
  double fpr_gap() const { return fpr[1] - fpr[0]; }
};

JointStats estimate_joint(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const int> attrs);

/// Pr(Y_tilde = 1 | A = a, Y = y) = p_{1a} Pr(Y_hat = 1 | a, y) + p_{0a} Pr(Y_hat = 0 | a, y).
DerivedRates derived_rates(const DerivedPredictor& p, const JointStats& stats);

/// Expected 0/1 loss Pr(Y_tilde != Y) under `stats`.
double expected_loss(const DerivedPredictor& p, const JointStats& stats);

/// Minimizes expected_loss over p in [0,1]^4 subject to equal derived TPRs
/// and equal derived FPRs across groups.
///
/// The feasible set is a polytope in R^4 cut by two equalities, so the
/// optimum is attained at a vertex. Vertices are enumerated directly: every
/// coordinate is pinned to 0, 1 or left free (at most two free), the
/// equalities are solved for the free coordinates, and points inside the box
/// whose TPR and FPR gaps are within `tolerance` are kept. Ties within 1e-12
/// go to the lexicographically smallest (p00, p01, p10, p11).
DerivedPredictor fit_derived_predictor(const JointStats& stats, double tolerance = 1e-9);

/// Returns 1 with probability p_{yhat, a}.
template <typename URBG>
int apply_derived(const DerivedPredictor& p, int yhat, int a, URBG& rng) {
  std::bernoulli_distribution flip(p.at(yhat, a));
  return flip(rng) ? 1 : 0;
}

/// Expected confusion counts of Y_tilde on (predictions, labels, attrs).
/// Never throws on empty cells.
GroupRates expected_confusion(const DerivedPredictor& p, std::span<const int> predictions,
                              std::span<const int> labels, std::span<const int> attrs);

struct DerivedEvaluation {
  GroupRates rates;  // expected counts
  double expected_accuracy = 0;
};

/// Analytic evaluation of the derived predictor on an evaluation set; no
/// sampling. Throws UnmeasurableError when an (a, y) cell is empty.
DerivedEvaluation evaluate_derived_exact(const DerivedPredictor& p,
                                         std::span<const int> predictions,
                                         std::span<const int> labels, std::span<const int> attrs);

nlohmann::json to_json(const DerivedPredictor& p);
DerivedPredictor derived_predictor_from_json(const nlohmann::json& j);

}  // namespace fairfl
