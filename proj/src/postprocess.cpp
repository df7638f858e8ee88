#include "fairfl/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fairfl/error.hpp"

namespace fairfl {

bool DerivedPredictor::valid() const {
  for (double v : {p00, p01, p10, p11})
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

JointStats JointStats::from_cells(const std::array<double, 8>& cells) {
  double sum = 0.0;
  for (double c : cells) {
    require(c >= 0.0 && std::isfinite(c), "JointStats: cells must be non-negative");
    sum += c;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "JointStats: cells must sum to 1");
  JointStats s;
  s.cells_ = cells;
  for (int a : {0, 1})
    for (int y : {0, 1})
      if (s.margin(a, y) <= 0.0)
        throw UnmeasurableError(a, y,
                                "no samples with A=" + std::to_string(a) + ", Y=" + std::to_string(y));
  return s;
}

JointStats estimate_joint(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const int> attrs) {
  require(predictions.size() == labels.size() && labels.size() == attrs.size(),
          "estimate_joint: length mismatch");
  require(!labels.empty(), "estimate_joint: empty input");
  std::array<std::size_t, 8> counts{};
  for (std::size_t i = 0; i < labels.size(); ++i)
    ++counts[JointStats::index(predictions[i], attrs[i], labels[i])];
  std::array<double, 8> cells{};
  const double n = static_cast<double>(labels.size());
  for (std::size_t c = 0; c < 8; ++c) cells[c] = static_cast<double>(counts[c]) / n;
  // Renormalize so the cells sum to 1 up to the last ulp.
  double sum = 0.0;
  for (double c : cells) sum += c;
  for (double& c : cells) c /= sum;
  return JointStats::from_cells(cells);
}

DerivedRates derived_rates(const DerivedPredictor& p, const JointStats& stats) {
  DerivedRates r;
  for (int a : {0, 1}) {
    const auto rate = [&](int y) {
      const double q = stats.positive_rate(a, y);
      return p.at(1, a) * q + p.at(0, a) * (1.0 - q);
    };
    r.tpr[static_cast<std::size_t>(a)] = rate(1);
    r.fpr[static_cast<std::size_t>(a)] = rate(0);
  }
  return r;
}

double expected_loss(const DerivedPredictor& p, const JointStats& stats) {
  const auto r = derived_rates(p, stats);
  double loss = 0.0;
  for (int a : {0, 1}) {
    const auto ai = static_cast<std::size_t>(a);
    loss += stats.margin(a, 1) * (1.0 - r.tpr[ai]) + stats.margin(a, 0) * r.fpr[ai];
  }
  return loss;
}

namespace {

// Coordinate of p_{yhat,a} in (p00, p01, p10, p11).
constexpr int coord(int yhat, int a) { return yhat * 2 + a; }

struct LinearProgram {
  Eigen::Vector4d cost;          // objective = cost . p + offset
  double offset = 0.0;
  Eigen::Matrix<double, 2, 4> A;  // rows: TPR gap, FPR gap; A p = 0
};

LinearProgram build_program(const JointStats& stats) {
  LinearProgram lp;
  lp.cost.setZero();
  lp.A.setZero();
  for (int a : {0, 1}) {
    const double sign = a == 1 ? 1.0 : -1.0;
    for (int y : {0, 1}) {
      const double q = stats.positive_rate(a, y);
      // Pr(Y_tilde = 1 | a, y) = q p_{1a} + (1 - q) p_{0a}
      const int row = y == 1 ? 0 : 1;
      lp.A(row, coord(1, a)) += sign * q;
      lp.A(row, coord(0, a)) += sign * (1.0 - q);
      // y = 1 contributes margin * (1 - rate), y = 0 contributes margin * rate.
      const double w = stats.margin(a, y) * (y == 1 ? -1.0 : 1.0);
      lp.cost(coord(1, a)) += w * q;
      lp.cost(coord(0, a)) += w * (1.0 - q);
      if (y == 1) lp.offset += stats.margin(a, y);
    }
  }
  return lp;
}

bool lexicographically_less(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  for (int i = 0; i < 4; ++i)
    if (a(i) != b(i)) return a(i) < b(i);
  return false;
}

}  // namespace

DerivedPredictor fit_derived_predictor(const JointStats& stats, double tolerance) {
  require(tolerance > 0.0, "fit_derived_predictor: tolerance must be positive");
  const auto lp = build_program(stats);
  constexpr double kBoxSlack = 1e-9;
  constexpr double kSingular = 1e-12;
  constexpr double kTie = 1e-12;

  std::vector<std::pair<double, Eigen::Vector4d>> vertices;
  auto consider = [&](Eigen::Vector4d p) {
    for (int i = 0; i < 4; ++i) {
      if (p(i) < -kBoxSlack || p(i) > 1.0 + kBoxSlack || !std::isfinite(p(i))) return;
      p(i) = std::clamp(p(i), 0.0, 1.0);
    }
    if ((lp.A * p).cwiseAbs().maxCoeff() > tolerance) return;
    vertices.emplace_back(lp.cost.dot(p) + lp.offset, p);
  };

  // Each coordinate: 0 -> pinned at 0, 1 -> pinned at 1, 2 -> free.
  for (int code = 0; code < 81; ++code) {
    std::array<int, 4> state{};
    int free_count = 0;
    for (int i = 0, c = code; i < 4; ++i, c /= 3) {
      state[static_cast<std::size_t>(i)] = c % 3;
      free_count += c % 3 == 2;
    }
    if (free_count > 2) continue;

    Eigen::Vector4d p = Eigen::Vector4d::Zero();
    std::array<int, 2> free{};
    int nf = 0;
    for (int i = 0; i < 4; ++i) {
      if (state[static_cast<std::size_t>(i)] == 2)
        free[static_cast<std::size_t>(nf++)] = i;
      else
        p(i) = state[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d rhs = -(lp.A * p);

    if (nf == 0) {
      consider(p);
    } else if (nf == 1) {
      const Eigen::Vector2d col = lp.A.col(free[0]);
      const double norm2 = col.squaredNorm();
      if (norm2 <= kSingular) continue;  // coordinate absent from the equalities
      p(free[0]) = col.dot(rhs) / norm2;
      consider(p);
    } else {
      Eigen::Matrix2d m;
      m << lp.A.col(free[0]), lp.A.col(free[1]);
      const double det = m.determinant();
      if (std::abs(det) <= kSingular) continue;  // endpoints are reached with one more pin
      const Eigen::Vector2d x = m.inverse() * rhs;
      p(free[0]) = x(0);
      p(free[1]) = x(1);
      consider(p);
    }
  }
  if (vertices.empty()) fail(ErrorKind::solver, "fit_derived_predictor: no feasible vertex found");

  double best_obj = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) best_obj = std::min(best_obj, v.first);
  const Eigen::Vector4d* best = nullptr;
  for (const auto& [obj, p] : vertices)
    if (obj <= best_obj + kTie && (best == nullptr || lexicographically_less(p, *best))) best = &p;
  return DerivedPredictor::from_vector(*best);
}

GroupRates expected_confusion(const DerivedPredictor& p, std::span<const int> predictions,
                              std::span<const int> labels, std::span<const int> attrs) {
  require(predictions.size() == labels.size() && labels.size() == attrs.size(),
          "expected_confusion: length mismatch");
  GroupRates r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = r.group.at(static_cast<std::size_t>(attrs[i]));
    const double pos = p.at(predictions[i], attrs[i]);
    if (labels[i] == 1) {
      c.tp += pos;
      c.fn += 1.0 - pos;
    } else {
      c.fp += pos;
      c.tn += 1.0 - pos;
    }
  }
  return r;
}

DerivedEvaluation evaluate_derived_exact(const DerivedPredictor& p,
                                         std::span<const int> predictions,
                                         std::span<const int> labels, std::span<const int> attrs) {
  estimate_joint(predictions, labels, attrs);  // validates every (a, y) cell
  DerivedEvaluation ev;
  ev.rates = expected_confusion(p, predictions, labels, attrs);
  ev.expected_accuracy = accuracy(ev.rates.pooled());
  return ev;
}

nlohmann::json to_json(const DerivedPredictor& p) {
  return {{"p00", p.p00}, {"p01", p.p01}, {"p10", p.p10}, {"p11", p.p11}};
}

DerivedPredictor derived_predictor_from_json(const nlohmann::json& j) {
  DerivedPredictor p{j.at("p00").get<double>(), j.at("p01").get<double>(),
                     j.at("p10").get<double>(), j.at("p11").get<double>()};
  require(p.valid(), "derived predictor probabilities must lie in [0, 1]");
  return p;
}

}  // namespace fairfl
