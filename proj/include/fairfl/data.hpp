#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fairfl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class DataSource { adult, compas, synthetic };

std::string to_string(DataSource source);

struct Sample {
  Vector features;
  int label = 0;
  int sensitive = 0;
};

/// Index of a (Y, A) cell in the order (1,1), (1,0), (0,1), (0,0).
constexpr std::size_t cell_index(int label, int sensitive) {
  return static_cast<std::size_t>((1 - label) * 2 + (1 - sensitive));
}

using CellCounts = std::array<std::size_t, 4>;

/// Row i of `features` is sample i. `ids` carries the row's index in the
/// dataset it was originally loaded or generated as, so shards and splits
/// keep sample identity.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> sensitive;
  std::vector<std::size_t> ids;
  std::vector<std::string> feature_names;
  DataSource source = DataSource::synthetic;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool empty() const { return labels.empty(); }

  Sample sample(std::size_t i) const;

  /// Rows `rows` (in the given order) as a new dataset.
  Dataset subset(const std::vector<std::size_t>& rows) const;

  CellCounts cell_counts() const;
  bool has_empty_cell() const;

  /// Throws if labels/attributes are not binary, sizes disagree or any
  /// feature is NaN.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Column layout of the Adult CSV header (UCI names).
const std::vector<std::string>& adult_columns();
/// Columns of the ProPublica two-year file that the loader requires.
const std::vector<std::string>& compas_required_columns();

Dataset load_adult(const std::filesystem::path& csv_path);
Dataset load_compas(const std::filesystem::path& csv_path);

struct SynthSpec {
  std::size_t n = 1000;
  std::size_t dim = 2;
  /// Probabilities of the (Y,A) cells in cell_index order.
  std::array<double, 4> group_rates{0.25, 0.25, 0.25, 0.25};
  double separation = 2.0;
};

/// Draws n samples. (Y,A) is categorical over `group_rates`; features are
/// N(mu(y,a), I) with mu_0 = separation * (y - 1/2), mu_1 = separation *
/// (a - 1/2) when dim >= 2, and zero mean on the remaining coordinates.
Dataset synth_generate(const SynthSpec& spec, std::uint64_t rng_seed);

}  // namespace fairfl
