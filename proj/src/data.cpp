#include "fairfl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <random>

#include "csv.hpp"
#include "fairfl/error.hpp"
#include "fairfl/rng.hpp"

namespace fairfl {

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::adult: return "adult";
    case DataSource::compas: return "compas";
    case DataSource::synthetic: return "synthetic";
  }
  return "unknown";
}

Sample Dataset::sample(std::size_t i) const {
  return {features.row(static_cast<Eigen::Index>(i)).transpose(), labels.at(i), sensitive.at(i)};
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.sensitive.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    out.sensitive.push_back(sensitive[i]);
    out.ids.push_back(ids[i]);
  }
  out.feature_names = feature_names;
  out.source = source;
  return out;
}

CellCounts Dataset::cell_counts() const {
  CellCounts counts{};
  for (std::size_t i = 0; i < size(); ++i) ++counts[cell_index(labels[i], sensitive[i])];
  return counts;
}

bool Dataset::has_empty_cell() const {
  const auto c = cell_counts();
  return std::find(c.begin(), c.end(), std::size_t{0}) != c.end();
}

void Dataset::validate() const {
  const auto n = size();
  if (sensitive.size() != n || ids.size() != n || static_cast<std::size_t>(features.rows()) != n)
    fail(ErrorKind::dataset, "dataset columns have inconsistent lengths");
  if (!feature_names.empty() && feature_names.size() != dim())
    fail(ErrorKind::dataset, "feature_names does not match feature dimensionality");
  for (std::size_t i = 0; i < n; ++i) {
    if ((labels[i] != 0 && labels[i] != 1) || (sensitive[i] != 0 && sensitive[i] != 1))
      fail(ErrorKind::dataset, "label and sensitive attribute must be binary");
  }
  if (features.hasNaN()) fail(ErrorKind::dataset, "features contain NaN");
}

namespace {

enum class ColumnKind { continuous, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind;
};

double parse_number(const std::string& s, const std::string& column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    fail(ErrorKind::dataset, "column '" + column + "': not a number: '" + s + "'");
  return v;
}

/// One-hot encodes categorical columns (levels sorted) and standardizes
/// continuous ones to zero mean / unit population variance. A constant
/// continuous column is centred and left unscaled.
void encode(const std::vector<ColumnSpec>& specs,
            const std::vector<std::vector<std::string>>& cells, Dataset& out) {
  const auto n = cells.size();
  std::vector<std::vector<std::string>> levels(specs.size());
  std::size_t width = 0;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    if (specs[c].kind == ColumnKind::continuous) {
      ++width;
      continue;
    }
    std::vector<std::string> lv;
    for (const auto& row : cells) lv.push_back(row[c]);
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    width += lv.size();
    levels[c] = std::move(lv);
  }

  out.features = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  out.feature_names.clear();
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    if (specs[c].kind == ColumnKind::continuous) {
      for (std::size_t i = 0; i < n; ++i)
        out.features(static_cast<Eigen::Index>(i), col) = parse_number(cells[i][c], specs[c].name);
      auto column = out.features.col(col);
      const double mean = column.mean();
      column.array() -= mean;
      const double sd = std::sqrt(column.squaredNorm() / static_cast<double>(n));
      if (sd > 0.0) column /= sd;
      out.feature_names.push_back(specs[c].name);
      ++col;
    } else {
      const auto& lv = levels[c];
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(lv.begin(), lv.end(), cells[i][c]);
        out.features(static_cast<Eigen::Index>(i), col + (it - lv.begin())) = 1.0;
      }
      for (const auto& l : lv) out.feature_names.push_back(specs[c].name + "=" + l);
      col += static_cast<Eigen::Index>(lv.size());
    }
  }
}

std::vector<int> resolve_columns(const detail::CsvTable& table,
                                 const std::vector<std::string>& names,
                                 const std::filesystem::path& path) {
  std::vector<int> idx;
  for (const auto& name : names) {
    const int i = table.column(name);
    if (i < 0) fail(ErrorKind::dataset, path.string() + ": missing column '" + name + "'");
    idx.push_back(i);
  }
  return idx;
}

}  // namespace

const std::vector<std::string>& adult_columns() {
  static const std::vector<std::string> cols{
      "age",          "workclass",    "fnlwgt",         "education",      "education-num",
      "marital-status", "occupation", "relationship",   "race",           "sex",
      "capital-gain", "capital-loss", "hours-per-week", "native-country", "income"};
  return cols;
}

const std::vector<std::string>& compas_required_columns() {
  static const std::vector<std::string> cols{
      "age_cat",  "sex",       "priors_count", "c_charge_degree", "race",
      "two_year_recid", "days_b_screening_arrest", "is_recid", "score_text"};
  return cols;
}

Dataset load_adult(const std::filesystem::path& csv_path) {
  const auto table = detail::read_csv(csv_path);
  const auto& expected = adult_columns();
  for (const auto& h : table.header) {
    if (std::find(expected.begin(), expected.end(), h) == expected.end())
      fail(ErrorKind::dataset, csv_path.string() + ": unknown column '" + h + "'");
  }
  if (table.header != expected)
    fail(ErrorKind::dataset, csv_path.string() + ": header does not match the Adult schema");

  const int gain = table.column("capital-gain");
  const int sex = table.column("sex");
  const int income = table.column("income");

  std::vector<ColumnSpec> specs;
  for (const auto& name : expected) {
    if (name == "income") continue;
    const bool continuous = name == "age" || name == "fnlwgt" || name == "education-num" ||
                            name == "capital-gain" || name == "capital-loss" ||
                            name == "hours-per-week";
    specs.push_back({name, continuous ? ColumnKind::continuous : ColumnKind::categorical});
  }

  Dataset ds;
  ds.source = DataSource::adult;
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : table.rows) {
    const bool missing = std::any_of(row.begin(), row.end(),
                                     [](const std::string& f) { return f.empty() || f == "?"; });
    if (missing) continue;
    // 99999 is the census top-code sentinel for capital gain.
    if (parse_number(row[static_cast<std::size_t>(gain)], "capital-gain") == 99999.0) continue;

    std::string label = row[static_cast<std::size_t>(income)];
    if (!label.empty() && label.back() == '.') label.pop_back();
    if (label != ">50K" && label != "<=50K")
      fail(ErrorKind::dataset, "unexpected income value '" + label + "'");
    const auto& s = row[static_cast<std::size_t>(sex)];
    if (s != "Male" && s != "Female") fail(ErrorKind::dataset, "unexpected sex value '" + s + "'");

    ds.labels.push_back(label == ">50K" ? 1 : 0);
    ds.sensitive.push_back(s == "Male" ? 1 : 0);
    cells.emplace_back(row.begin(), row.end() - 1);
  }
  if (cells.empty()) fail(ErrorKind::dataset, csv_path.string() + ": zero rows after cleaning");

  encode(specs, cells, ds);
  ds.ids.resize(ds.labels.size());
  for (std::size_t i = 0; i < ds.ids.size(); ++i) ds.ids[i] = i;
  ds.validate();
  return ds;
}

Dataset load_compas(const std::filesystem::path& csv_path) {
  const auto table = detail::read_csv(csv_path);
  const auto idx = resolve_columns(table, compas_required_columns(), csv_path);
  const auto at = [&](const std::vector<std::string>& row, std::size_t k) -> const std::string& {
    return row[static_cast<std::size_t>(idx[k])];
  };
  enum { age_cat, sex, priors, degree, race, recid, days, is_recid, score };

  const std::vector<ColumnSpec> specs{{"age_cat", ColumnKind::categorical},
                                      {"sex", ColumnKind::categorical},
                                      {"priors_count", ColumnKind::continuous},
                                      {"c_charge_degree", ColumnKind::categorical},
                                      {"race", ColumnKind::categorical}};

  Dataset ds;
  ds.source = DataSource::compas;
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : table.rows) {
    const bool missing = at(row, age_cat).empty() || at(row, sex).empty() ||
                         at(row, priors).empty() || at(row, degree).empty() ||
                         at(row, race).empty() || at(row, recid).empty() ||
                         at(row, days).empty() || at(row, is_recid).empty() ||
                         at(row, score).empty() || at(row, score) == "N/A";
    if (missing) continue;
    // ProPublica screening filter.
    const double d = parse_number(at(row, days), "days_b_screening_arrest");
    if (d > 30 || d < -30) continue;
    if (at(row, is_recid) == "-1" || at(row, degree) == "O") continue;

    const auto& r = at(row, race);
    if (r != "Caucasian" && r != "African-American") continue;
    const auto& y = at(row, recid);
    if (y != "0" && y != "1") fail(ErrorKind::dataset, "unexpected two_year_recid '" + y + "'");

    ds.labels.push_back(y == "1" ? 1 : 0);
    ds.sensitive.push_back(r == "Caucasian" ? 1 : 0);
    cells.push_back({at(row, age_cat), at(row, sex), at(row, priors), at(row, degree), r});
  }
  if (cells.empty()) fail(ErrorKind::dataset, csv_path.string() + ": zero rows after cleaning");

  encode(specs, cells, ds);
  ds.ids.resize(ds.labels.size());
  for (std::size_t i = 0; i < ds.ids.size(); ++i) ds.ids[i] = i;
  ds.validate();
  return ds;
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t rng_seed) {
  require(spec.n >= 1, "synth_generate: n must be >= 1");
  require(spec.dim >= 1, "synth_generate: dim must be >= 1");
  double total = 0.0;
  for (double p : spec.group_rates) {
    require(p >= 0.0 && std::isfinite(p), "synth_generate: cell probabilities must be >= 0");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, "synth_generate: cell probabilities must sum to 1");

  Rng rng(derive_seed(rng_seed, {stream::data}));
  std::discrete_distribution<int> cell(spec.group_rates.begin(), spec.group_rates.end());
  std::normal_distribution<double> noise(0.0, 1.0);

  Dataset ds;
  ds.source = DataSource::synthetic;
  ds.features.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.dim));
  ds.labels.resize(spec.n);
  ds.sensitive.resize(spec.n);
  ds.ids.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int c = cell(rng);
    const int y = c < 2 ? 1 : 0;
    const int a = c % 2 == 0 ? 1 : 0;
    ds.labels[i] = y;
    ds.sensitive[i] = a;
    ds.ids[i] = i;
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      double mean = 0.0;
      if (j == 0) mean = spec.separation * (y - 0.5);
      if (j == 1) mean = spec.separation * (a - 0.5);
      ds.features(row, j) = mean + noise(rng);
    }
  }
  for (std::size_t j = 0; j < spec.dim; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  return ds;
}

}  // namespace fairfl
