#include "pite/dataset.hpp"

#include "pite/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

namespace pite {

namespace {

constexpr Index kMinArmSize = 2;

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "." ||
         s == "N/A";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_real(std::string_view text, std::size_t row, const std::string& column) {
  text = trim(text);
  if (is_missing_token(text)) throw MissingValue(row, column);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidValue(row, column, "not a number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) throw InvalidValue(row, column, "not finite");
  return value;
}

}  // namespace

Dataset::Dataset(VectorXd outcome, VectorXi treatment, MatrixXd covariates,
                 std::vector<std::string> covariate_names,
                 std::vector<CovariateKind> covariate_kinds) {
  const Index n = outcome.size();
  if (treatment.size() != n || covariates.rows() != n) {
    throw DimensionMismatch("outcome, treatment and covariate row counts differ");
  }
  const Index p = covariates.cols();
  if (p == 0) throw EmptyCovariates();
  if (static_cast<Index>(covariate_names.size()) != p ||
      static_cast<Index>(covariate_kinds.size()) != p) {
    throw DimensionMismatch("covariate names/kinds do not match the covariate column count");
  }
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(outcome(i))) throw MissingValue(static_cast<std::size_t>(i), "outcome");
  }
  for (Index j = 0; j < p; ++j) {
    const bool binary = covariate_kinds[static_cast<std::size_t>(j)] == CovariateKind::binary;
    for (Index i = 0; i < n; ++i) {
      const double x = covariates(i, j);
      if (!std::isfinite(x)) {
        throw MissingValue(static_cast<std::size_t>(i), covariate_names[static_cast<std::size_t>(j)]);
      }
      if (binary && x != 0.0 && x != 1.0) {
        throw NonBinaryCovariate(static_cast<std::size_t>(i),
                                 covariate_names[static_cast<std::size_t>(j)]);
      }
    }
  }

  outcome_ = std::make_shared<const VectorXd>(std::move(outcome));
  treatment_ = std::move(treatment);
  covariates_ = std::make_shared<const MatrixXd>(std::move(covariates));
  meta_ = std::make_shared<const Columns>(
      Columns{std::move(covariate_names), std::move(covariate_kinds)});
  check_treatment();
}

void Dataset::check_treatment() {
  n_treated_ = 0;
  for (Index i = 0; i < treatment_.size(); ++i) {
    const int t = treatment_(i);
    if (t != 0 && t != 1) throw NonBinaryTreatment(static_cast<std::size_t>(i));
    n_treated_ += t;
  }
  if (n_treated_ < kMinArmSize || n() - n_treated_ < kMinArmSize) {
    throw DegenerateArm("each arm needs at least 2 members (treated " +
                        std::to_string(n_treated_) + ", control " +
                        std::to_string(n() - n_treated_) + ")");
  }
}

Dataset Dataset::with_treatment(VectorXi treatment) const {
  if (treatment.size() != n()) throw DimensionMismatch("treatment vector length differs from n");
  Dataset out;
  out.outcome_ = outcome_;
  out.covariates_ = covariates_;
  out.meta_ = meta_;
  out.treatment_ = std::move(treatment);
  out.check_treatment();
  return out;
}

Dataset validate(const Table& raw, const Schema& schema) {
  const auto column_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(raw.header.begin(), raw.header.end(), name);
    if (it == raw.header.end()) throw ConfigError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - raw.header.begin());
  };

  if (schema.outcome.empty() || schema.treatment.empty()) {
    throw ConfigError("schema must name an outcome and a treatment column");
  }
  const std::size_t outcome_col = column_index(schema.outcome);
  const std::size_t treatment_col = column_index(schema.treatment);
  if (outcome_col == treatment_col) throw ConfigError("outcome and treatment are the same column");

  std::vector<std::size_t> cov_cols;
  if (schema.covariates.empty()) {
    for (std::size_t j = 0; j < raw.header.size(); ++j) {
      if (j != outcome_col && j != treatment_col) cov_cols.push_back(j);
    }
  } else {
    std::set<std::size_t> seen;
    for (const auto& name : schema.covariates) {
      const std::size_t j = column_index(name);
      if (j == outcome_col || j == treatment_col) {
        throw ConfigError("column '" + name + "' cannot be both a covariate and outcome/treatment");
      }
      if (!seen.insert(j).second) throw ConfigError("covariate '" + name + "' listed twice");
      cov_cols.push_back(j);
    }
  }
  if (cov_cols.empty()) throw EmptyCovariates();
  for (const auto& [name, kind] : schema.kind_overrides) {
    (void)kind;
    const std::size_t j = column_index(name);
    if (std::find(cov_cols.begin(), cov_cols.end(), j) == cov_cols.end()) {
      throw ConfigError("kind override for '" + name + "', which is not a covariate");
    }
  }

  const Index n = static_cast<Index>(raw.rows.size());
  const Index p = static_cast<Index>(cov_cols.size());
  VectorXd y(n);
  VectorXi t(n);
  MatrixXd x(n, p);

  for (Index i = 0; i < n; ++i) {
    const auto& row = raw.rows[static_cast<std::size_t>(i)];
    const auto r = static_cast<std::size_t>(i);
    if (row.size() != raw.header.size()) {
      throw InvalidValue(r, "*", "row has " + std::to_string(row.size()) + " fields, header has " +
                                     std::to_string(raw.header.size()));
    }
    y(i) = parse_real(row[outcome_col], r, schema.outcome);

    std::string_view tv = trim(row[treatment_col]);
    if (is_missing_token(tv)) throw MissingValue(r, schema.treatment);
    int label = -1;
    const auto [ptr, ec] = std::from_chars(tv.data(), tv.data() + tv.size(), label);
    if (ec != std::errc() || ptr != tv.data() + tv.size() || (label != 0 && label != 1)) {
      throw NonBinaryTreatment(r);
    }
    t(i) = label;

    for (Index j = 0; j < p; ++j) {
      const std::size_t c = cov_cols[static_cast<std::size_t>(j)];
      x(i, j) = parse_real(row[c], r, raw.header[c]);
    }
  }

  std::vector<std::string> names;
  std::vector<CovariateKind> kinds;
  for (Index j = 0; j < p; ++j) {
    const std::string& name = raw.header[cov_cols[static_cast<std::size_t>(j)]];
    names.push_back(name);
    if (const auto it = schema.kind_overrides.find(name); it != schema.kind_overrides.end()) {
      kinds.push_back(it->second);
    } else {
      const bool binary = (x.col(j).array() == 0.0 || x.col(j).array() == 1.0).all();
      kinds.push_back(binary ? CovariateKind::binary : CovariateKind::continuous);
    }
  }
  return Dataset(std::move(y), std::move(t), std::move(x), std::move(names), std::move(kinds));
}

ArmSplit split_arms(const Dataset& d) {
  ArmSplit split;
  split.treated.arm = Arm::treatment;
  split.control.arm = Arm::control;
  split.treated.indices.reserve(static_cast<std::size_t>(d.n_treated()));
  split.control.indices.reserve(static_cast<std::size_t>(d.n_control()));
  const VectorXi& t = d.treatment();
  for (Index i = 0; i < d.n(); ++i) {
    (t(i) == 1 ? split.treated : split.control).indices.push_back(i);
  }
  return split;
}

Dataset permute_treatment(const Dataset& d, Engine& engine) {
  VectorXi labels = d.treatment();
  std::shuffle(labels.data(), labels.data() + labels.size(), engine);
  return d.with_treatment(std::move(labels));
}

Dataset permute_treatment(const Dataset& d, const RandomStream& stream) {
  Engine engine = stream.engine();
  return permute_treatment(d, engine);
}

MatrixXd augmented_design(const Dataset& d, const ArmView& arm) {
  const MatrixXd& x = d.covariates();
  MatrixXd design(arm.size(), d.p() + 1);
  design.col(0).setOnes();
  design.rightCols(d.p()) = x(arm.indices, Eigen::all);
  return design;
}

MatrixXd augmented_design(const MatrixXd& covariates) {
  MatrixXd design(covariates.rows(), covariates.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(covariates.cols()) = covariates;
  return design;
}

const char* to_string(CovariateKind kind) {
  return kind == CovariateKind::binary ? "binary" : "continuous";
}

std::optional<CovariateKind> covariate_kind_from_string(const std::string& s) {
  if (s == "binary") return CovariateKind::binary;
  if (s == "continuous") return CovariateKind::continuous;
  return std::nullopt;
}

}  // namespace pite
