#pragma once

#include "pite/core.hpp"
#include "pite/random.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pite {

enum class CovariateKind { continuous, binary };
enum class Arm { treatment, control };

/// Sorted, distinct row indices of one trial arm.
struct ArmView {
  std::vector<Index> indices;
  Arm arm = Arm::treatment;

  Index size() const { return static_cast<Index>(indices.size()); }
};

struct ArmSplit {
  ArmView treated;
  ArmView control;
};

/// Randomized-trial data: outcome Y, treatment T in {0,1}, covariate matrix X
/// (one row per individual). Immutable once built. Outcome, covariates and
/// column metadata live behind shared pointers, so datasets that differ only
/// in treatment labels share them.
class Dataset {
 public:
  /// Validates every invariant and throws a DataError subclass on violation.
  Dataset(VectorXd outcome, VectorXi treatment, MatrixXd covariates,
          std::vector<std::string> covariate_names, std::vector<CovariateKind> covariate_kinds);

  Index n() const { return outcome_->size(); }
  Index p() const { return covariates_->cols(); }
  Index n_treated() const { return n_treated_; }
  Index n_control() const { return n() - n_treated_; }

  const VectorXd& outcome() const { return *outcome_; }
  const VectorXi& treatment() const { return treatment_; }
  const MatrixXd& covariates() const { return *covariates_; }
  const std::vector<std::string>& covariate_names() const { return meta_->names; }
  const std::vector<CovariateKind>& covariate_kinds() const { return meta_->kinds; }

  /// Same outcome and covariates, new labels (validated).
  Dataset with_treatment(VectorXi treatment) const;

  /// True when outcome and covariate storage is physically shared.
  bool shares_data_with(const Dataset& other) const {
    return outcome_ == other.outcome_ && covariates_ == other.covariates_;
  }

 private:
  struct Columns {
    std::vector<std::string> names;
    std::vector<CovariateKind> kinds;
  };

  Dataset() = default;
  void check_treatment();

  std::shared_ptr<const VectorXd> outcome_;
  VectorXi treatment_;
  std::shared_ptr<const MatrixXd> covariates_;
  std::shared_ptr<const Columns> meta_;
  Index n_treated_ = 0;
};

/// Raw text table as read from a CSV file.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Column roles for ingestion. Empty `covariates` selects every column that is
/// neither outcome nor treatment. Kinds are inferred from values unless
/// overridden here.
struct Schema {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> covariates;
  std::map<std::string, CovariateKind> kind_overrides;
};

Dataset validate(const Table& raw, const Schema& schema);

ArmSplit split_arms(const Dataset& d);

/// Uniformly random permutation of the treatment labels; arm sizes are
/// preserved and `d` is not modified.
Dataset permute_treatment(const Dataset& d, Engine& engine);
Dataset permute_treatment(const Dataset& d, const RandomStream& stream);

/// Gathers the rows of `arm` into a dense design matrix [1, X].
MatrixXd augmented_design(const Dataset& d, const ArmView& arm);
MatrixXd augmented_design(const MatrixXd& covariates);

const char* to_string(CovariateKind kind);
std::optional<CovariateKind> covariate_kind_from_string(const std::string& s);

}  // namespace pite
