#pragma once

#include "pite/core.hpp"
#include "pite/dataset.hpp"
#include "pite/errors.hpp"

#include <string>

namespace pite {

/// Relative tolerance on |R_jj| / ||a_j|| below which a design column is
/// treated as lying in the span of the columns before it.
inline constexpr double kRankTolerance = 1e-10;

/// Least-squares solve of design * beta ~= y through a Householder QR of the
/// design. Throws RankDeficient when the design does not have full column
/// rank.
template <typename DerivedA, typename DerivedY>
Vector<typename DerivedA::Scalar> least_squares(const Eigen::MatrixBase<DerivedA>& design,
                                                const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedA::Scalar;
  const Index rows = design.rows();
  const Index cols = design.cols();
  if (y.size() != rows) throw DimensionMismatch("least_squares: response length != design rows");
  if (rows < cols) {
    throw RankDeficient("design has " + std::to_string(cols) + " columns but only " +
                        std::to_string(rows) + " rows");
  }
  Eigen::HouseholderQR<Matrix<Scalar>> qr(design);
  const auto& packed = qr.matrixQR();
  for (Index j = 0; j < cols; ++j) {
    const Scalar column_norm = design.col(j).norm();
    if (!(std::abs(packed(j, j)) > Scalar(kRankTolerance) * column_norm)) {
      throw RankDeficient("design column " + std::to_string(j) +
                          " is (numerically) a combination of earlier columns");
    }
  }
  return qr.solve(y.derived());
}

/// OLS fit on one arm: coefficients ordered (intercept, covariates...).
struct LinearModel {
  VectorXd coefficients;

  Index n_features() const { return coefficients.size() - 1; }
};

LinearModel fit_linear(const Dataset& d, const ArmView& arm);

/// yhat_i = [1, X_i] . beta for every row of `covariates`, accumulated left to
/// right so a trailing zero coefficient leaves the result bit-identical.
VectorXd predict_linear(const LinearModel& model, const MatrixXd& covariates);
VectorXd predict_linear(const LinearModel& model, const Dataset& d);

/// Classical (homoskedastic) OLS inference.
struct OlsFit {
  VectorXd coefficients;
  VectorXd standard_errors;
  VectorXd t_statistics;
  VectorXd p_values;  // two-sided Student t
  double residual_variance = 0.0;
  Index degrees_of_freedom = 0;
};

OlsFit ols_with_inference(const MatrixXd& design, const VectorXd& y);

}  // namespace pite
