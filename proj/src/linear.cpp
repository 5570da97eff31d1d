#include "pite/linear.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>

namespace pite {

LinearModel fit_linear(const Dataset& d, const ArmView& arm) {
  const MatrixXd design = augmented_design(d, arm);
  const VectorXd y = d.outcome()(arm.indices);
  LinearModel model{least_squares(design, y)};
  if (!model.coefficients.allFinite()) throw RankDeficient("non-finite OLS coefficients");
  return model;
}

VectorXd predict_linear(const LinearModel& model, const MatrixXd& covariates) {
  const Index p = model.n_features();
  if (covariates.cols() != p) {
    throw DimensionMismatch("model has " + std::to_string(p) + " covariates, data has " +
                            std::to_string(covariates.cols()));
  }
  const VectorXd& beta = model.coefficients;
  VectorXd out = VectorXd::Constant(covariates.rows(), beta(0));
  // Column-major sweep keeps the per-row accumulation order fixed (j = 0..p-1).
  for (Index j = 0; j < p; ++j) {
    const double b = beta(j + 1);
    const auto col = covariates.col(j);
    for (Index i = 0; i < covariates.rows(); ++i) out(i) += b * col(i);
  }
  return out;
}

VectorXd predict_linear(const LinearModel& model, const Dataset& d) {
  return predict_linear(model, d.covariates());
}

OlsFit ols_with_inference(const MatrixXd& design, const VectorXd& y) {
  OlsFit fit;
  fit.coefficients = least_squares(design, y);
  const Index n = design.rows();
  const Index k = design.cols();
  fit.degrees_of_freedom = n - k;
  if (fit.degrees_of_freedom < 1) {
    throw RankDeficient("no residual degrees of freedom for inference");
  }
  const VectorXd residuals = y - design * fit.coefficients;
  fit.residual_variance = residuals.squaredNorm() / static_cast<double>(fit.degrees_of_freedom);

  // Cov(beta) = s^2 (X'X)^{-1} = s^2 R^{-1} R^{-T}
  Eigen::HouseholderQR<MatrixXd> qr(design);
  const MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));
  const VectorXd diag = r_inv.rowwise().squaredNorm();

  boost::math::students_t dist(static_cast<double>(fit.degrees_of_freedom));
  fit.standard_errors.resize(k);
  fit.t_statistics.resize(k);
  fit.p_values.resize(k);
  for (Index j = 0; j < k; ++j) {
    fit.standard_errors(j) = std::sqrt(fit.residual_variance * diag(j));
    if (fit.standard_errors(j) > 0.0) {
      fit.t_statistics(j) = fit.coefficients(j) / fit.standard_errors(j);
      fit.p_values(j) = 2.0 * boost::math::cdf(boost::math::complement(
                                  dist, std::abs(fit.t_statistics(j))));
    } else {
      // Perfect fit: any nonzero coefficient is infinitely significant.
      fit.t_statistics(j) = fit.coefficients(j) == 0.0
                                ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(),
                                                fit.coefficients(j));
      fit.p_values(j) = fit.coefficients(j) == 0.0 ? 1.0 : 0.0;
    }
  }
  return fit;
}

}  // namespace pite
