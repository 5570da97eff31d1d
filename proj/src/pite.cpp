#include "pite/pite.hpp"

#include "pite/linear.hpp"

namespace pite {

VectorXd predict_pite(const Dataset& d, const PredictorSpec& spec, const RandomStream& stream,
                      unsigned threads) {
  const ArmSplit arms = split_arms(d);
  const FittedPredictor treated = fit_predictor(d, arms.treated, spec, stream.substream(0), threads);
  const FittedPredictor control = fit_predictor(d, arms.control, spec, stream.substream(1), threads);
  return treated.predict(d) - control.predict(d);
}

PiteResult estimate_pite(const Dataset& d, const PredictorSpec& spec, const RandomStream& stream,
                         unsigned threads) {
  spec.validate();
  PiteResult result;
  result.predictor = spec;
  result.pite = predict_pite(d, spec, stream, threads);
  result.sd = sd_of_pite(result.pite);
  result.mean = result.pite.mean();
  result.effect_size = pite_effect_size(result.pite, d);
  result.raw_ate = raw_ate(d);
  return result;
}

double pooled_outcome_sd(const Dataset& d) {
  const ArmSplit arms = split_arms(d);
  const VectorXd y_t = d.outcome()(arms.treated.indices);
  const VectorXd y_c = d.outcome()(arms.control.indices);
  const double n_t = static_cast<double>(y_t.size());
  const double n_c = static_cast<double>(y_c.size());
  const double pooled =
      ((n_t - 1.0) * sample_variance(y_t) + (n_c - 1.0) * sample_variance(y_c)) /
      (n_t + n_c - 1.0);
  return std::sqrt(pooled);
}

double pite_effect_size(const Eigen::Ref<const VectorXd>& pite, const Dataset& d) {
  if (pite.size() != d.n()) throw DimensionMismatch("PITE vector length differs from n");
  const double denominator = pooled_outcome_sd(d);
  if (!(denominator > 0.0)) throw ZeroPooledSD();
  return pite.cwiseAbs().mean() / denominator;
}

double raw_ate(const Dataset& d) {
  const ArmSplit arms = split_arms(d);
  return d.outcome()(arms.treated.indices).mean() - d.outcome()(arms.control.indices).mean();
}

ScreeningResult screen_interactions(const Dataset& d, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const Index n = d.n();
  const Index p = d.p();
  const MatrixXd& x = d.covariates();
  const VectorXd t = d.treatment().cast<double>();

  MatrixXd design(n, 2 * p + 2);
  design.col(0).setOnes();
  design.middleCols(1, p) = x;
  design.col(p + 1) = t;
  design.rightCols(p) = x.array().colwise() * t.array();

  const OlsFit fit = ols_with_inference(design, d.outcome());

  ScreeningResult result;
  result.alpha = alpha;
  for (Index j = 0; j < p; ++j) {
    const Index k = p + 2 + j;
    InteractionTerm term;
    term.covariate = j;
    term.name = d.covariate_names()[static_cast<std::size_t>(j)];
    term.estimate = fit.coefficients(k);
    term.std_error = fit.standard_errors(k);
    term.t_statistic = fit.t_statistics(k);
    term.p_value = fit.p_values(k);
    term.selected = term.p_value < alpha;
    if (term.selected) result.selected.push_back(j);
    result.terms.push_back(std::move(term));
  }
  return result;
}

}  // namespace pite
