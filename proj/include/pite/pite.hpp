#pragma once

#include "pite/core.hpp"
#include "pite/dataset.hpp"
#include "pite/errors.hpp"
#include "pite/predictor.hpp"
#include "pite/random.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pite {

/// Sample variance with the n - 1 denominator (two-pass).
template <typename Derived>
typename Derived::Scalar sample_variance(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Index n = v.size();
  if (n < 2) throw TooFewValues("need at least 2 values, got " + std::to_string(n));
  const Scalar mean = v.derived().mean();
  return (v.derived().array() - mean).square().sum() / Scalar(n - 1);
}

/// Sample standard deviation of a PITE vector.
template <typename Derived>
typename Derived::Scalar sd_of_pite(const Eigen::DenseBase<Derived>& pite) {
  using std::sqrt;
  return sqrt(sample_variance(pite));
}

/// Which spread statistic the permutation engine compares. Both give the
/// same p-value because sqrt is strictly increasing.
enum class SpreadStatistic { sd, variance };

template <typename Derived>
typename Derived::Scalar spread_statistic(const Eigen::DenseBase<Derived>& pite,
                                          SpreadStatistic statistic) {
  return statistic == SpreadStatistic::sd ? sd_of_pite(pite) : sample_variance(pite);
}

struct PiteResult {
  VectorXd pite;
  double sd = 0.0;
  double mean = 0.0;         // model-based ATE
  double effect_size = 0.0;
  double raw_ate = 0.0;      // difference of observed arm outcome means
  PredictorSpec predictor;
};

/// Fits one model per arm and differences their predictions for every
/// individual. The treated-arm fit draws from stream.substream(0), the
/// control-arm fit from stream.substream(1).
VectorXd predict_pite(const Dataset& d, const PredictorSpec& spec, const RandomStream& stream,
                      unsigned threads = 1);

PiteResult estimate_pite(const Dataset& d, const PredictorSpec& spec, const RandomStream& stream,
                         unsigned threads = 1);

/// Mean |PITE| over the pooled outcome SD
/// sqrt(((N_T-1) s_T^2 + (N_C-1) s_C^2) / (N_T + N_C - 1)).
double pite_effect_size(const Eigen::Ref<const VectorXd>& pite, const Dataset& d);

/// Pooled outcome SD used as the effect-size denominator.
double pooled_outcome_sd(const Dataset& d);

/// Observed-outcome mean difference, treated minus control.
double raw_ate(const Dataset& d);

struct InteractionTerm {
  Index covariate = 0;
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  bool selected = false;
};

struct ScreeningResult {
  double alpha = 0.05;
  std::vector<InteractionTerm> terms;  // one per covariate, in column order
  std::vector<Index> selected;         // covariates with p < alpha
};

/// Pooled OLS of Y on [1, X, T, X*T]; selects covariates whose interaction
/// coefficient has a two-sided t-test p-value below alpha.
ScreeningResult screen_interactions(const Dataset& d, double alpha = 0.05);

}  // namespace pite
