#pragma once

#include "pite/core.hpp"
#include "pite/dataset.hpp"
#include "pite/random.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pite {

/// Constants the generators are built from.
struct GeneratorConstants {
  /// Prognostic effects of the null design: three N(0,1) then two
  /// Bernoulli(.5) covariates, identical in both arms.
  static constexpr std::array<double, 5> null_prognostic_betas{0.406, -0.239, 0.703, -0.090,
                                                               -0.299};

  static constexpr int als_covariate_count = 7;
  static constexpr int als_continuous_count = 3;

  /// ALS covariates in generation order: continuous first, then binary.
  static constexpr std::array<std::string_view, 7> als_names{
      "respiratory_rate", "systolic_bp", "age", "delta_flag", "limb_only", "male", "riluzole"};
  static constexpr std::array<double, 3> als_means{17.19, 131.88, 54.70};
  static constexpr std::array<double, 3> als_sds{3.27, 16.63, 11.35};
  static constexpr std::array<double, 4> als_binary_probs{0.0320, 0.6708, 0.6351, 0.3821};

  /// Linear-model coefficients of the ALS fit, (treated, control), for the
  /// intercept followed by all 17 covariates.
  struct AlsCoefficient {
    std::string_view name;
    double treated;
    double control;
  };
  static constexpr std::array<AlsCoefficient, 18> als_full_model{{
      {"(Intercept)", -3.56945, -2.88826},
      {"Delta Flag", 0.01969, 0.17810},
      {"Respiratory Rate", -0.00099, 0.01067},
      {"Temperature", 0.10752, 0.09247},
      {"Weight(kg)", 0.00226, 0.00166},
      {"Height(cm)", -0.00555, -0.00442},
      {"Diastolic Blood Pressure", -0.00311, -0.00204},
      {"Systolic Blood Pressure", 0.00110, -0.00113},
      {"Pulse", -0.00365, -0.00431},
      {"Gender", 0.00712, -0.03439},
      {"Age", 0.00130, -0.00327},
      {"White", 0.03524, -0.01493},
      {"severity", -0.04591, -0.06893},
      {"Diagnosis Delta", -0.00036, -0.00022},
      {"Limb Only", -0.08336, 0.08838},
      {"Bulbar Only", -0.33667, -0.08348},
      {"Start Delta", -0.00019, -0.00037},
      {"Use Riluzole", -0.07150, -0.22549},
  }};

  /// Control-arm intercept and the control coefficients of the seven
  /// generated covariates (generation order).
  static constexpr double als_base_intercept = -2.88826;
  static constexpr std::array<double, 7> als_base_betas{0.01067,  -0.00113, -0.00327, 0.17810,
                                                        0.08838,  -0.03439, -0.22549};
  static constexpr std::array<double, 7> als_treated_betas{-0.00099, 0.00110,  0.00130, 0.01969,
                                                           -0.08336, 0.00712,  -0.07150};
  static constexpr double als_treated_intercept = -3.56945;

  /// Index of the first continuous / first binary covariate.
  static constexpr int als_first_continuous = 0;
  static constexpr int als_first_binary = 3;

  static double als_mean(int k);
  static double als_variance(int k);
};

struct NullDesign {
  Index n = 250;
  double ate = 0.0;
  Index n_nuisance_cont = 0;
  Index n_nuisance_bin = 0;
  double residual_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const NullDesign&, const NullDesign&) = default;
};

/// How the heterogeneity variance is divided among the seven ALS covariates.
enum class Spread { spread, cont90_10, cont75_25, cont50_50, cont25_75, bin90_10 };

inline constexpr std::array<Spread, 6> kAllSpreads{Spread::spread,    Spread::cont90_10,
                                                   Spread::cont75_25, Spread::cont50_50,
                                                   Spread::cont25_75, Spread::bin90_10};

const char* to_string(Spread spread);
/// Short table label, e.g. "90/10 Cont.".
const char* table_label(Spread spread);
std::optional<Spread> spread_from_string(std::string_view s);

struct AlsDesign {
  Index n = 1000;  // equal arms, must be even
  double target_effect_size = 0.19;
  Spread spread = Spread::spread;
  Index n_nuisance = 0;  // split continuous/binary, extra one to continuous
  double residual_sd = 1.0;
  double ate = 0.0;
  std::optional<MatrixXd> correlation;  // 7x7 latent correlation (Gaussian copula)
  std::uint64_t seed = 0;

  void validate() const;
  Index n_nuisance_cont() const { return n_nuisance - n_nuisance / 2; }
  Index n_nuisance_bin() const { return n_nuisance / 2; }
  friend bool operator==(const AlsDesign& a, const AlsDesign& b);
};

/// A generated dataset plus the truth behind it (for audits and oracles).
struct GeneratedData {
  Dataset data;
  VectorXd true_effect;  // per-individual treatment effect
  VectorXd delta;        // scaled heterogeneity coefficients (ALS designs)
  double scale = 0.0;    // calibration constant c (ALS designs)
};

GeneratedData generate_null(const NullDesign& design);
GeneratedData generate_null(const NullDesign& design, const RandomStream& stream);

GeneratedData generate_als(const AlsDesign& design);
GeneratedData generate_als(const AlsDesign& design, const RandomStream& stream);

/// Unit-variance heterogeneity direction: delta_k^2 Var(X_k) equals the
/// condition's share for covariate k, and the shares sum to 1. Signs follow
/// the treated-minus-control coefficient differences.
VectorXd distribute_heterogeneity(Spread spread);

/// Population moments the effect-size calibration works from.
struct HeterogeneityMoments {
  double mean_abs = 0.0;          // E|delta' (X - mu)|
  double var_effect = 0.0;        // Var(delta' X)
  double var_base = 0.0;          // Var(b' X), b the control coefficients
  double cov_base_effect = 0.0;   // Cov(b' X, delta' X)
};

/// Exact moments under independent covariates; 200,000-draw Monte Carlo
/// moments when the design carries a correlation matrix.
HeterogeneityMoments heterogeneity_moments(const VectorXd& unit_delta, const AlsDesign& design,
                                           const RandomStream& stream);

/// Population PITE effect size produced by scale c.
double population_effect_size(double c, const HeterogeneityMoments& m, const AlsDesign& design);

/// Scale c such that population_effect_size(c) hits the design target.
/// Throws CalibrationFailure if the target is unreachable.
double calibrate_scale(const VectorXd& unit_delta, const AlsDesign& design,
                       const RandomStream& stream);

/// c * delta with c from calibrate_scale.
VectorXd calibrate_effect_size(const VectorXd& unit_delta, const AlsDesign& design,
                               const RandomStream& stream);

}  // namespace pite
