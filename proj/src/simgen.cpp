#include "pite/simgen.hpp"

#include "pite/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pite {

namespace {

// Independent sub-streams per generation stage, so datasets that differ only
// in one design knob (e.g. ate) share every other draw.
enum Stage : std::uint64_t { covariates = 0, assignment = 1, noise = 2, nuisance = 3, calibration = 4 };

constexpr Index kCalibrationDraws = 200000;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

VectorXi balanced_assignment(Index n, Engine& engine) {
  VectorXi t = VectorXi::Zero(n);
  t.head(n / 2).setOnes();
  std::shuffle(t.data(), t.data() + n, engine);
  return t;
}

void fill_nuisance(MatrixXd& x, Index first_col, Index n_cont, Index n_bin, Engine& engine,
                   std::vector<std::string>& names, std::vector<CovariateKind>& kinds) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (Index j = 0; j < n_cont; ++j) {
    for (Index i = 0; i < x.rows(); ++i) x(i, first_col + j) = normal(engine);
    names.push_back("nuis_c" + std::to_string(j + 1));
    kinds.push_back(CovariateKind::continuous);
  }
  for (Index j = 0; j < n_bin; ++j) {
    for (Index i = 0; i < x.rows(); ++i) x(i, first_col + n_cont + j) = coin(engine) ? 1.0 : 0.0;
    names.push_back("nuis_b" + std::to_string(j + 1));
    kinds.push_back(CovariateKind::binary);
  }
}

VectorXd draw_noise(Index n, double sd, Engine& engine) {
  VectorXd e(n);
  if (sd == 0.0) {
    e.setZero();
    return e;
  }
  std::normal_distribution<double> normal(0.0, sd);
  for (Index i = 0; i < n; ++i) e(i) = normal(engine);
  return e;
}

// Draws the seven ALS covariates into the first seven columns of x.
void draw_als_covariates(MatrixXd& x, const AlsDesign& design, Engine& engine) {
  using C = GeneratorConstants;
  const Index n = x.rows();
  std::normal_distribution<double> normal(0.0, 1.0);
  if (!design.correlation) {
    for (int k = 0; k < C::als_continuous_count; ++k) {
      for (Index i = 0; i < n; ++i) x(i, k) = C::als_means[k] + C::als_sds[k] * normal(engine);
    }
    for (int k = 0; k < 4; ++k) {
      std::bernoulli_distribution coin(C::als_binary_probs[static_cast<std::size_t>(k)]);
      for (Index i = 0; i < n; ++i) x(i, C::als_continuous_count + k) = coin(engine) ? 1.0 : 0.0;
    }
    return;
  }

  // Gaussian copula: latent z ~ N(0, R); binary margins by thresholding.
  const Eigen::LLT<MatrixXd> llt(*design.correlation);
  const MatrixXd lower = llt.matrixL();
  std::array<double, 4> cut{};
  const boost::math::normal_distribution<double> std_normal;
  for (int k = 0; k < 4; ++k) {
    cut[static_cast<std::size_t>(k)] =
        boost::math::quantile(std_normal, 1.0 - C::als_binary_probs[static_cast<std::size_t>(k)]);
  }
  VectorXd e(C::als_covariate_count);
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < C::als_covariate_count; ++k) e(k) = normal(engine);
    const VectorXd z = lower * e;
    for (int k = 0; k < C::als_continuous_count; ++k) {
      x(i, k) = C::als_means[k] + C::als_sds[k] * z(k);
    }
    for (int k = 0; k < 4; ++k) {
      x(i, C::als_continuous_count + k) = z(C::als_continuous_count + k) > cut[k] ? 1.0 : 0.0;
    }
  }
}

VectorXd als_population_means() {
  VectorXd mu(GeneratorConstants::als_covariate_count);
  for (int k = 0; k < mu.size(); ++k) mu(k) = GeneratorConstants::als_mean(k);
  return mu;
}

VectorXd als_base_betas() {
  const auto& b = GeneratorConstants::als_base_betas;
  return Eigen::Map<const VectorXd>(b.data(), static_cast<Index>(b.size()));
}

}  // namespace

double GeneratorConstants::als_mean(int k) {
  if (k < als_continuous_count) return als_means[static_cast<std::size_t>(k)];
  return als_binary_probs[static_cast<std::size_t>(k - als_continuous_count)];
}

double GeneratorConstants::als_variance(int k) {
  if (k < als_continuous_count) {
    const double sd = als_sds[static_cast<std::size_t>(k)];
    return sd * sd;
  }
  const double p = als_binary_probs[static_cast<std::size_t>(k - als_continuous_count)];
  return p * (1.0 - p);
}

void NullDesign::validate() const {
  if (n < 20) throw ConfigError("null design needs n >= 20");
  if (n_nuisance_cont < 0 || n_nuisance_bin < 0) throw ConfigError("nuisance counts must be >= 0");
  if (!(residual_sd >= 0.0) || !std::isfinite(residual_sd)) {
    throw ConfigError("residual_sd must be finite and >= 0");
  }
  if (!std::isfinite(ate)) throw ConfigError("ate must be finite");
}

void AlsDesign::validate() const {
  if (n < 4 || n % 2 != 0) throw ConfigError("ALS design needs an even n >= 4");
  if (!(target_effect_size >= 0.0) || !std::isfinite(target_effect_size)) {
    throw ConfigError("target effect size must be finite and >= 0");
  }
  if (n_nuisance < 0) throw ConfigError("nuisance count must be >= 0");
  if (!(residual_sd >= 0.0) || !std::isfinite(residual_sd)) {
    throw ConfigError("residual_sd must be finite and >= 0");
  }
  if (!std::isfinite(ate)) throw ConfigError("ate must be finite");
  if (correlation) {
    const MatrixXd& r = *correlation;
    const Index k = GeneratorConstants::als_covariate_count;
    if (r.rows() != k || r.cols() != k) throw ConfigError("correlation matrix must be 7x7");
    if (!r.isApprox(r.transpose(), 1e-12)) throw ConfigError("correlation matrix not symmetric");
    if ((r.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
      throw ConfigError("correlation matrix must have a unit diagonal");
    }
    if (Eigen::LLT<MatrixXd>(r).info() != Eigen::Success) {
      throw ConfigError("correlation matrix is not positive definite");
    }
  }
}

bool operator==(const AlsDesign& a, const AlsDesign& b) {
  const bool same_corr =
      a.correlation.has_value() == b.correlation.has_value() &&
      (!a.correlation || (a.correlation->rows() == b.correlation->rows() &&
                          a.correlation->cols() == b.correlation->cols() &&
                          *a.correlation == *b.correlation));
  return a.n == b.n && a.target_effect_size == b.target_effect_size && a.spread == b.spread &&
         a.n_nuisance == b.n_nuisance && a.residual_sd == b.residual_sd && a.ate == b.ate &&
         a.seed == b.seed && same_corr;
}

const char* to_string(Spread spread) {
  switch (spread) {
    case Spread::spread: return "spread";
    case Spread::cont90_10: return "cont90_10";
    case Spread::cont75_25: return "cont75_25";
    case Spread::cont50_50: return "cont50_50";
    case Spread::cont25_75: return "cont25_75";
    case Spread::bin90_10: return "bin90_10";
  }
  return "?";
}

const char* table_label(Spread spread) {
  switch (spread) {
    case Spread::spread: return "Spread";
    case Spread::cont90_10: return "90/10 Cont.";
    case Spread::cont75_25: return "75/25 Cont.";
    case Spread::cont50_50: return "50/50 Cont.";
    case Spread::cont25_75: return "25/75 Cont.";
    case Spread::bin90_10: return "90/10 Bin.";
  }
  return "?";
}

std::optional<Spread> spread_from_string(std::string_view s) {
  for (Spread sp : kAllSpreads) {
    if (s == to_string(sp) || s == table_label(sp)) return sp;
  }
  return std::nullopt;
}

GeneratedData generate_null(const NullDesign& design) {
  return generate_null(design, RandomStream(design.seed));
}

GeneratedData generate_null(const NullDesign& design, const RandomStream& stream) {
  design.validate();
  const Index n = design.n;
  const Index p = 5 + design.n_nuisance_cont + design.n_nuisance_bin;
  MatrixXd x(n, p);
  std::vector<std::string> names{"prog_c1", "prog_c2", "prog_c3", "prog_b1", "prog_b2"};
  std::vector<CovariateKind> kinds{CovariateKind::continuous, CovariateKind::continuous,
                                   CovariateKind::continuous, CovariateKind::binary,
                                   CovariateKind::binary};

  Engine cov_engine = stream.substream(Stage::covariates).engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = normal(cov_engine);
  }
  for (Index j = 3; j < 5; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = coin(cov_engine) ? 1.0 : 0.0;
  }
  Engine nuisance_engine = stream.substream(Stage::nuisance).engine();
  fill_nuisance(x, 5, design.n_nuisance_cont, design.n_nuisance_bin, nuisance_engine, names, kinds);

  Engine assign_engine = stream.substream(Stage::assignment).engine();
  VectorXi t = balanced_assignment(n, assign_engine);

  Engine noise_engine = stream.substream(Stage::noise).engine();
  VectorXd y = draw_noise(n, design.residual_sd, noise_engine);
  const auto& beta = GeneratorConstants::null_prognostic_betas;
  for (Index j = 0; j < 5; ++j) y += beta[static_cast<std::size_t>(j)] * x.col(j);
  y += design.ate * t.cast<double>();

  VectorXd effect = VectorXd::Constant(n, design.ate);
  return GeneratedData{Dataset(std::move(y), std::move(t), std::move(x), std::move(names),
                               std::move(kinds)),
                       std::move(effect), VectorXd(), 0.0};
}

VectorXd distribute_heterogeneity(Spread spread) {
  using C = GeneratorConstants;
  constexpr int k_total = C::als_covariate_count;
  std::array<double, k_total> share{};
  const auto lead_split = [&](int lead, double lead_share) {
    share.fill((1.0 - lead_share) / (k_total - 1));
    share[static_cast<std::size_t>(lead)] = lead_share;
  };
  switch (spread) {
    case Spread::spread: share.fill(1.0 / k_total); break;
    case Spread::cont90_10: lead_split(C::als_first_continuous, 0.90); break;
    case Spread::cont75_25: lead_split(C::als_first_continuous, 0.75); break;
    case Spread::cont50_50: lead_split(C::als_first_continuous, 0.50); break;
    case Spread::cont25_75: lead_split(C::als_first_continuous, 0.25); break;
    case Spread::bin90_10: lead_split(C::als_first_binary, 0.90); break;
  }
  VectorXd delta(k_total);
  for (int k = 0; k < k_total; ++k) {
    const double diff = C::als_treated_betas[static_cast<std::size_t>(k)] -
                        C::als_base_betas[static_cast<std::size_t>(k)];
    const double sign = diff < 0.0 ? -1.0 : 1.0;
    delta(k) = sign * std::sqrt(share[static_cast<std::size_t>(k)] / C::als_variance(k));
  }
  return delta;
}

HeterogeneityMoments heterogeneity_moments(const VectorXd& unit_delta, const AlsDesign& design,
                                           const RandomStream& stream) {
  using C = GeneratorConstants;
  constexpr int k_total = C::als_covariate_count;
  constexpr int k_cont = C::als_continuous_count;
  if (unit_delta.size() != k_total) throw DimensionMismatch("delta must have 7 entries");
  const VectorXd b = als_base_betas();
  HeterogeneityMoments m;

  if (!design.correlation) {
    for (int k = 0; k < k_total; ++k) {
      const double v = C::als_variance(k);
      m.var_effect += unit_delta(k) * unit_delta(k) * v;
      m.var_base += b(k) * b(k) * v;
      m.cov_base_effect += b(k) * unit_delta(k) * v;
    }
    // delta'(X - mu) = S + B with S ~ N(0, s^2) from the continuous
    // covariates and B discrete over the 16 binary configurations.
    double s2 = 0.0;
    for (int k = 0; k < k_cont; ++k) s2 += unit_delta(k) * unit_delta(k) * C::als_variance(k);
    const double s = std::sqrt(s2);
    constexpr int k_bin = k_total - k_cont;
    for (int mask = 0; mask < (1 << k_bin); ++mask) {
      double prob = 1.0;
      double offset = 0.0;
      for (int j = 0; j < k_bin; ++j) {
        const double p = C::als_binary_probs[static_cast<std::size_t>(j)];
        const bool on = (mask >> j) & 1;
        prob *= on ? p : 1.0 - p;
        offset += unit_delta(k_cont + j) * ((on ? 1.0 : 0.0) - p);
      }
      double folded = std::abs(offset);
      if (s > 0.0) {
        folded = s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-offset * offset / (2.0 * s2)) +
                 offset * (1.0 - 2.0 * normal_cdf(-offset / s));
      }
      m.mean_abs += prob * folded;
    }
    return m;
  }

  // Correlated covariates: Monte Carlo with a fixed draw set.
  AlsDesign probe = design;
  MatrixXd x(kCalibrationDraws, k_total);
  Engine engine = stream.substream(Stage::calibration).engine();
  draw_als_covariates(x, probe, engine);
  const VectorXd effect = x * unit_delta;
  const VectorXd base = x * b;
  const VectorXd centered_effect = (x.rowwise() - als_population_means().transpose()) * unit_delta;
  const double de = effect.mean();
  const double db = base.mean();
  const double denom = static_cast<double>(kCalibrationDraws - 1);
  m.mean_abs = centered_effect.cwiseAbs().mean();
  m.var_effect = (effect.array() - de).square().sum() / denom;
  m.var_base = (base.array() - db).square().sum() / denom;
  m.cov_base_effect = ((effect.array() - de) * (base.array() - db)).sum() / denom;
  return m;
}

double population_effect_size(double c, const HeterogeneityMoments& m, const AlsDesign& design) {
  const double per_arm = static_cast<double>(design.n / 2);
  const double noise = design.residual_sd * design.residual_sd;
  const double var_control = m.var_base + noise;
  const double var_treated = m.var_base + 2.0 * c * m.cov_base_effect + c * c * m.var_effect + noise;
  const double pooled =
      ((per_arm - 1.0) * var_treated + (per_arm - 1.0) * var_control) / (2.0 * per_arm - 1.0);
  return c * m.mean_abs / std::sqrt(pooled);
}

double calibrate_scale(const VectorXd& unit_delta, const AlsDesign& design,
                       const RandomStream& stream) {
  design.validate();
  const double target = design.target_effect_size;
  if (target == 0.0) return 0.0;
  const HeterogeneityMoments m = heterogeneity_moments(unit_delta, design, stream);
  if (!(m.mean_abs > 0.0) || !(m.var_effect > 0.0)) {
    throw CalibrationFailure("heterogeneity direction has zero spread");
  }

  // The effect size is bounded as c grows; bracket the target, then bisect.
  double lo = 0.0;
  double hi = 1e-3;
  int doublings = 0;
  while (population_effect_size(hi, m, design) < target) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 80) {
      throw CalibrationFailure("target effect size " + std::to_string(target) +
                               " is unreachable for this design");
    }
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (population_effect_size(mid, m, design) < target ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  if (std::abs(population_effect_size(c, m, design) - target) > 1e-3 * target) {
    throw CalibrationFailure("calibration did not converge");
  }
  return c;
}

VectorXd calibrate_effect_size(const VectorXd& unit_delta, const AlsDesign& design,
                               const RandomStream& stream) {
  return calibrate_scale(unit_delta, design, stream) * unit_delta;
}

GeneratedData generate_als(const AlsDesign& design) {
  return generate_als(design, RandomStream(design.seed));
}

GeneratedData generate_als(const AlsDesign& design, const RandomStream& stream) {
  using C = GeneratorConstants;
  design.validate();
  const Index n = design.n;
  const Index k_als = C::als_covariate_count;
  const Index p = k_als + design.n_nuisance;

  MatrixXd x(n, p);
  std::vector<std::string> names;
  std::vector<CovariateKind> kinds;
  for (int k = 0; k < k_als; ++k) {
    names.emplace_back(C::als_names[static_cast<std::size_t>(k)]);
    kinds.push_back(k < C::als_continuous_count ? CovariateKind::continuous
                                                : CovariateKind::binary);
  }
  Engine cov_engine = stream.substream(Stage::covariates).engine();
  MatrixXd als(n, k_als);
  draw_als_covariates(als, design, cov_engine);
  x.leftCols(k_als) = als;
  Engine nuisance_engine = stream.substream(Stage::nuisance).engine();
  fill_nuisance(x, k_als, design.n_nuisance_cont(), design.n_nuisance_bin(), nuisance_engine,
                names, kinds);

  const VectorXd unit = distribute_heterogeneity(design.spread);
  const double c = calibrate_scale(unit, design, stream);
  const VectorXd delta = c * unit;

  Engine assign_engine = stream.substream(Stage::assignment).engine();
  VectorXi t = balanced_assignment(n, assign_engine);

  const VectorXd effect =
      ((als.rowwise() - als_population_means().transpose()) * delta).array() + design.ate;
  Engine noise_engine = stream.substream(Stage::noise).engine();
  VectorXd y = draw_noise(n, design.residual_sd, noise_engine);
  y.array() += C::als_base_intercept;
  y += als * als_base_betas();
  y += (t.cast<double>().array() * effect.array()).matrix();

  return GeneratedData{Dataset(std::move(y), std::move(t), std::move(x), std::move(names),
                               std::move(kinds)),
                       effect, delta, c};
}

}  // namespace pite
