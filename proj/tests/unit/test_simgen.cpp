#include "pite/linear.hpp"
#include "pite/pite.hpp"
#include "pite/simgen.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace pite;
using C = GeneratorConstants;

namespace {

std::vector<double> arm_values(const VectorXd& v, const VectorXi& t, int arm) {
  std::vector<double> out;
  for (Index i = 0; i < v.size(); ++i) {
    if (t(i) == arm) out.push_back(v(i));
  }
  return out;
}

double share(const VectorXd& delta, int k) { return delta(k) * delta(k) * C::als_variance(k); }

}  // namespace

TEST_SUITE("simgen") {
  TEST_CASE("constants match the reference literals") {
    CHECK(C::null_prognostic_betas == std::array<double, 5>{0.406, -0.239, 0.703, -0.090, -0.299});
    CHECK(C::als_means == std::array<double, 3>{17.19, 131.88, 54.70});
    CHECK(C::als_sds == std::array<double, 3>{3.27, 16.63, 11.35});
    CHECK(C::als_binary_probs == std::array<double, 4>{0.0320, 0.6708, 0.6351, 0.3821});
    CHECK(C::als_full_model.front().control == -2.88826);
    CHECK(C::als_full_model.back().treated == -0.07150);
    // the seven generated covariates pick their control coefficients out of the full model
    const std::array<std::string_view, 7> full_names{"Respiratory Rate", "Systolic Blood Pressure",
                                                     "Age", "Delta Flag", "Limb Only", "Gender",
                                                     "Use Riluzole"};
    for (std::size_t k = 0; k < 7; ++k) {
      const auto it = std::find_if(C::als_full_model.begin(), C::als_full_model.end(),
                                   [&](const auto& c) { return c.name == full_names[k]; });
      REQUIRE(it != C::als_full_model.end());
      CHECK(C::als_base_betas[k] == it->control);
      CHECK(C::als_treated_betas[k] == it->treated);
    }
    CHECK(C::als_variance(3) == doctest::Approx(0.0320 * 0.9680));
    CHECK(C::als_mean(1) == 131.88);
  }

  TEST_CASE("design validation") {
    NullDesign n;
    n.n = 19;
    CHECK_THROWS_AS(generate_null(n), ConfigError);
    n.n = 40;
    n.n_nuisance_bin = -1;
    CHECK_THROWS_AS(generate_null(n), ConfigError);
    AlsDesign a;
    a.n = 101;
    CHECK_THROWS_AS(generate_als(a), ConfigError);
    a.n = 100;
    MatrixXd r = MatrixXd::Identity(7, 7);
    r(0, 1) = 0.3;
    a.correlation = r;
    CHECK_THROWS_AS(generate_als(a), ConfigError);
    r(1, 0) = 0.3;
    a.correlation = r;
    CHECK_NOTHROW(generate_als(a));
  }

  TEST_CASE("null design: zero noise and zero ATE give identical arm functions") {
    NullDesign d;
    d.n = 200;
    d.residual_sd = 0.0;
    const GeneratedData g = generate_null(d, RandomStream(1));
    CHECK(predict_pite(g.data, PredictorSpec::linear(), RandomStream(0)).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("null design: arm mean difference tracks the ATE") {
    NullDesign d;
    d.n = 10000;
    d.ate = 0.5;
    const GeneratedData g = generate_null(d, RandomStream(2));
    CHECK(g.data.n_treated() == 5000);
    // two-sample standard error from the arm sample variances
    const auto yt = arm_values(g.data.outcome(), g.data.treatment(), 1);
    const auto yc = arm_values(g.data.outcome(), g.data.treatment(), 0);
    const double se = std::sqrt((std::pow(oracle::sample_sd(yt), 2) + std::pow(oracle::sample_sd(yc), 2)) / 5000.0);
    CHECK(se < 0.03);
    CHECK(std::abs(raw_ate(g.data) - 0.5) < 4.0 * se);
    double mean_diff = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) mean_diff += raw_ate(generate_null(d, RandomStream(100 + s)).data) / 20.0;
    CHECK(std::abs(mean_diff - 0.5) < 0.03);
    CHECK((g.true_effect.array() == 0.5).all());

    // outcome minus ate*T has the same distribution in both arms
    const VectorXd shifted = g.data.outcome() - d.ate * g.data.treatment().cast<double>();
    const auto a = arm_values(shifted, g.data.treatment(), 1);
    const auto b = arm_values(shifted, g.data.treatment(), 0);
    // 1% critical value 1.628 * sqrt((m + n) / (m n))
    CHECK(oracle::ks_two_sample(a, b) < 1.628 * std::sqrt(2.0 / 5000.0));
  }

  TEST_CASE("null design: OLS recovers the prognostic coefficients") {
    NullDesign d;
    d.n = 4000;
    const GeneratedData g = generate_null(d, RandomStream(3));
    const ArmView control = split_arms(g.data).control;
    const OlsFit fit =
        ols_with_inference(augmented_design(g.data, control), g.data.outcome()(control.indices));
    for (std::size_t k = 0; k < 5; ++k) {
      const auto j = static_cast<Index>(k + 1);
      CHECK(std::abs(fit.coefficients(j) - C::null_prognostic_betas[k]) < 4.0 * fit.standard_errors(j));
    }
  }

  TEST_CASE("null design: nuisance columns") {
    NullDesign d;
    d.n = 2000;
    d.n_nuisance_cont = 3;
    d.n_nuisance_bin = 2;
    const GeneratedData g = generate_null(d, RandomStream(4));
    REQUIRE(g.data.p() == 10);
    CHECK(g.data.covariate_names()[5] == "nuis_c1");
    CHECK(g.data.covariate_names()[9] == "nuis_b2");
    CHECK(g.data.covariate_kinds()[9] == CovariateKind::binary);
    const VectorXd b = g.data.covariates().col(9);
    CHECK(((b.array() == 0.0) || (b.array() == 1.0)).all());
    CHECK(std::abs(b.mean() - 0.5) < 0.05);
    CHECK(std::abs(g.data.covariates().col(6).mean()) < 0.1);
  }

  TEST_CASE("generators are deterministic and stage streams are independent") {
    NullDesign d;
    d.n = 100;
    const GeneratedData a = generate_null(d, RandomStream(5));
    const GeneratedData b = generate_null(d, RandomStream(5));
    CHECK(a.data.outcome() == b.data.outcome());
    CHECK(a.data.covariates() == b.data.covariates());
    d.ate = 0.5;
    const GeneratedData c = generate_null(d, RandomStream(5));
    CHECK(c.data.covariates() == a.data.covariates());
    CHECK(c.data.treatment() == a.data.treatment());
    const VectorXd diff = c.data.outcome() - a.data.outcome();
    for (Index i = 0; i < d.n; ++i) {
      REQUIRE(diff(i) == doctest::Approx(0.5 * a.data.treatment()(i)));
    }

    AlsDesign als;
    als.n = 200;
    als.seed = 9;
    CHECK(generate_als(als).data.outcome() == generate_als(als).data.outcome());
  }

  TEST_CASE("variance shares follow the condition") {
    for (Spread s : kAllSpreads) {
      const VectorXd delta = distribute_heterogeneity(s);
      double total = 0.0;
      for (int k = 0; k < 7; ++k) total += share(delta, k);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      for (int k = 0; k < 7; ++k) {
        const double diff = C::als_treated_betas[static_cast<std::size_t>(k)] -
                            C::als_base_betas[static_cast<std::size_t>(k)];
        CHECK((delta(k) < 0.0) == (diff < 0.0));
      }
    }
    const VectorXd even = distribute_heterogeneity(Spread::spread);
    for (int k = 0; k < 7; ++k) CHECK(std::abs(share(even, k) - 1.0 / 7.0) < 1e-10);

    const std::pair<Spread, double> leads[] = {{Spread::cont90_10, 0.90},
                                               {Spread::cont75_25, 0.75},
                                               {Spread::cont50_50, 0.50},
                                               {Spread::cont25_75, 0.25}};
    for (const auto& [s, lead] : leads) {
      const VectorXd delta = distribute_heterogeneity(s);
      CHECK(std::abs(share(delta, 0) - lead) < 1e-10);
      for (int k = 1; k < 7; ++k) CHECK(std::abs(share(delta, k) - (1.0 - lead) / 6.0) < 1e-10);
    }

    const VectorXd bin = distribute_heterogeneity(Spread::bin90_10);
    CHECK(std::abs(share(bin, 3) - 0.9) < 1e-10);
    CHECK(std::abs(bin(3)) == doctest::Approx(std::sqrt(0.9 / (0.0320 * 0.9680))));
    CHECK(std::abs(bin(3)) == doctest::Approx(5.39).epsilon(1e-3));
  }

  TEST_CASE("spread names round trip") {
    for (Spread s : kAllSpreads) CHECK(spread_from_string(to_string(s)) == s);
    CHECK(spread_from_string("bogus") == std::nullopt);
    CHECK(std::string(table_label(Spread::bin90_10)) == "90/10 Bin.");
  }

  TEST_CASE("exact moments: half-normal and Bernoulli directions") {
    AlsDesign design;
    VectorXd e = VectorXd::Zero(7);
    e(0) = 1.0 / C::als_sds[0];
    HeterogeneityMoments m = heterogeneity_moments(e, design, RandomStream(0));
    CHECK(m.mean_abs == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
    CHECK(m.var_effect == doctest::Approx(1.0));
    CHECK(m.cov_base_effect == doctest::Approx(C::als_base_betas[0] * C::als_sds[0]));

    e.setZero();
    e(4) = 1.0;
    m = heterogeneity_moments(e, design, RandomStream(0));
    const double p = C::als_binary_probs[1];
    CHECK(m.mean_abs == doctest::Approx(2.0 * p * (1.0 - p)).epsilon(1e-12));

    // mixed direction vs a brute-force Monte Carlo estimate
    const VectorXd unit = distribute_heterogeneity(Spread::spread);
    m = heterogeneity_moments(unit, design, RandomStream(0));
    AlsDesign big;
    big.n = 400000;
    big.target_effect_size = 0.19;
    const GeneratedData g = generate_als(big, RandomStream(6));
    const MatrixXd x = g.data.covariates().leftCols(7);
    VectorXd mu(7);
    for (int k = 0; k < 7; ++k) mu(k) = C::als_mean(k);
    const VectorXd centered = (x.rowwise() - mu.transpose()) * unit;
    CHECK(std::abs(centered.cwiseAbs().mean() - m.mean_abs) < 0.01);
    CHECK(std::abs(sample_variance(centered) - m.var_effect) < 0.02);
  }

  TEST_CASE("effect size formula: half-normal closed form") {
    HeterogeneityMoments m;
    m.mean_abs = std::sqrt(2.0 / std::numbers::pi);
    m.var_effect = 1.0;
    AlsDesign design;
    design.n = 1000;
    for (double c : {0.05, 0.3, 1.7}) {
      const double pooled = std::sqrt((499.0 * (c * c + 1.0) + 499.0 * 1.0) / 999.0);
      const double es = population_effect_size(c, m, design);
      CHECK(es == doctest::Approx(c * std::sqrt(2.0 / std::numbers::pi) / pooled).epsilon(1e-12));
      CHECK(c == doctest::Approx(es * pooled * std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-12));
    }
  }

  TEST_CASE("calibration") {
    AlsDesign design;
    design.n = 1000;
    const VectorXd unit = distribute_heterogeneity(Spread::spread);
    design.target_effect_size = 0.19;
    const double c19 = calibrate_scale(unit, design, RandomStream(0));
    design.target_effect_size = 0.38;
    const double c38 = calibrate_scale(unit, design, RandomStream(0));
    CHECK(c38 > c19);
    CHECK(c38 / c19 > 1.9);
    CHECK(c38 / c19 < 2.3);
    const HeterogeneityMoments m = heterogeneity_moments(unit, design, RandomStream(0));
    CHECK(population_effect_size(c38, m, design) == doctest::Approx(0.38).epsilon(1e-6));
    CHECK((calibrate_effect_size(unit, design, RandomStream(0)) - c38 * unit).norm() == 0.0);

    design.target_effect_size = 0.0;
    CHECK(calibrate_scale(unit, design, RandomStream(0)) == 0.0);
    design.target_effect_size = 0.19;
    CHECK_THROWS_AS(calibrate_scale(VectorXd::Zero(7), design, RandomStream(0)), CalibrationFailure);
    // bounded: c |delta'x| / sqrt(c^2 var / 2) tops out near sqrt(2) * E|Z|
    design.target_effect_size = 5.0;
    CHECK_THROWS_AS(calibrate_scale(unit, design, RandomStream(0)), CalibrationFailure);
  }

  TEST_CASE("ALS design: empirical effect size from true effects") {
    AlsDesign design;
    design.n = 100000;
    design.target_effect_size = 0.19;
    const GeneratedData g = generate_als(design, RandomStream(7));
    CHECK(std::abs(pite_effect_size(g.true_effect, g.data) - 0.19) < 0.01);
    CHECK(g.data.n_treated() == 50000);
    CHECK(g.delta.size() == 7);
    CHECK(g.delta == g.scale * distribute_heterogeneity(Spread::spread));
  }

  TEST_CASE("ALS design: the true effect is delta applied to centered covariates") {
    AlsDesign design;
    design.n = 500;
    design.ate = 0.25;
    design.n_nuisance = 5;
    design.spread = Spread::cont75_25;
    const GeneratedData g = generate_als(design, RandomStream(8));
    REQUIRE(g.data.p() == 12);
    CHECK(g.data.covariate_names()[0] == "respiratory_rate");
    CHECK(g.data.covariate_names()[6] == "riluzole");
    CHECK(g.data.covariate_names()[7] == "nuis_c1");
    CHECK(g.data.covariate_names()[10] == "nuis_b1");
    for (Index i = 0; i < design.n; ++i) {
      double e = design.ate;
      for (int k = 0; k < 7; ++k) e += g.delta(k) * (g.data.covariates()(i, k) - C::als_mean(k));
      REQUIRE(g.true_effect(i) == doctest::Approx(e).epsilon(1e-12));
    }
  }

  TEST_CASE("ALS design: noise-free outcomes follow the base model plus the effect") {
    AlsDesign design;
    design.n = 100;
    design.residual_sd = 0.0;
    const GeneratedData g = generate_als(design, RandomStream(9));
    for (Index i = 0; i < design.n; ++i) {
      double y = C::als_base_intercept;
      for (int k = 0; k < 7; ++k) y += C::als_base_betas[static_cast<std::size_t>(k)] * g.data.covariates()(i, k);
      if (g.data.treatment()(i) == 1) y += g.true_effect(i);
      REQUIRE(g.data.outcome()(i) == doctest::Approx(y).epsilon(1e-12));
    }
  }

  TEST_CASE("ALS design: covariate margins") {
    AlsDesign design;
    design.n = 60000;
    const GeneratedData g = generate_als(design, RandomStream(10));
    const MatrixXd& x = g.data.covariates();
    for (int k = 0; k < 3; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      CHECK(std::abs(x.col(k).mean() - C::als_means[kk]) < 5.0 * C::als_sds[kk] / std::sqrt(60000.0));
    }
    for (int k = 0; k < 4; ++k) {
      const double p = C::als_binary_probs[static_cast<std::size_t>(k)];
      CHECK(std::abs(x.col(3 + k).mean() - p) < 5.0 * std::sqrt(p * (1 - p) / 60000.0));
    }
  }

  TEST_CASE("Bin90_10 effect variance is dominated by Delta Flag") {
    const VectorXd delta = distribute_heterogeneity(Spread::bin90_10);
    double total = 0.0;
    for (int k = 0; k < 7; ++k) total += share(delta, k);
    CHECK(share(delta, 3) / total >= 0.85);
  }

  TEST_CASE("correlated covariates: copula margins and correlation") {
    AlsDesign design;
    design.n = 40000;
    MatrixXd r = MatrixXd::Identity(7, 7);
    r(0, 2) = r(2, 0) = 0.6;
    design.correlation = r;
    const GeneratedData g = generate_als(design, RandomStream(11));
    const MatrixXd& x = g.data.covariates();
    const VectorXd a = x.col(0).array() - x.col(0).mean();
    const VectorXd b = x.col(2).array() - x.col(2).mean();
    const double corr = a.dot(b) / (a.norm() * b.norm());
    CHECK(std::abs(corr - 0.6) < 0.03);
    const double p = C::als_binary_probs[2];
    CHECK(std::abs(x.col(5).mean() - p) < 0.02);
    CHECK(std::abs(pite_effect_size(g.true_effect, g.data) - 0.19) < 0.02);
  }
}
