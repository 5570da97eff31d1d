#include "pite/csv.hpp"
#include "pite/dataset.hpp"
#include "pite/errors.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace pite;

namespace {

Table table_of(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

Schema schema(std::vector<std::string> covariates = {}) {
  Schema s;
  s.outcome = "y";
  s.treatment = "t";
  s.covariates = std::move(covariates);
  return s;
}

Dataset small(const std::vector<int>& labels) {
  const auto n = static_cast<Index>(labels.size());
  VectorXd y = VectorXd::LinSpaced(n, 0.0, 1.0);
  VectorXi t(n);
  for (Index i = 0; i < n; ++i) t(i) = labels[static_cast<std::size_t>(i)];
  MatrixXd x = MatrixXd::Ones(n, 1);
  x.col(0) = VectorXd::LinSpaced(n, 1.0, 2.0);
  return Dataset(y, t, x, {"x"}, {CovariateKind::continuous});
}

}  // namespace

TEST_SUITE("data-model") {
  TEST_CASE("minimal four-row table") {
    const Dataset d = validate(table_of("y,t,x\n1.5,1,0.2\n2,1,0.4\n0.5,0,1\n3,0,0\n"), schema());
    CHECK(d.n() == 4);
    CHECK(d.p() == 1);
    CHECK(d.n_treated() == 2);
    CHECK(d.n_control() == 2);
    CHECK(d.covariate_names() == std::vector<std::string>{"x"});
  }

  TEST_CASE("treatment value 2 is rejected") {
    CHECK_THROWS_AS(validate(table_of("y,t,x\n1,1,0\n1,2,0\n1,0,0\n1,0,1\n1,1,1\n"), schema()),
                    NonBinaryTreatment);
    CHECK_THROWS_AS(validate(table_of("y,t,x\n1,1,0\n1,0.5,0\n1,0,0\n1,0,1\n"), schema()),
                    NonBinaryTreatment);
  }

  TEST_CASE("missing values are hard errors") {
    for (const char* token : {"", "NA", "NaN", "nan", "null", ".", "N/A"}) {
      const std::string text = std::string("y,t,x\n1,1,0\n1,1,") + token + "\n1,0,0\n1,0,1\n";
      try {
        validate(table_of(text), schema());
        FAIL("expected MissingValue for token '" << token << "'");
      } catch (const MissingValue& e) {
        CHECK(e.row() == 1);
        CHECK(e.column() == "x");
      }
    }
    CHECK_THROWS_AS(validate(table_of("y,t,x\nNA,1,0\n1,1,0\n1,0,0\n1,0,1\n"), schema()),
                    MissingValue);
    CHECK_THROWS_AS(validate(table_of("y,t,x\n1,,0\n1,1,0\n1,0,0\n1,0,1\n"), schema()),
                    MissingValue);
  }

  TEST_CASE("degenerate arms and empty covariates") {
    CHECK_THROWS_AS(validate(table_of("y,t,x\n1,1,0\n1,0,0\n1,0,1\n"), schema()), DegenerateArm);
    CHECK_THROWS_AS(validate(table_of("y,t\n1,1\n1,1\n1,0\n1,0\n"), schema()), EmptyCovariates);
    CHECK_THROWS_AS(validate(table_of("y,t,x\n1,1,0\n"), schema({"nope"})), ConfigError);
  }

  TEST_CASE("kind inference and overrides") {
    const std::string text = "y,t,a,b,c\n1,1,0,0.5,1\n2,1,1,2,0\n3,0,1,3,1\n4,0,0,4,0\n";
    Dataset d = validate(table_of(text), schema());
    CHECK(d.covariate_kinds() ==
          std::vector<CovariateKind>{CovariateKind::binary, CovariateKind::continuous,
                                     CovariateKind::binary});
    Schema s = schema({"c", "b"});
    s.kind_overrides["c"] = CovariateKind::continuous;
    d = validate(table_of(text), s);
    CHECK(d.covariate_names() == std::vector<std::string>{"c", "b"});
    CHECK(d.covariate_kinds()[0] == CovariateKind::continuous);
    CHECK(d.covariates()(0, 1) == 0.5);

    Schema bad = schema();
    bad.kind_overrides["b"] = CovariateKind::binary;
    CHECK_THROWS_AS(validate(table_of(text), bad), NonBinaryCovariate);
  }

  TEST_CASE("constructor checks dimensions") {
    CHECK_THROWS_AS(Dataset(VectorXd::Zero(4), VectorXi::Zero(3), MatrixXd::Zero(4, 1), {"x"},
                            {CovariateKind::continuous}),
                    DimensionMismatch);
    CHECK_THROWS_AS(Dataset(VectorXd::Zero(4), (VectorXi(4) << 1, 1, 0, 0).finished(),
                            MatrixXd::Zero(4, 2), {"x"}, {CovariateKind::continuous}),
                    DimensionMismatch);
  }

  TEST_CASE("ALS-shaped trial with 1766 treated and 1144 control") {
    std::ostringstream text;
    text << "y,t,x\n";
    for (int i = 0; i < 2910; ++i) text << i * 0.001 << ',' << (i < 1766 ? 1 : 0) << ',' << i % 7 << '\n';
    const Dataset d = validate(table_of(text.str()), schema());
    CHECK(d.n() == 2910);
    const ArmSplit arms = split_arms(d);
    CHECK(arms.treated.size() == 1766);
    CHECK(arms.control.size() == 1144);
  }

  TEST_CASE("split_arms partitions the rows") {
    const ArmSplit arms = split_arms(small({1, 0, 1, 0}));
    CHECK(arms.treated.indices == std::vector<Index>{0, 2});
    CHECK(arms.control.indices == std::vector<Index>{1, 3});
    CHECK(arms.treated.arm == Arm::treatment);
    CHECK(arms.control.arm == Arm::control);
  }

  TEST_CASE("permute_treatment is uniform over the six arrangements") {
    const Dataset d = small({1, 1, 0, 0});
    std::map<std::vector<int>, int> counts;
    Engine engine(20240601);
    const int draws = 60000;
    for (int k = 0; k < draws; ++k) {
      const Dataset p = permute_treatment(d, engine);
      counts[std::vector<int>(p.treatment().data(), p.treatment().data() + 4)]++;
    }
    REQUIRE(counts.size() == 6);
    double chi2 = 0.0;
    const double expected = draws / 6.0;
    for (const auto& [labels, c] : counts) {
      CHECK(std::count(labels.begin(), labels.end(), 1) == 2);
      chi2 += (c - expected) * (c - expected) / expected;
    }
    // 5 degrees of freedom, 0.1% upper critical value
    CHECK(chi2 < 20.515);
  }

  TEST_CASE("two-row permutation is a fair coin") {
    VectorXi t(4);
    t << 1, 0, 1, 0;
    const Dataset d = small({1, 0, 1, 0});
    int first_treated = 0;
    const int draws = 20000;
    for (int k = 0; k < draws; ++k) {
      const Dataset p = permute_treatment(d, RandomStream(11).substream(static_cast<std::uint64_t>(k)));
      first_treated += p.treatment()(0);
    }
    // 5 sigma of a fair binomial
    CHECK(std::abs(first_treated - draws / 2) < 5.0 * std::sqrt(draws * 0.25));
  }

  TEST_CASE("permutation preserves label counts and shares data") {
    Engine engine(3);
    std::uniform_int_distribution<int> size(4, 40);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = size(engine);
      std::vector<int> labels(static_cast<std::size_t>(n), 0);
      const int nt = 2 + static_cast<int>(engine() % static_cast<std::uint64_t>(n - 3));
      for (int i = 0; i < nt; ++i) labels[static_cast<std::size_t>(i)] = 1;
      std::shuffle(labels.begin(), labels.end(), engine);
      const Dataset d = small(labels);
      const VectorXi before = d.treatment();
      const Dataset p = permute_treatment(d, engine);
      REQUIRE(p.n_treated() == d.n_treated());
      REQUIRE(split_arms(p).treated.size() == split_arms(d).treated.size());
      REQUIRE(p.shares_data_with(d));
      REQUIRE(d.treatment() == before);
    }
  }

  TEST_CASE("permuting with the same stream is reproducible") {
    const Dataset d = small({1, 1, 1, 0, 0, 0, 1, 0});
    const Dataset a = permute_treatment(d, RandomStream(5).substream(2));
    const Dataset b = permute_treatment(d, RandomStream(5).substream(2));
    CHECK(a.treatment() == b.treatment());
  }

  TEST_CASE("augmented design prepends an intercept") {
    const Dataset d = small({1, 0, 1, 0});
    const MatrixXd x = augmented_design(d, split_arms(d).control);
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 2);
    CHECK(x(0, 0) == 1.0);
    CHECK(x(1, 1) == d.covariates()(3, 0));
  }
}

TEST_SUITE("csv") {
  TEST_CASE("quotes, BOM and blank lines") {
    const Table t = table_of("\xEF\xBB\xBF\"y\",t,\"a, b\"\r\n\n1,1,\"say \"\"hi\"\"\"\n\n");
    CHECK(t.header == std::vector<std::string>{"y", "t", "a, b"});
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][2] == "say \"hi\"");
    CHECK_THROWS_AS(table_of("y,t\n\"1,1\n"), DataError);
    CHECK_THROWS_AS(table_of("\n\n"), DataError);
  }

  TEST_CASE("round trip is lossless for finite doubles") {
    Engine engine(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> e(-300, 300);
    const Index n = 200;
    VectorXd y(n);
    VectorXi t(n);
    MatrixXd x(n, 3);
    for (Index i = 0; i < n; ++i) {
      y(i) = u(engine) * std::pow(10.0, e(engine));
      t(i) = i % 2;
      x(i, 0) = u(engine);
      x(i, 1) = static_cast<double>(i % 2 == 0);
      x(i, 2) = std::nextafter(u(engine), 2.0) * 1e-310;  // subnormal range
    }
    x(0, 0) = -0.0;
    x(1, 0) = std::numeric_limits<double>::max();
    x(2, 0) = std::numeric_limits<double>::denorm_min();
    const Dataset d(y, t, x, {"a", "b b", "c,\"q\""},
                    {CovariateKind::continuous, CovariateKind::binary, CovariateKind::continuous});
    std::ostringstream out;
    write_csv(out, d, "outcome", "arm");
    std::istringstream in(out.str());
    Schema s;
    s.outcome = "outcome";
    s.treatment = "arm";
    const Dataset back = validate(read_csv(in), s);
    CHECK(back.covariate_names() == d.covariate_names());
    CHECK(back.treatment() == d.treatment());
    for (Index i = 0; i < n; ++i) {
      REQUIRE(back.outcome()(i) == d.outcome()(i));
      for (Index j = 0; j < 3; ++j) REQUIRE(back.covariates()(i, j) == d.covariates()(i, j));
    }
  }

  TEST_CASE("format_double is shortest round trip") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-8) == "-2.5e-08");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }
}
