#include "pite/harness.hpp"
#include "pite/serialize.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace pite;

namespace {

ExperimentCell null_cell(Index n, double ate, Index reps, Index perms) {
  ExperimentCell cell;
  NullDesign d;
  d.n = n;
  d.ate = ate;
  cell.design = d;
  cell.replications = reps;
  cell.permutations = perms;
  return cell;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("pite_test_" + name);
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("binomial half width") {
    CHECK(binomial_half_width(0.05, 300) == doctest::Approx(1.96 * std::sqrt(0.05 * 0.95 / 300)));
    CHECK(binomial_half_width(0.0, 300) == 0.0);
    CHECK(binomial_half_width(0.5, 100) == doctest::Approx(0.098));
  }

  TEST_CASE("cell aggregates match the per-replication p-values") {
    const ExperimentCell cell = null_cell(40, 0.0, 30, 20);
    const CellResult r = run_cell(cell, 7, 0);
    REQUIRE(r.p_values.size() == 30);
    Index rejections = 0;
    double sum = 0.0;
    for (double p : r.p_values) {
      rejections += p < 0.05;
      sum += p;
    }
    CHECK(r.rejections == rejections);
    CHECK(r.rejection_rate == doctest::Approx(static_cast<double>(rejections) / 30.0));
    CHECK(r.mean_p_value == doctest::Approx(sum / 30.0));
    CHECK(r.half_width == doctest::Approx(binomial_half_width(r.rejection_rate, 30)));
  }

  TEST_CASE("replication streams follow the documented layout") {
    const ExperimentCell cell = null_cell(40, 0.0, 3, 25);
    const CellResult r = run_cell(cell, 11, 2);
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
      const RandomStream s = RandomStream(11).substream(2).substream(rep);
      const GeneratedData g = generate_null(std::get<NullDesign>(cell.design), s.substream(0));
      PermutationOptions o;
      o.permutations = 25;
      const PermutationReport report =
          run_permutation_test(g.data, PredictorSpec::linear(), o, s.substream(1));
      CHECK(r.p_values[rep] == report.p_value);
    }
  }

  TEST_CASE("results are identical across thread counts") {
    ExperimentCell cell = null_cell(40, 0.0, 6, 20);
    ForestParams params;
    params.n_trees = 5;
    cell.predictor = PredictorSpec::random_forest(params);
    const CellResult a = run_cell(cell, 3, 0, 1);
    const CellResult b = run_cell(cell, 3, 0, 4);
    const CellResult c = run_cell(cell, 3, 0, 16);
    CHECK(a.p_values == b.p_values);
    CHECK(a.p_values == c.p_values);
  }

  TEST_CASE("shared stream index pairs cells") {
    ExperimentGrid grid;
    grid.master_seed = 5;
    grid.cells = {null_cell(40, 0.0, 4, 20), null_cell(40, 0.5, 4, 20), null_cell(40, 0.0, 4, 20)};
    grid.cells[0].stream_index = 0;
    grid.cells[1].stream_index = 0;
    grid.cells[2].stream_index = 9;
    const SimulationTable t = run_type1(grid);
    REQUIRE(t.cells.size() == 3);
    // same data stream, same design: cell 0 equals an explicit run at index 0
    CHECK(t.cells[0].p_values == run_cell(grid.cells[0], 5, 17).p_values);
    CHECK(t.cells[2].p_values != t.cells[0].p_values);
  }

  TEST_CASE("grid kind checks") {
    ExperimentGrid grid;
    grid.cells = {null_cell(40, 0.0, 2, 5)};
    CHECK_THROWS_AS(run_power(grid), ConfigError);
    ExperimentCell als;
    als.design = AlsDesign{};
    grid.cells = {als};
    CHECK_THROWS_AS(run_type1(grid), ConfigError);
    grid.cells = {null_cell(40, 0.0, 0, 5)};
    CHECK_THROWS_AS(run_type1(grid), ConfigError);
  }

  TEST_CASE("checkpoint resume skips finished cells") {
    const auto path = temp_path("checkpoint.jsonl");
    ExperimentGrid grid;
    grid.master_seed = 21;
    grid.cells = {null_cell(40, 0.0, 5, 20), null_cell(50, 0.0, 5, 20)};
    HarnessOptions options;
    options.checkpoint = path;
    int computed = 0;
    options.on_cell_done = [&](const ExperimentCell&, const CellResult&) { ++computed; };
    const SimulationTable first = run_type1(grid, options);
    CHECK(computed == 2);

    // Corrupt the cell-1 entry's rejection count: a resumed run must reuse it.
    std::vector<std::string> lines;
    {
      std::ifstream in(path);
      for (std::string line; std::getline(in, line);) lines.push_back(line);
    }
    REQUIRE(lines.size() == 2);
    auto j = nlohmann::json::parse(lines[1]);
    j["result"]["rejections"] = 999;
    {
      std::ofstream out(path);
      out << lines[0] << '\n' << j.dump() << '\n' << "{\"torn";
    }
    const SimulationTable second = run_type1(grid, options);
    CHECK(second.cells[0].p_values == first.cells[0].p_values);
    CHECK(second.cells[1].rejections == 999);

    // A different grid ignores the entries.
    grid.master_seed = 22;
    const SimulationTable third = run_type1(grid, options);
    CHECK(third.cells[1].rejections != 999);
    std::filesystem::remove(path);
  }

  TEST_CASE("built-in type I grid") {
    const ExperimentGrid g = type1_table_grid(Scale::desk(), ModelChoice::both, 1);
    REQUIRE(g.cells.size() == 36);
    std::set<std::tuple<Index, Index, Index>> shapes;
    for (std::size_t i = 0; i < 18; ++i) {
      const auto& d = std::get<NullDesign>(g.cells[i].design);
      shapes.emplace(d.n, d.n_nuisance_cont, d.n_nuisance_bin);
      CHECK(g.cells[i].predictor.kind == PredictorKind::linear);
      CHECK(g.cells[i + 18].predictor.kind == PredictorKind::forest);
      CHECK(g.cells[i + 18].stream_index == g.cells[i].stream_index);
      CHECK(g.cells[i].replications == 300);
      CHECK((d.ate == 0.0 || d.ate == 0.5));
      CHECK((d.n_nuisance_cont == 0 || d.n_nuisance_cont == 75 || d.n_nuisance_cont == 150));
    }
    CHECK(shapes.size() == 9);
    // ate pairs share a data stream
    CHECK(g.cells[2].stream_index == g.cells[4].stream_index);
    CHECK(g.cells[2].stream_index != g.cells[3].stream_index);
    const ForestParams f = g.cells[18].predictor.forest;
    CHECK(f.n_trees == 100);
    CHECK(f.max_depth == 10);
    CHECK(f.n_split_points == 10);
    CHECK(type1_table_grid(Scale::full(), ModelChoice::linear, 1).cells.size() == 18);
    CHECK(type1_table_grid(Scale::full(), ModelChoice::linear, 1).cells[0].permutations == 1000);
  }

  TEST_CASE("built-in power grid") {
    const ExperimentGrid a = power_table_grid(0.19, Scale::desk(), ModelChoice::both, 1);
    REQUIRE(a.cells.size() == 96);
    const ExperimentGrid b = power_table_grid(0.38, Scale::desk(), ModelChoice::linear, 1);
    REQUIRE(b.cells.size() == 48);
    std::set<std::uint64_t> streams;
    for (std::size_t i = 0; i < 48; ++i) {
      const auto& da = std::get<AlsDesign>(a.cells[i].design);
      const auto& db = std::get<AlsDesign>(b.cells[i].design);
      CHECK(da.target_effect_size == 0.19);
      CHECK(db.target_effect_size == 0.38);
      CHECK(da.n == db.n);
      CHECK(da.spread == db.spread);
      CHECK(da.n_nuisance == db.n_nuisance);
      CHECK(a.cells[i].stream_index == b.cells[i].stream_index);
      streams.insert(*a.cells[i].stream_index);
    }
    CHECK(streams.size() == 48);
    CHECK(std::get<AlsDesign>(a.cells[0].design).n == 3000);
    CHECK(a.cells[0].label == "linear n=3000 nuis=0 Spread");
  }
}
