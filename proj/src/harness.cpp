#include "pite/harness.hpp"

#include "pite/errors.hpp"
#include "pite/parallel.hpp"
#include "pite/serialize.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

namespace pite {

void ExperimentCell::validate() const {
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (permutations < 1) throw ConfigError("permutations must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  predictor.validate();
  std::visit([](const auto& d) { d.validate(); }, design);
}

void ExperimentGrid::validate() const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      cells[i].validate();
    } catch (const Error& e) {
      throw ConfigError("cell " + std::to_string(i) + ": " + e.what());
    }
  }
}

double binomial_half_width(double rate, Index replications) {
  return 1.96 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(replications));
}

CellResult run_cell(const ExperimentCell& cell, std::uint64_t master_seed, Index cell_index,
                    unsigned threads) {
  cell.validate();
  const auto start = std::chrono::steady_clock::now();
  const RandomStream cell_stream = RandomStream(master_seed).substream(
      cell.stream_index.value_or(static_cast<std::uint64_t>(cell_index)));

  CellResult result;
  result.cell_index = cell_index;
  result.replications = cell.replications;
  result.p_values.assign(static_cast<std::size_t>(cell.replications), 0.0);

  // Parallelize the outer level when it is wide enough, else the inner one.
  const unsigned workers = resolve_threads(threads);
  const bool outer = static_cast<Index>(workers) <= cell.replications;
  PermutationOptions options;
  options.permutations = cell.permutations;
  options.alpha = cell.alpha;
  options.threads = outer ? 1 : workers;

  parallel_for(static_cast<std::size_t>(cell.replications), outer ? workers : 1,
               [&](std::size_t r) {
                 const RandomStream rep = cell_stream.substream(r);
                 const GeneratedData generated = std::visit(
                     [&](const auto& design) {
                       using D = std::decay_t<decltype(design)>;
                       if constexpr (std::is_same_v<D, NullDesign>) {
                         return generate_null(design, rep.substream(0));
                       } else {
                         return generate_als(design, rep.substream(0));
                       }
                     },
                     cell.design);
                 const PermutationReport report = run_permutation_test(
                     generated.data, cell.predictor, options, rep.substream(1));
                 result.p_values[r] = report.p_value;
               });

  double p_sum = 0.0;
  for (double p : result.p_values) {
    p_sum += p;
    if (p < cell.alpha) ++result.rejections;
  }
  result.rejection_rate =
      static_cast<double>(result.rejections) / static_cast<double>(result.replications);
  result.mean_p_value = p_sum / static_cast<double>(result.replications);
  result.half_width = binomial_half_width(result.rejection_rate, result.replications);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

std::map<Index, CellResult> load_checkpoint(const std::filesystem::path& path,
                                            const std::string& fingerprint) {
  std::map<Index, CellResult> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      continue;  // torn final line from an interrupted run
    }
    if (j.value("grid", std::string()) != fingerprint) continue;
    CellResult r = j.at("result").get<CellResult>();
    done[r.cell_index] = std::move(r);
  }
  return done;
}

void append_checkpoint(const std::filesystem::path& path, const std::string& fingerprint,
                       const CellResult& result) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw ConfigError("cannot append to checkpoint '" + path.string() + "'");
  nlohmann::json j;
  j["grid"] = fingerprint;
  j["result"] = result;
  out << j.dump() << '\n';
  out.flush();
}

SimulationTable run_grid(const ExperimentGrid& grid, const HarnessOptions& options) {
  grid.validate();
  SimulationTable table;
  table.grid = grid;

  const std::string fingerprint = grid_fingerprint(grid);
  std::map<Index, CellResult> done;
  if (options.checkpoint) done = load_checkpoint(*options.checkpoint, fingerprint);

  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const auto index = static_cast<Index>(i);
    const ExperimentCell& cell = grid.cells[i];
    CellResult result;
    if (const auto it = done.find(index); it != done.end()) {
      result = it->second;
    } else {
      try {
        result = run_cell(cell, grid.master_seed, index, options.threads);
      } catch (const Error& e) {
        const std::string where =
            "cell " + std::to_string(i) + (cell.label.empty() ? "" : " (" + cell.label + ")");
        switch (e.category()) {
          case ErrorCategory::config: throw ConfigError(where + ": " + e.what());
          case ErrorCategory::data: throw DataError(where + ": " + e.what());
          case ErrorCategory::numerical: throw NumericalError(where + ": " + e.what());
        }
        throw;
      }
      if (options.checkpoint) append_checkpoint(*options.checkpoint, fingerprint, result);
    }
    if (options.on_cell_done) options.on_cell_done(cell, result);
    table.cells.push_back(std::move(result));
  }
  return table;
}

}  // namespace

SimulationTable run_type1(const ExperimentGrid& grid, const HarnessOptions& options) {
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (!std::holds_alternative<NullDesign>(grid.cells[i].design)) {
      throw ConfigError("type I error grid: cell " + std::to_string(i) + " is not a null design");
    }
  }
  return run_grid(grid, options);
}

SimulationTable run_power(const ExperimentGrid& grid, const HarnessOptions& options) {
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (!std::holds_alternative<AlsDesign>(grid.cells[i].design)) {
      throw ConfigError("power grid: cell " + std::to_string(i) + " is not an ALS design");
    }
  }
  return run_grid(grid, options);
}

ForestParams reference_forest(int n_trees) {
  ForestParams params;
  params.n_trees = n_trees;
  params.max_depth = 10;
  params.n_split_points = 10;
  return params;
}

namespace {

std::vector<PredictorSpec> model_list(ModelChoice models, const Scale& scale) {
  std::vector<PredictorSpec> specs;
  if (models != ModelChoice::forest) specs.push_back(PredictorSpec::linear());
  if (models != ModelChoice::linear) {
    specs.push_back(PredictorSpec::random_forest(reference_forest(scale.forest_trees)));
  }
  return specs;
}

}  // namespace

ExperimentGrid type1_table_grid(const Scale& scale, ModelChoice models, std::uint64_t seed) {
  struct Row {
    Index n, cont, bin;
    double ate;
  };
  // Nuisance blocks are always 75/35 or 150/70 (continuous/binary).
  static const Row rows[] = {
      {100, 0, 0, 0.0},     {100, 0, 0, 0.5},     {250, 0, 0, 0.0},      {250, 75, 35, 0.0},
      {250, 0, 0, 0.5},     {250, 75, 35, 0.5},   {500, 0, 0, 0.0},      {500, 75, 35, 0.0},
      {500, 150, 70, 0.0},  {500, 0, 0, 0.5},     {500, 75, 35, 0.5},    {500, 150, 70, 0.5},
      {1000, 0, 0, 0.0},    {1000, 75, 35, 0.0},  {1000, 150, 70, 0.0},  {1000, 0, 0, 0.5},
      {1000, 75, 35, 0.5},  {1000, 150, 70, 0.5},
  };

  ExperimentGrid grid;
  grid.master_seed = seed;
  grid.label = "type1";
  std::map<std::tuple<Index, Index, Index>, std::uint64_t> streams;
  for (const PredictorSpec& spec : model_list(models, scale)) {
    for (const Row& row : rows) {
      ExperimentCell cell;
      NullDesign design;
      design.n = row.n;
      design.n_nuisance_cont = row.cont;
      design.n_nuisance_bin = row.bin;
      design.ate = row.ate;
      cell.design = design;
      cell.predictor = spec;
      cell.permutations = scale.permutations;
      cell.replications = scale.replications;
      // ATE 0 / 0.5 rows (and both models) share replication data.
      const auto key = std::make_tuple(row.n, row.cont, row.bin);
      cell.stream_index = streams.emplace(key, streams.size()).first->second;
      cell.label = std::string(to_string(spec.kind)) + " n=" + std::to_string(row.n) +
                   " nuis=" + std::to_string(row.cont) + "/" + std::to_string(row.bin) +
                   " ate=" + (row.ate == 0.0 ? "0" : "0.5");
      grid.cells.push_back(std::move(cell));
    }
  }
  return grid;
}

ExperimentGrid power_table_grid(double effect_size, const Scale& scale, ModelChoice models,
                                std::uint64_t seed) {
  ExperimentGrid grid;
  grid.master_seed = seed;
  grid.label = "power";
  std::uint64_t stream = 0;
  std::map<std::tuple<Index, Index, int>, std::uint64_t> streams;
  for (const PredictorSpec& spec : model_list(models, scale)) {
    for (Index n : {Index{3000}, Index{1000}}) {
      for (Index nuisance : {Index{0}, Index{20}, Index{50}, Index{100}}) {
        for (Spread spread : kAllSpreads) {
          ExperimentCell cell;
          AlsDesign design;
          design.n = n;
          design.n_nuisance = nuisance;
          design.spread = spread;
          design.target_effect_size = effect_size;
          cell.design = design;
          cell.predictor = spec;
          cell.permutations = scale.permutations;
          cell.replications = scale.replications;
          // Keyed without the effect size, so grids at 0.19 and 0.38 pair up.
          const auto key = std::make_tuple(n, nuisance, static_cast<int>(spread));
          const auto [it, inserted] = streams.emplace(key, stream);
          if (inserted) ++stream;
          cell.stream_index = it->second;
          cell.label = std::string(to_string(spec.kind)) + " n=" + std::to_string(n) +
                       " nuis=" + std::to_string(nuisance) + " " + table_label(spread);
          grid.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return grid;
}

}  // namespace pite
