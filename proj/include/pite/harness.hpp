#pragma once

#include "pite/permutation.hpp"
#include "pite/predictor.hpp"
#include "pite/simgen.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pite {

using Design = std::variant<NullDesign, AlsDesign>;

struct ExperimentCell {
  Design design;
  PredictorSpec predictor;
  Index permutations = 300;
  Index replications = 300;
  double alpha = 0.05;
  /// Cells with the same stream index see the same replication data streams
  /// (paired comparisons). Defaults to the cell's position in the grid.
  std::optional<std::uint64_t> stream_index;
  std::string label;

  void validate() const;
};

struct ExperimentGrid {
  std::vector<ExperimentCell> cells;
  std::uint64_t master_seed = 0;
  std::string label;

  void validate() const;
};

struct CellResult {
  Index cell_index = 0;
  Index replications = 0;
  Index rejections = 0;
  double rejection_rate = 0.0;
  double mean_p_value = 0.0;
  double half_width = 0.0;  // 1.96 sqrt(r (1 - r) / reps)
  double wall_time_seconds = 0.0;
  std::vector<double> p_values;  // per replication, in replication order
};

struct SimulationTable {
  ExperimentGrid grid;
  std::vector<CellResult> cells;
};

struct HarnessOptions {
  unsigned threads = 1;  // 0: all hardware threads
  /// Finished cells are appended here as they complete and skipped when the
  /// same grid is rerun.
  std::optional<std::filesystem::path> checkpoint;
  std::function<void(const ExperimentCell&, const CellResult&)> on_cell_done;
};

/// Replication r of a cell draws its dataset from
/// RandomStream(master_seed).substream(stream_index).substream(r).substream(0)
/// and its permutation test from ....substream(r).substream(1).
CellResult run_cell(const ExperimentCell& cell, std::uint64_t master_seed, Index cell_index,
                    unsigned threads = 1);

/// Type I error grid: every cell must use a NullDesign.
SimulationTable run_type1(const ExperimentGrid& grid, const HarnessOptions& options = {});

/// Power grid: every cell must use an AlsDesign.
SimulationTable run_power(const ExperimentGrid& grid, const HarnessOptions& options = {});

double binomial_half_width(double rate, Index replications);

/// Run-size knobs for the built-in grids.
struct Scale {
  Index replications = 300;
  Index permutations = 300;
  int forest_trees = 100;

  static Scale desk() { return {300, 300, 100}; }
  static Scale full() { return {1000, 1000, 500}; }
};

enum class ModelChoice { linear, forest, both };

/// Rows of the reference type I error table (n, continuous and binary
/// nuisance counts, ATE).
ExperimentGrid type1_table_grid(const Scale& scale, ModelChoice models, std::uint64_t seed);

/// The power tables: sample sizes {3000, 1000} x nuisance {0, 20, 50, 100} x
/// the six spreads, at one effect size.
ExperimentGrid power_table_grid(double effect_size, const Scale& scale, ModelChoice models,
                                std::uint64_t seed);

/// Reference forest settings at the given tree count.
ForestParams reference_forest(int n_trees);

}  // namespace pite
