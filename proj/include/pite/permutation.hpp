#pragma once

#include "pite/dataset.hpp"
#include "pite/pite.hpp"
#include "pite/predictor.hpp"
#include "pite/random.hpp"

#include <cstdint>
#include <span>

namespace pite {

struct PermutationOptions {
  Index permutations = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0: all hardware threads
  SpreadStatistic statistic = SpreadStatistic::sd;

  void validate() const;
};

/// Descriptive summary of the permutation (chance) distribution.
struct ChanceSummary {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double q025 = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  double q975 = 0.0;
  double max = 0.0;
};

struct PermutationReport {
  double observed_sd = 0.0;
  VectorXd permuted_sds;
  double p_value = 1.0;
  Index n_permutations = 0;
  double alpha = 0.05;
  bool reject = false;
  std::uint64_t seed = 0;
  SpreadStatistic statistic = SpreadStatistic::sd;
  PredictorSpec predictor;
  ChanceSummary chance_sd_summary;

  // Observed-data context.
  Index n = 0;
  Index n_treated = 0;
  Index n_control = 0;
  double mean_pite = 0.0;
  double raw_ate = 0.0;
  double effect_size = 0.0;
};

/// Fraction of permuted statistics strictly greater than the observed one.
double permutation_p_value(double observed, std::span<const double> permuted);

ChanceSummary summarize(std::span<const double> values);

/// The permutation test for treatment-effect heterogeneity. The observed fit
/// draws from root.substream(0); permutation p (1-based) shuffles labels with
/// root.substream(p).substream(0) and refits with root.substream(p).substream(1).
/// The report is identical for any thread count.
PermutationReport run_permutation_test(const Dataset& d, const PredictorSpec& spec,
                                       const PermutationOptions& options);
PermutationReport run_permutation_test(const Dataset& d, const PredictorSpec& spec,
                                       const PermutationOptions& options,
                                       const RandomStream& root);

/// Number of distinct ways to place the treated labels, or nullopt past `cap`.
std::optional<std::uint64_t> assignment_count(Index n, Index n_treated, std::uint64_t cap);

inline constexpr std::uint64_t kMaxExhaustiveAssignments = 10000;

/// Spread statistic for every distinct assignment of d.n_treated() labels
/// among d.n() individuals, in lexicographic order of the treated index sets.
/// Throws TooLarge beyond kMaxExhaustiveAssignments assignments.
VectorXd exhaustive_null_distribution(const Dataset& d, const PredictorSpec& spec,
                                      const RandomStream& stream = RandomStream(0),
                                      SpreadStatistic statistic = SpreadStatistic::sd,
                                      unsigned threads = 1);

}  // namespace pite
