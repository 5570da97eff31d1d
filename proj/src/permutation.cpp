#include "pite/permutation.hpp"

#include "pite/errors.hpp"
#include "pite/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pite {

void PermutationOptions::validate() const {
  if (permutations < 1) throw ConfigError("permutation count must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

double permutation_p_value(double observed, std::span<const double> permuted) {
  if (permuted.empty()) throw TooFewValues("no permuted statistics");
  const auto exceed =
      std::count_if(permuted.begin(), permuted.end(), [&](double s) { return s > observed; });
  return static_cast<double>(exceed) / static_cast<double>(permuted.size());
}

namespace {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ChanceSummary summarize(std::span<const double> values) {
  ChanceSummary s;
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const Eigen::Map<const VectorXd> v(sorted.data(), static_cast<Index>(sorted.size()));
  s.mean = v.mean();
  s.sd = sorted.size() > 1 ? std::sqrt(sample_variance(v)) : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q025 = quantile_sorted(sorted, 0.025);
  s.q05 = quantile_sorted(sorted, 0.05);
  s.q25 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q75 = quantile_sorted(sorted, 0.75);
  s.q95 = quantile_sorted(sorted, 0.95);
  s.q975 = quantile_sorted(sorted, 0.975);
  return s;
}

PermutationReport run_permutation_test(const Dataset& d, const PredictorSpec& spec,
                                       const PermutationOptions& options) {
  return run_permutation_test(d, spec, options, RandomStream(options.seed));
}

PermutationReport run_permutation_test(const Dataset& d, const PredictorSpec& spec,
                                       const PermutationOptions& options,
                                       const RandomStream& root) {
  options.validate();
  spec.validate();

  PermutationReport report;
  report.n_permutations = options.permutations;
  report.alpha = options.alpha;
  report.seed = options.seed;
  report.statistic = options.statistic;
  report.predictor = spec;
  report.n = d.n();
  report.n_treated = d.n_treated();
  report.n_control = d.n_control();

  // Steps 1-2 on the observed labels.
  const PiteResult observed = estimate_pite(d, spec, root.substream(0).substream(1));
  report.observed_sd = spread_statistic(observed.pite, options.statistic);
  report.mean_pite = observed.mean;
  report.raw_ate = observed.raw_ate;
  report.effect_size = observed.effect_size;

  // Steps 3-6, one slot per permutation.
  report.permuted_sds.resize(options.permutations);
  parallel_for(static_cast<std::size_t>(options.permutations), options.threads,
               [&](std::size_t k) {
                 const std::uint64_t index = k + 1;
                 const RandomStream stream = root.substream(index);
                 try {
                   const Dataset permuted = permute_treatment(d, stream.substream(0));
                   const VectorXd pite = predict_pite(permuted, spec, stream.substream(1));
                   report.permuted_sds(static_cast<Index>(k)) =
                       spread_statistic(pite, options.statistic);
                 } catch (const Error& e) {
                   throw PermutationFitFailure(index, e.what());
                 }
               });

  // Steps 7-8.
  const std::span<const double> permuted(report.permuted_sds.data(),
                                         static_cast<std::size_t>(report.permuted_sds.size()));
  report.p_value = permutation_p_value(report.observed_sd, permuted);
  report.reject = report.p_value < options.alpha;
  report.chance_sd_summary = summarize(permuted);
  return report;
}

std::optional<std::uint64_t> assignment_count(Index n, Index n_treated, std::uint64_t cap) {
  if (n_treated < 0 || n_treated > n) return 0;
  const Index k = std::min(n_treated, n - n_treated);
  std::uint64_t c = 1;
  for (Index i = 1; i <= k; ++i) {
    // c * (n - k + i) / i stays integral at every step.
    c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    if (c > cap) return std::nullopt;
  }
  return c;
}

VectorXd exhaustive_null_distribution(const Dataset& d, const PredictorSpec& spec,
                                      const RandomStream& stream, SpreadStatistic statistic,
                                      unsigned threads) {
  spec.validate();
  const Index n = d.n();
  const Index n_t = d.n_treated();
  const auto count = assignment_count(n, n_t, kMaxExhaustiveAssignments);
  if (!count) {
    throw TooLarge("C(" + std::to_string(n) + ", " + std::to_string(n_t) + ") exceeds " +
                   std::to_string(kMaxExhaustiveAssignments) + " assignments");
  }

  // Lexicographic k-subsets of {0..n-1}.
  std::vector<VectorXi> assignments;
  assignments.reserve(static_cast<std::size_t>(*count));
  std::vector<Index> chosen(static_cast<std::size_t>(n_t));
  for (Index i = 0; i < n_t; ++i) chosen[static_cast<std::size_t>(i)] = i;
  for (;;) {
    VectorXi labels = VectorXi::Zero(n);
    for (Index i : chosen) labels(i) = 1;
    assignments.push_back(std::move(labels));
    Index pos = n_t - 1;
    while (pos >= 0 && chosen[static_cast<std::size_t>(pos)] == n - n_t + pos) --pos;
    if (pos < 0) break;
    ++chosen[static_cast<std::size_t>(pos)];
    for (Index j = pos + 1; j < n_t; ++j) {
      chosen[static_cast<std::size_t>(j)] = chosen[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  VectorXd out(static_cast<Index>(assignments.size()));
  parallel_for(assignments.size(), threads, [&](std::size_t k) {
    const Dataset relabeled = d.with_treatment(assignments[k]);
    out(static_cast<Index>(k)) =
        spread_statistic(predict_pite(relabeled, spec, stream.substream(k)), statistic);
  });
  return out;
}

}  // namespace pite
