#pragma once

#include "pite/harness.hpp"
#include "pite/permutation.hpp"
#include "pite/pite.hpp"
#include "pite/simgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace pite {

inline constexpr int kFormatVersion = 1;

const char* tool_version();

void to_json(nlohmann::json& j, const ForestParams& p);
void from_json(const nlohmann::json& j, ForestParams& p);
void to_json(nlohmann::json& j, const PredictorSpec& s);
void from_json(const nlohmann::json& j, PredictorSpec& s);

void to_json(nlohmann::json& j, const NullDesign& d);
void from_json(const nlohmann::json& j, NullDesign& d);
void to_json(nlohmann::json& j, const AlsDesign& d);
void from_json(const nlohmann::json& j, AlsDesign& d);
nlohmann::json design_to_json(const Design& d);
Design design_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const ExperimentCell& c);
void from_json(const nlohmann::json& j, ExperimentCell& c);
void to_json(nlohmann::json& j, const ExperimentGrid& g);
void from_json(const nlohmann::json& j, ExperimentGrid& g);

/// Omits wall time, so documents are reproducible byte for byte.
void to_json(nlohmann::json& j, const CellResult& r);
void from_json(const nlohmann::json& j, CellResult& r);

void to_json(nlohmann::json& j, const ChanceSummary& s);
void to_json(nlohmann::json& j, const PermutationReport& r);
void to_json(nlohmann::json& j, const ScreeningResult& r);

/// Stable hash of the grid definition, used to match checkpoint entries.
std::string grid_fingerprint(const ExperimentGrid& grid);

/// Top-level document: format tag, versions, resolved config, result.
nlohmann::json make_document(const std::string& format, const nlohmann::json& config,
                             const nlohmann::json& result);

nlohmann::json table_to_json(const SimulationTable& table);

/// One row per cell: sample size, nuisance counts, condition, rejection rate,
/// half-width and run sizes.
void write_table_csv(std::ostream& out, const SimulationTable& table);

/// Plot-ready permutation distribution: "# observed_sd=<v>" and
/// "# n_permutations=<P>" header comments, then one permuted value per line.
void write_histogram(std::ostream& out, const PermutationReport& report);

/// Writes text to a file, throwing ConfigError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pite
