#pragma once

#include "pite/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace pite {

/// Minimal RFC 4180 reader: header row, comma separated, optional double
/// quotes with "" escapes. Blank trailing lines are ignored.
Table read_csv(std::istream& in);
Table read_csv(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Writes `outcome_name,treatment_name,<covariates...>` with round-trip
/// exact numbers.
void write_csv(std::ostream& out, const Dataset& d, const std::string& outcome_name = "y",
               const std::string& treatment_name = "trt");
void write_csv(const std::filesystem::path& path, const Dataset& d,
               const std::string& outcome_name = "y", const std::string& treatment_name = "trt");

}  // namespace pite
