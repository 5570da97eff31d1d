#include "pite/csv.hpp"

#include "pite/errors.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace pite {

namespace {

std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(field));
  return fields;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Table read_csv(std::istream& in) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
      }
      if (blank(line)) continue;
      table.header = split_record(line, line_no);
      have_header = true;
      continue;
    }
    if (blank(line)) continue;
    table.rows.push_back(split_record(line, line_no));
  }
  if (!have_header) throw DataError("CSV input has no header row");
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

void write_csv(std::ostream& out, const Dataset& d, const std::string& outcome_name,
               const std::string& treatment_name) {
  out << quote_if_needed(outcome_name) << ',' << quote_if_needed(treatment_name);
  for (const auto& name : d.covariate_names()) out << ',' << quote_if_needed(name);
  out << '\n';
  const MatrixXd& x = d.covariates();
  for (Index i = 0; i < d.n(); ++i) {
    out << format_double(d.outcome()(i)) << ',' << d.treatment()(i);
    for (Index j = 0; j < d.p(); ++j) out << ',' << format_double(x(i, j));
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& d,
               const std::string& outcome_name, const std::string& treatment_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  write_csv(out, d, outcome_name, treatment_name);
  if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

}  // namespace pite
