#include "pite/serialize.hpp"

#include "pite/csv.hpp"
#include "pite/errors.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace pite {

using nlohmann::json;

const char* tool_version() { return PITE_VERSION; }

void to_json(json& j, const ForestParams& p) {
  j = json{{"trees", p.n_trees},
           {"max_depth", p.max_depth},
           {"nsplit", p.n_split_points},
           {"min_leaf", p.min_leaf_size},
           {"bootstrap", p.bootstrap}};
  switch (p.mtry_rule) {
    case MtryRule::third: j["mtry"] = "third"; break;
    case MtryRule::all: j["mtry"] = "all"; break;
    case MtryRule::fixed: j["mtry"] = p.mtry; break;
  }
}

void from_json(const json& j, ForestParams& p) {
  p = ForestParams{};
  p.n_trees = j.value("trees", p.n_trees);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.n_split_points = j.value("nsplit", p.n_split_points);
  p.min_leaf_size = j.value("min_leaf", p.min_leaf_size);
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  if (j.contains("mtry")) {
    const json& m = j.at("mtry");
    if (m.is_string()) {
      const auto s = m.get<std::string>();
      if (s == "third") {
        p.mtry_rule = MtryRule::third;
      } else if (s == "all") {
        p.mtry_rule = MtryRule::all;
      } else {
        throw ConfigError("mtry must be \"third\", \"all\" or a positive integer");
      }
    } else {
      p.mtry_rule = MtryRule::fixed;
      p.mtry = m.get<int>();
    }
  }
}

void to_json(json& j, const PredictorSpec& s) {
  if (s.kind == PredictorKind::linear) {
    j = json{{"model", "lm"}};
  } else {
    j = s.forest;
    j["model"] = "rf";
  }
}

void from_json(const json& j, PredictorSpec& s) {
  const auto model = j.value("model", std::string("lm"));
  if (model == "lm" || model == "linear") {
    s = PredictorSpec::linear();
  } else if (model == "rf" || model == "forest") {
    s = PredictorSpec::random_forest(j.get<ForestParams>());
  } else {
    throw ConfigError("unknown model '" + model + "' (expected lm or rf)");
  }
}

void to_json(json& j, const NullDesign& d) {
  j = json{{"type", "null"},
           {"n", d.n},
           {"ate", d.ate},
           {"n_nuisance_cont", d.n_nuisance_cont},
           {"n_nuisance_bin", d.n_nuisance_bin},
           {"residual_sd", d.residual_sd},
           {"seed", d.seed}};
}

void from_json(const json& j, NullDesign& d) {
  d = NullDesign{};
  d.n = j.value("n", d.n);
  d.ate = j.value("ate", d.ate);
  d.n_nuisance_cont = j.value("n_nuisance_cont", d.n_nuisance_cont);
  d.n_nuisance_bin = j.value("n_nuisance_bin", d.n_nuisance_bin);
  d.residual_sd = j.value("residual_sd", d.residual_sd);
  d.seed = j.value("seed", d.seed);
}

void to_json(json& j, const AlsDesign& d) {
  j = json{{"type", "als"},
           {"n", d.n},
           {"target_effect_size", d.target_effect_size},
           {"spread", to_string(d.spread)},
           {"n_nuisance", d.n_nuisance},
           {"residual_sd", d.residual_sd},
           {"ate", d.ate},
           {"seed", d.seed}};
  if (d.correlation) {
    json rows = json::array();
    for (Index r = 0; r < d.correlation->rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < d.correlation->cols(); ++c) row.push_back((*d.correlation)(r, c));
      rows.push_back(std::move(row));
    }
    j["correlation"] = std::move(rows);
  } else {
    j["correlation"] = nullptr;
  }
}

void from_json(const json& j, AlsDesign& d) {
  d = AlsDesign{};
  d.n = j.value("n", d.n);
  d.target_effect_size = j.value("target_effect_size", d.target_effect_size);
  if (j.contains("spread")) {
    const auto name = j.at("spread").get<std::string>();
    const auto spread = spread_from_string(name);
    if (!spread) throw ConfigError("unknown spread '" + name + "'");
    d.spread = *spread;
  }
  d.n_nuisance = j.value("n_nuisance", d.n_nuisance);
  d.residual_sd = j.value("residual_sd", d.residual_sd);
  d.ate = j.value("ate", d.ate);
  d.seed = j.value("seed", d.seed);
  if (j.contains("correlation") && !j.at("correlation").is_null()) {
    const json& rows = j.at("correlation");
    const auto k = static_cast<Index>(rows.size());
    MatrixXd r(k, k);
    for (Index a = 0; a < k; ++a) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(a)].size()) != k) {
        throw ConfigError("correlation matrix must be square");
      }
      for (Index b = 0; b < k; ++b) {
        r(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<double>();
      }
    }
    d.correlation = std::move(r);
  }
}

json design_to_json(const Design& d) {
  return std::visit([](const auto& x) { return json(x); }, d);
}

Design design_from_json(const json& j) {
  const auto type = j.value("type", std::string());
  if (type == "null") return j.get<NullDesign>();
  if (type == "als") return j.get<AlsDesign>();
  throw ConfigError("design type must be \"null\" or \"als\"");
}

void to_json(json& j, const ExperimentCell& c) {
  j = json{{"design", design_to_json(c.design)},
           {"predictor", c.predictor},
           {"permutations", c.permutations},
           {"replications", c.replications},
           {"alpha", c.alpha},
           {"label", c.label}};
  if (c.stream_index) {
    j["stream_index"] = *c.stream_index;
  } else {
    j["stream_index"] = nullptr;
  }
}

void from_json(const json& j, ExperimentCell& c) {
  c = ExperimentCell{};
  c.design = design_from_json(j.at("design"));
  if (j.contains("predictor")) c.predictor = j.at("predictor").get<PredictorSpec>();
  c.permutations = j.value("permutations", c.permutations);
  c.replications = j.value("replications", c.replications);
  c.alpha = j.value("alpha", c.alpha);
  c.label = j.value("label", std::string());
  if (j.contains("stream_index") && !j.at("stream_index").is_null()) {
    c.stream_index = j.at("stream_index").get<std::uint64_t>();
  }
}

void to_json(json& j, const ExperimentGrid& g) {
  j = json{{"label", g.label}, {"master_seed", g.master_seed}, {"cells", g.cells}};
}

void from_json(const json& j, ExperimentGrid& g) {
  g = ExperimentGrid{};
  g.label = j.value("label", std::string());
  g.master_seed = j.value("master_seed", g.master_seed);
  g.cells = j.at("cells").get<std::vector<ExperimentCell>>();
}

void to_json(json& j, const CellResult& r) {
  j = json{{"cell_index", r.cell_index},       {"replications", r.replications},
           {"rejections", r.rejections},       {"rejection_rate", r.rejection_rate},
           {"mean_p_value", r.mean_p_value},   {"half_width", r.half_width},
           {"p_values", r.p_values}};
}

void from_json(const json& j, CellResult& r) {
  r = CellResult{};
  r.cell_index = j.at("cell_index").get<Index>();
  r.replications = j.at("replications").get<Index>();
  r.rejections = j.at("rejections").get<Index>();
  r.rejection_rate = j.at("rejection_rate").get<double>();
  r.mean_p_value = j.at("mean_p_value").get<double>();
  r.half_width = j.at("half_width").get<double>();
  r.p_values = j.at("p_values").get<std::vector<double>>();
}

void to_json(json& j, const ChanceSummary& s) {
  j = json{{"mean", s.mean},     {"sd", s.sd},       {"min", s.min},
           {"q025", s.q025},     {"q05", s.q05},     {"q25", s.q25},
           {"median", s.median}, {"q75", s.q75},     {"q95", s.q95},
           {"q975", s.q975},     {"max", s.max}};
}

void to_json(json& j, const PermutationReport& r) {
  j = json{{"observed_sd", r.observed_sd},
           {"p_value", r.p_value},
           {"reject", r.reject},
           {"alpha", r.alpha},
           {"n_permutations", r.n_permutations},
           {"seed", r.seed},
           {"statistic", r.statistic == SpreadStatistic::sd ? "sd" : "variance"},
           {"predictor", r.predictor},
           {"chance_sd_summary", r.chance_sd_summary},
           {"n", r.n},
           {"n_treated", r.n_treated},
           {"n_control", r.n_control},
           {"mean_pite", r.mean_pite},
           {"raw_ate", r.raw_ate},
           {"effect_size", r.effect_size}};
  j["permuted_sds"] = std::vector<double>(r.permuted_sds.data(),
                                          r.permuted_sds.data() + r.permuted_sds.size());
}

void to_json(json& j, const ScreeningResult& r) {
  json terms = json::array();
  json selected = json::array();
  for (const auto& t : r.terms) {
    terms.push_back(json{{"covariate", t.name},
                         {"index", t.covariate},
                         {"estimate", t.estimate},
                         {"std_error", t.std_error},
                         {"t_statistic", t.t_statistic},
                         {"p_value", t.p_value},
                         {"selected", t.selected}});
    if (t.selected) selected.push_back(t.name);
  }
  j = json{{"alpha", r.alpha}, {"selected", selected}, {"interactions", terms}};
}

std::string grid_fingerprint(const ExperimentGrid& grid) {
  const std::string text = json(grid).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

json make_document(const std::string& format, const json& config, const json& result) {
  return json{{"format", format},
              {"format_version", kFormatVersion},
              {"tool_version", tool_version()},
              {"config", config},
              {"result", result}};
}

json table_to_json(const SimulationTable& table) {
  json cells = json::array();
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    json entry = table.grid.cells[i];
    entry["result"] = table.cells[i];
    cells.push_back(std::move(entry));
  }
  return json{{"label", table.grid.label}, {"master_seed", table.grid.master_seed},
              {"cells", std::move(cells)}};
}

void write_table_csv(std::ostream& out, const SimulationTable& table) {
  out << "cell,label,model,sample_size,nuisance_continuous,nuisance_binary,ate,effect_size,"
         "condition,replications,permutations,alpha,rejection_rate,half_width,mean_p_value\n";
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    const ExperimentCell& cell = table.grid.cells[i];
    const CellResult& r = table.cells[i];
    out << i << ",\"" << cell.label << "\"," << (cell.predictor.kind == PredictorKind::linear ? "lm" : "rf")
        << ',';
    std::visit(
        [&](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, NullDesign>) {
            out << d.n << ',' << d.n_nuisance_cont << ',' << d.n_nuisance_bin << ','
                << format_double(d.ate) << ",,";
          } else {
            out << d.n << ',' << d.n_nuisance_cont() << ',' << d.n_nuisance_bin() << ','
                << format_double(d.ate) << ',' << format_double(d.target_effect_size) << ','
                << table_label(d.spread);
          }
        },
        cell.design);
    out << ',' << r.replications << ',' << cell.permutations << ',' << format_double(cell.alpha)
        << ',' << format_double(r.rejection_rate) << ',' << format_double(r.half_width) << ','
        << format_double(r.mean_p_value) << '\n';
  }
}

void write_histogram(std::ostream& out, const PermutationReport& report) {
  out << "# observed_sd=" << format_double(report.observed_sd) << '\n';
  out << "# n_permutations=" << report.n_permutations << '\n';
  for (Index k = 0; k < report.permuted_sds.size(); ++k) {
    out << format_double(report.permuted_sds(k)) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

}  // namespace pite
