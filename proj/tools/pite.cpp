#include "pite/csv.hpp"
#include "pite/errors.hpp"
#include "pite/harness.hpp"
#include "pite/permutation.hpp"
#include "pite/pite.hpp"
#include "pite/serialize.hpp"
#include "pite/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

// Flat JSON object -> CLI11 config items for the selected subcommand. Keys use
// the long flag names with '_' or '-' interchangeable; arrays become
// multi-valued options.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<std::string> parents;
    for (const CLI::App* sub : app_->get_subcommands()) parents.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      for (char& c : item.name) {
        if (c == '_') c = '-';
      }
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    return v.dump();
  }

  const CLI::App* app_;
};

struct PredictorArgs {
  std::string model = "lm";
  int trees = 500;
  int max_depth = 10;
  int nsplit = 10;
  int min_leaf = 5;
  std::string mtry = "third";
  bool bootstrap = true;

  void add_to(CLI::App& app) {
    app.add_option("--model", model, "Arm model: lm (linear regression) or rf (random forest)")
        ->check(CLI::IsMember({"lm", "rf"}))
        ->capture_default_str();
    app.add_option("--trees", trees, "Forest: number of trees")->capture_default_str();
    app.add_option("--max-depth", max_depth, "Forest: maximum tree depth")->capture_default_str();
    app.add_option("--nsplit", nsplit, "Forest: random split points per feature")
        ->capture_default_str();
    app.add_option("--min-leaf", min_leaf, "Forest: minimum rows per leaf")->capture_default_str();
    app.add_option("--mtry", mtry, "Forest: features per split (third, all or a count)")
        ->capture_default_str();
    app.add_flag("--bootstrap,!--no-bootstrap", bootstrap, "Forest: bootstrap rows per tree");
  }

  pite::PredictorSpec spec() const {
    json j{{"model", model},     {"trees", trees},       {"max_depth", max_depth},
           {"nsplit", nsplit},   {"min_leaf", min_leaf}, {"bootstrap", bootstrap}};
    if (mtry == "third" || mtry == "all") {
      j["mtry"] = mtry;
    } else {
      try {
        std::size_t used = 0;
        j["mtry"] = std::stoi(mtry, &used);
        if (used != mtry.size()) throw std::invalid_argument(mtry);
      } catch (const std::logic_error&) {
        throw pite::ConfigError("--mtry must be third, all or an integer");
      }
    }
    auto s = j.get<pite::PredictorSpec>();
    s.validate();
    return s;
  }
};

struct DataArgs {
  std::string path;
  std::string outcome = "y";
  std::string treatment = "trt";
  std::vector<std::string> covariates;
  std::vector<std::string> binary;
  std::vector<std::string> continuous;

  void add_to(CLI::App& app) {
    app.add_option("--data", path, "Input CSV with a header row")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--outcome", outcome, "Outcome column")->capture_default_str();
    app.add_option("--treatment", treatment, "Treatment column (0/1)")->capture_default_str();
    app.add_option("--covariates", covariates, "Covariate columns (default: all others)")
        ->delimiter(',');
    app.add_option("--binary", binary, "Force these covariates to be binary")->delimiter(',');
    app.add_option("--continuous", continuous, "Force these covariates to be continuous")
        ->delimiter(',');
  }

  pite::Dataset load() const {
    pite::Schema schema;
    schema.outcome = outcome;
    schema.treatment = treatment;
    schema.covariates = covariates;
    for (const auto& name : binary) schema.kind_overrides[name] = pite::CovariateKind::binary;
    for (const auto& name : continuous) {
      schema.kind_overrides[name] = pite::CovariateKind::continuous;
    }
    return pite::validate(pite::read_csv(std::filesystem::path(path)), schema);
  }

  json to_json() const {
    return json{{"data", path},           {"outcome", outcome}, {"treatment", treatment},
                {"covariates", covariates}, {"binary", binary}, {"continuous", continuous}};
  }
};

struct DesignArgs {
  std::string design = "null";
  pite::Index n = 0;
  double ate = 0.0;
  pite::Index nuisance_cont = 0;
  pite::Index nuisance_bin = 0;
  pite::Index nuisance = 0;
  double effect_size = 0.19;
  std::string spread = "spread";
  double residual_sd = 1.0;
  std::string correlation;

  void add_to(CLI::App& app) {
    app.add_option("--design", design, "null or als")
        ->check(CLI::IsMember({"null", "als"}))
        ->capture_default_str();
    app.add_option("--n", n, "Sample size (default 250 null, 1000 als)");
    app.add_option("--ate", ate, "Average treatment effect")->capture_default_str();
    app.add_option("--nuisance-cont", nuisance_cont, "Null design: continuous nuisance covariates");
    app.add_option("--nuisance-bin", nuisance_bin, "Null design: binary nuisance covariates");
    app.add_option("--nuisance", nuisance, "ALS design: nuisance covariates (split evenly)");
    app.add_option("--effect-size", effect_size, "ALS design: target PITE effect size")
        ->capture_default_str();
    app.add_option("--spread", spread,
                   "ALS design: spread, cont90_10, cont75_25, cont50_50, cont25_75, bin90_10")
        ->capture_default_str();
    app.add_option("--residual-sd", residual_sd, "Residual SD")->capture_default_str();
    app.add_option("--correlation", correlation,
                   "ALS design: JSON file with a 7x7 covariate correlation matrix")
        ->check(CLI::ExistingFile);
  }

  pite::Design build(std::uint64_t seed) const {
    if (design == "null") {
      pite::NullDesign d;
      if (n > 0) d.n = n;
      d.ate = ate;
      d.n_nuisance_cont = nuisance_cont;
      d.n_nuisance_bin = nuisance_bin;
      d.residual_sd = residual_sd;
      d.seed = seed;
      d.validate();
      return d;
    }
    pite::AlsDesign d;
    if (n > 0) d.n = n;
    d.ate = ate;
    d.n_nuisance = nuisance;
    d.target_effect_size = effect_size;
    const auto s = pite::spread_from_string(spread);
    if (!s) throw pite::ConfigError("unknown spread '" + spread + "'");
    d.spread = *s;
    d.residual_sd = residual_sd;
    d.seed = seed;
    if (!correlation.empty()) {
      std::ifstream in(correlation);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw pite::ConfigError("correlation file: " + std::string(e.what()));
      }
      json holder = json(d);
      holder["correlation"] = j;
      d = holder.get<pite::AlsDesign>();
    }
    d.validate();
    return d;
  }
};

struct OutputArgs {
  std::string out;

  void add_to(CLI::App& app, const std::string& what) {
    app.add_option("--out", out, what + " (default: standard output)");
  }

  void emit(const json& document) const {
    const std::string text = document.dump(2) + "\n";
    if (out.empty() || out == "-") {
      std::cout << text;
      std::cout.flush();
    } else {
      pite::write_text_file(out, text);
    }
  }
};

int exit_code(pite::ErrorCategory category) {
  switch (category) {
    case pite::ErrorCategory::config: return 2;
    case pite::ErrorCategory::data: return 3;
    case pite::ErrorCategory::numerical: return 4;
  }
  return 1;
}

struct SimulateArgs {
  std::string preset = "table";
  std::string grid_path;
  std::string scale = "desk";
  std::string models = "both";
  std::optional<pite::Index> reps;
  std::optional<pite::Index> perms;
  std::optional<int> trees;
  double effect_size = 0.19;
  std::string checkpoint;
  std::string csv;
  std::string timing_out;
  bool quiet = false;

  void add_to(CLI::App& app, bool power) {
    app.add_option("--grid", grid_path, "JSON experiment grid (replaces the built-in table)")
        ->check(CLI::ExistingFile);
    app.add_option("--scale", scale, "Built-in table size: desk or full")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    app.add_option("--models", models, "Built-in table models: lm, rf or both")
        ->check(CLI::IsMember({"lm", "rf", "both"}))
        ->capture_default_str();
    app.add_option("--reps", reps, "Override replications for every cell");
    app.add_option("--perms", perms, "Override permutations for every cell");
    app.add_option("--trees", trees, "Override forest tree count for every cell");
    if (power) {
      app.add_option("--effect-size", effect_size, "Built-in power table effect size")
          ->capture_default_str();
    }
    app.add_option("--checkpoint", checkpoint, "JSONL file of finished cells (resumable)");
    app.add_option("--csv", csv, "Also write the table as CSV");
    app.add_option("--timing-out", timing_out, "Write per-cell wall times as CSV");
    app.add_flag("--quiet", quiet, "No per-cell progress on standard error");
  }

  pite::ExperimentGrid grid(bool power, std::uint64_t seed) const {
    pite::ExperimentGrid g;
    if (!grid_path.empty()) {
      std::ifstream in(grid_path);
      try {
        g = json::parse(in).get<pite::ExperimentGrid>();
      } catch (const json::exception& e) {
        throw pite::ConfigError("grid file: " + std::string(e.what()));
      }
      g.master_seed = seed;
    } else {
      const pite::Scale s = scale == "full" ? pite::Scale::full() : pite::Scale::desk();
      const pite::ModelChoice m = models == "lm"   ? pite::ModelChoice::linear
                                  : models == "rf" ? pite::ModelChoice::forest
                                                   : pite::ModelChoice::both;
      g = power ? pite::power_table_grid(effect_size, s, m, seed)
                : pite::type1_table_grid(s, m, seed);
    }
    for (auto& cell : g.cells) {
      if (reps) cell.replications = *reps;
      if (perms) cell.permutations = *perms;
      if (trees && cell.predictor.kind == pite::PredictorKind::forest) {
        cell.predictor.forest.n_trees = *trees;
      }
    }
    g.validate();
    return g;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permutation test for heterogeneity of treatment effects using predicted "
               "individual treatment effects (PITE)"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file whose keys are flag names");
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", std::string(pite::tool_version()));
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  unsigned threads = 0;
  auto add_common = [&](CLI::App& sub, bool seed_required) {
    auto* s = sub.add_option("--seed", seed, "Master random seed");
    if (seed_required) {
      s->required();
    } else {
      s->capture_default_str();
    }
    sub.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
  };

  // test
  auto* test = app.add_subcommand("test", "Permutation test on a CSV dataset");
  DataArgs test_data;
  PredictorArgs test_model;
  OutputArgs test_out;
  pite::Index permutations = 1000;
  double alpha = 0.05;
  std::string statistic = "sd";
  std::string sds_out;
  test_data.add_to(*test);
  test_model.add_to(*test);
  test->add_option("--permutations", permutations, "Label permutations")->capture_default_str();
  test->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  test->add_option("--statistic", statistic, "Spread statistic: sd or variance")
      ->check(CLI::IsMember({"sd", "variance"}))
      ->capture_default_str();
  test->add_option("--sds-out", sds_out, "Write the permuted SDs (one per line) for a histogram");
  test_out.add_to(*test, "JSON report");
  add_common(*test, false);

  // screen
  auto* screen = app.add_subcommand("screen", "Screen covariates by treatment interaction tests");
  DataArgs screen_data;
  OutputArgs screen_out;
  double screen_alpha = 0.05;
  screen_data.add_to(*screen);
  screen->add_option("--alpha", screen_alpha, "Interaction p-value threshold")
      ->capture_default_str();
  screen_out.add_to(*screen, "JSON document");
  screen->add_option("--threads", threads, "Accepted for symmetry; screening runs on one thread");

  // generate
  auto* generate = app.add_subcommand("generate", "Simulate a trial dataset");
  DesignArgs design_args;
  std::string generate_out;
  std::string sidecar;
  design_args.add_to(*generate);
  generate->add_option("--out", generate_out, "Output CSV")->required();
  generate->add_option("--sidecar", sidecar, "Audit JSON (default: <out>.json)");
  add_common(*generate, true);

  // simulate
  auto* type1 = app.add_subcommand("simulate-type1", "Type I error table");
  auto* power = app.add_subcommand("simulate-power", "Power table");
  SimulateArgs sim;
  OutputArgs sim_out;
  for (auto* sub : {type1, power}) {
    sim.add_to(*sub, sub == power);
    sim_out.add_to(*sub, "JSON table");
    add_common(*sub, true);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (test->parsed()) {
      const pite::Dataset d = test_data.load();
      pite::PermutationOptions options;
      options.permutations = permutations;
      options.alpha = alpha;
      options.seed = seed;
      options.threads = threads;
      options.statistic =
          statistic == "variance" ? pite::SpreadStatistic::variance : pite::SpreadStatistic::sd;
      options.validate();
      const pite::PredictorSpec spec = test_model.spec();
      const pite::PermutationReport report = pite::run_permutation_test(d, spec, options);

      json config = test_data.to_json();
      config["predictor"] = spec;
      config["permutations"] = permutations;
      config["alpha"] = alpha;
      config["statistic"] = statistic;
      config["seed"] = seed;
      test_out.emit(pite::make_document("pite-permutation-test", config, report));
      if (!sds_out.empty()) {
        std::ostringstream hist;
        pite::write_histogram(hist, report);
        pite::write_text_file(sds_out, hist.str());
      }
    } else if (screen->parsed()) {
      const pite::Dataset d = screen_data.load();
      const pite::ScreeningResult result = pite::screen_interactions(d, screen_alpha);
      json config = screen_data.to_json();
      config["alpha"] = screen_alpha;
      screen_out.emit(pite::make_document("pite-screen", config, result));
    } else if (generate->parsed()) {
      const pite::Design design = design_args.build(seed);
      const pite::GeneratedData g = std::visit(
          [](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, pite::NullDesign>) {
              return pite::generate_null(d);
            } else {
              return pite::generate_als(d);
            }
          },
          design);
      std::ostringstream csv;
      pite::write_csv(csv, g.data);
      pite::write_text_file(generate_out, csv.str());

      json audit{{"design", pite::design_to_json(design)},
                 {"seed", seed},
                 {"n", g.data.n()},
                 {"covariates", g.data.covariate_names()},
                 {"true_effect", std::vector<double>(g.true_effect.data(),
                                                     g.true_effect.data() + g.true_effect.size())}};
      if (std::holds_alternative<pite::AlsDesign>(design)) {
        audit["scale"] = g.scale;
        audit["delta"] = std::vector<double>(g.delta.data(), g.delta.data() + g.delta.size());
        const pite::VectorXd centered =
            g.true_effect.array() - g.true_effect.mean();
        audit["empirical_effect_size"] = pite::pite_effect_size(centered, g.data);
      }
      json config{{"design", pite::design_to_json(design)}, {"seed", seed}};
      pite::write_text_file(sidecar.empty() ? generate_out + ".json" : sidecar,
                            pite::make_document("pite-generated-data", config, audit).dump(2) +
                                "\n");
    } else {
      const bool is_power = power->parsed();
      const pite::ExperimentGrid grid = sim.grid(is_power, seed);
      pite::HarnessOptions options;
      options.threads = threads;
      if (!sim.checkpoint.empty()) options.checkpoint = sim.checkpoint;
      if (!sim.quiet) {
        options.on_cell_done = [](const pite::ExperimentCell& cell, const pite::CellResult& r) {
          std::cerr << "cell " << r.cell_index << " [" << cell.label
                    << "] rate=" << pite::format_double(r.rejection_rate) << " +/- "
                    << pite::format_double(r.half_width) << '\n';
        };
      }
      const pite::SimulationTable table =
          is_power ? pite::run_power(grid, options) : pite::run_type1(grid, options);
      json config{{"grid", grid}, {"seed", seed}};
      sim_out.emit(pite::make_document(is_power ? "pite-power-table" : "pite-type1-table",
                                       config, pite::table_to_json(table)));
      if (!sim.csv.empty()) {
        std::ostringstream out;
        pite::write_table_csv(out, table);
        pite::write_text_file(sim.csv, out.str());
      }
      if (!sim.timing_out.empty()) {
        std::ostringstream out;
        out << "cell,label,wall_time_seconds\n";
        for (std::size_t i = 0; i < table.cells.size(); ++i) {
          out << i << ",\"" << grid.cells[i].label << "\","
              << pite::format_double(table.cells[i].wall_time_seconds) << '\n';
        }
        pite::write_text_file(sim.timing_out, out.str());
      }
    }
  } catch (const pite::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
