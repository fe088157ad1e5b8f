// Command-line front end: simulate, sweep, generate, pilot, analyze,
// sensitivity, heuristics and impute. Every run writes its outputs plus a
// manifest.json describing flags, seed and input digests.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lapret/core.hpp"
#include "lapret/datagen.hpp"
#include "lapret/estimator.hpp"
#include "lapret/io.hpp"
#include "lapret/rng.hpp"
#include "lapret/simulation.hpp"
#include "lapret/study.hpp"

namespace fs = std::filesystem;
using namespace lapret;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDesign = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::pilot_overlap: return kExitDesign;
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_eta:
    case ErrorCode::unknown_scenario:
    case ErrorCode::schema_error:
    case ErrorCode::duplicate_row:
    case ErrorCode::non_contiguous_days:
    case ErrorCode::dangling_event:
    case ErrorCode::dimension_mismatch: return kExitUsage;
    default: return kExitRuntime;
  }
}

struct DataFiles {
  std::string panel, covariates, events;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--panel", panel, "panel CSV (unit_id,day,outcome)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--covariates", covariates, "covariates CSV (unit_id,c1..ck)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--events", events, "events CSV (unit_id,event_indicator,event_day)")
        ->required()
        ->check(CLI::ExistingFile);
  }
  std::vector<UnitSeries> load() const { return data::ingest(fs::path(panel), fs::path(covariates), fs::path(events)); }
  void digest_into(RunManifest& m) const {
    for (const auto& p : {panel, covariates, events}) m.input_digests[p] = sha256_file(p);
  }
};

struct StudyFlags {
  double alpha = 0, epsilon = 0;
  std::string aggregation = "mean", undetected = "exclude", transform = "levels";
  std::optional<double> caliper;

  void add_to(CLI::App* cmd, bool required) {
    auto* a = cmd->add_option("--alpha", alpha, "LaPRET alpha (> 0)");
    auto* e = cmd->add_option("--epsilon", epsilon, "LaPRET epsilon (> 0)");
    if (required) {
      a->required();
      e->required();
    }
    cmd->add_option("--aggregation", aggregation, "mean or min")->check(CLI::IsMember({"mean", "min"}));
    cmd->add_option("--undetected", undetected, "exclude or zero")->check(CLI::IsMember({"exclude", "zero"}));
    cmd->add_option("--transform", transform, "levels or lagged-diff")->check(CLI::IsMember({"levels", "lagged-diff"}));
    cmd->add_option("--caliper", caliper, "max absolute logit distance for a match");
  }
  StudyConfig config() const {
    StudyConfig c;
    c.params = {alpha, epsilon};
    c.aggregation = parse_aggregation(aggregation);
    c.undetected = parse_undetected(undetected);
    c.transform = parse_transform(transform);
    c.caliper = caliper;
    return c;
  }
};

std::string to_text(const Json& j) { return j.dump(2) + "\n"; }

template <typename Writer>
std::string render(Writer&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

void write_manifest(const fs::path& path, RunManifest manifest) {
  manifest.timestamp = utc_timestamp();
  write_file_atomic(path, to_text(manifest.to_json()));
}

fs::path manifest_beside(const fs::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

std::set<UnitId> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::schema_error, "cannot open " + path.string());
  std::set<UnitId> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  return ids;
}

// simulate / sweep ------------------------------------------------------------

struct SimFlags {
  int scenario = 0;
  std::vector<double> sigmas, alphas, epsilons;
  std::vector<std::string> contaminations;
  int n = 600;
  std::uint64_t seed = 0;
  std::string undetected = "zero";
  std::string out;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--scenario", f.scenario, "simulation scenario (1, 2 or 3)")->required()->check(CLI::Range(1, 3));
  cmd->add_option("--sigma", f.sigmas, "noise sd; comma-separated list allowed")->delimiter(',');
  cmd->add_option("--contamination", f.contaminations, "f1..f4; comma-separated list allowed")
      ->delimiter(',')
      ->check(CLI::IsMember({"f1", "f2", "f3", "f4"}));
  cmd->add_option("--alpha", f.alphas, "alpha grid")->delimiter(',');
  cmd->add_option("--epsilon", f.epsilons, "epsilon grid")->delimiter(',');
  cmd->add_option("--n", f.n, "units per dataset (half treated)");
  cmd->add_option("--undetected", f.undetected, "exclude or zero")->check(CLI::IsMember({"exclude", "zero"}));
  cmd->add_option("--out", f.out, "sweep CSV path")->required();
}

int run_sim(const std::string& name, const SimFlags& f, const sim::SweepGrid& defaults) {
  sim::SweepGrid grid = defaults;
  if (!f.sigmas.empty()) grid.sigmas = f.sigmas;
  if (!f.alphas.empty()) grid.alphas = f.alphas;
  if (!f.epsilons.empty()) grid.epsilons = f.epsilons;
  if (!f.contaminations.empty()) {
    grid.contaminations.clear();
    for (const auto& c : f.contaminations) grid.contaminations.push_back(sim::parse_contamination(c));
  }
  const auto result = sim::sweep(f.scenario, grid, f.seed, f.n, parse_undetected(f.undetected));
  write_file_atomic(f.out, render([&](std::ostream& o) { write_sweep_csv(o, result); }));

  RunManifest m;
  m.subcommand = name;
  m.seed = f.seed;
  Json contaminations = Json::array();
  for (auto c : grid.contaminations) contaminations.push_back(sim::to_string(c));
  m.parameters = {{"scenario", f.scenario}, {"sigma", grid.sigmas},     {"contamination", contaminations},
                  {"alpha", grid.alphas},   {"epsilon", grid.epsilons}, {"n", f.n},
                  {"undetected", f.undetected}, {"out", f.out}};
  write_manifest(manifest_beside(f.out), m);
  return 0;
}

// generate ----------------------------------------------------------------------

struct GenerateFlags {
  std::string dma, dma_panel, out_dir;
  data::GeneratorSpec spec;
};

int run_generate(const GenerateFlags& f) {
  const auto dmas = data::read_dmas(fs::path(f.dma), fs::path(f.dma_panel));
  const auto units = data::generate_tradezones(dmas, f.spec);
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_file_atomic(dir / "panel.csv", render([&](std::ostream& o) { data::write_panel(o, units); }));
  write_file_atomic(dir / "covariates.csv", render([&](std::ostream& o) { data::write_covariates(o, units); }));
  write_file_atomic(dir / "events.csv", render([&](std::ostream& o) { data::write_events(o, units); }));

  RunManifest m;
  m.subcommand = "generate";
  m.seed = f.spec.seed;
  m.parameters = {{"sigma", f.spec.sigma},
                  {"h", f.spec.snow_threshold_h},
                  {"l", f.spec.control_threshold_l},
                  {"total", f.spec.total_tradezones},
                  {"n_units", units.size()}};
  m.input_digests[f.dma] = sha256_file(f.dma);
  m.input_digests[f.dma_panel] = sha256_file(f.dma_panel);
  write_manifest(dir / "manifest.json", m);
  return 0;
}

// pilot / analyze -----------------------------------------------------------------

struct PilotFlags {
  DataFiles files;
  StudyFlags study;
  double pilot_fraction = 878.0 / 3676.0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_pilot_cmd(const PilotFlags& f) {
  const auto units = f.files.load();
  const auto plan = split(units, f.pilot_fraction, f.seed, f.study.config());
  PilotDiagnostics diagnostics;
  const auto pilot = run_pilot(units, plan, &diagnostics);

  const auto digest = unit_set_digest(plan.pilot_unit_ids);
  Json doc = {{"d_hat", pilot.d_hat ? Json(*pilot.d_hat) : Json(nullptr)},
              {"d_floor", pilot.causal_window()},
              {"n_detected", pilot.n_detected},
              {"n_pairs", diagnostics.n_pairs},
              {"n_window_too_short", diagnostics.n_window_too_short},
              {"params", to_json(plan.config)},
              {"pilot_unit_digest", digest},
              {"plan", to_json(plan)},
              {"result", to_json(pilot)}};
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_file_atomic(dir / "pilot.json", to_text(doc));

  RunManifest m;
  m.subcommand = "pilot";
  m.seed = f.seed;
  m.parameters = {{"pilot_fraction", f.pilot_fraction}, {"config", to_json(plan.config)},
                  {"pilot_unit_digest", digest}};
  f.files.digest_into(m);
  write_manifest(dir / "manifest.json", m);
  return 0;
}

struct AnalyzeFlags {
  DataFiles files;
  std::string pilot_path, units_path, out_dir;
};

int run_analyze(const AnalyzeFlags& f) {
  const auto doc = Json::parse(read_file(f.pilot_path));
  auto plan = study_plan_from_json(doc.at("plan"));
  const auto pilot = pilot_result_from_json(doc.at("result"));
  if (unit_set_digest(plan.pilot_unit_ids) != doc.at("pilot_unit_digest").get<std::string>()) {
    throw Error(ErrorCode::schema_error, "pilot unit ids do not match the recorded digest");
  }
  if (!f.units_path.empty()) plan.main_unit_ids = read_id_list(f.units_path);

  const auto units = f.files.load();
  const auto result = run_main(units, plan, pilot);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_file_atomic(dir / "study.json", to_text(to_json(result)));
  write_file_atomic(dir / "effects.csv", render([&](std::ostream& o) { write_effects_csv(o, result.effects); }));

  RunManifest m;
  m.subcommand = "analyze";
  m.seed = plan.seed;
  m.parameters = {{"config", to_json(plan.config)}, {"n_main_units", plan.main_unit_ids.size()}};
  f.files.digest_into(m);
  m.input_digests[f.pilot_path] = sha256_file(f.pilot_path);
  if (!f.units_path.empty()) m.input_digests[f.units_path] = sha256_file(f.units_path);
  write_manifest(dir / "manifest.json", m);
  return 0;
}

// sensitivity ---------------------------------------------------------------------

struct SensitivityFlags {
  std::string dma, dma_panel, out_dir;
  std::vector<double> sigmas{2, 4, 8, 16, 32, 64, 128};
  StudyFlags study;
  double pilot_fraction = 878.0 / 3676.0;
  data::GeneratorSpec spec;
  std::uint64_t seed = 0;
};

int run_sensitivity(const SensitivityFlags& f) {
  const auto dmas = data::read_dmas(fs::path(f.dma), fs::path(f.dma_panel));
  std::vector<LabeledDataset> datasets;
  for (std::size_t k = 0; k < f.sigmas.size(); ++k) {
    auto spec = f.spec;
    spec.sigma = f.sigmas[k];
    spec.seed = derive_seed(f.seed, {static_cast<std::uint64_t>(k)}, "generate");
    datasets.push_back({"sigma_" + data::format_number(f.sigmas[k]), data::generate_tradezones(dmas, spec)});
  }
  const auto results = sensitivity_sweep(datasets, f.study.config(), f.pilot_fraction, f.seed);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  std::ostringstream summary;
  summary << "sigma,d_hat,d_floor,causal_window_days,n_detected\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    Json doc = {{"label", r.label}, {"sigma", f.sigmas[k]}, {"study", to_json(r.result)}};
    write_file_atomic(dir / ("study_" + r.label + ".json"), to_text(doc));
    const auto& p = r.result.pilot;
    summary << data::format_number(f.sigmas[k]) << ',' << (p.d_hat ? data::format_number(*p.d_hat) : "") << ','
            << p.causal_window() << ',' << r.result.causal_window_days << ',' << p.n_detected << '\n';
  }
  write_file_atomic(dir / "summary.csv", summary.str());

  RunManifest m;
  m.subcommand = "sensitivity";
  m.seed = f.seed;
  m.parameters = {{"sigmas", f.sigmas},
                  {"config", to_json(f.study.config())},
                  {"pilot_fraction", f.pilot_fraction},
                  {"h", f.spec.snow_threshold_h},
                  {"l", f.spec.control_threshold_l},
                  {"total", f.spec.total_tradezones}};
  m.input_digests[f.dma] = sha256_file(f.dma);
  m.input_digests[f.dma_panel] = sha256_file(f.dma_panel);
  write_manifest(dir / "manifest.json", m);
  return 0;
}

// heuristics / impute -----------------------------------------------------------

struct HeuristicsFlags {
  DataFiles files;
  std::string transform = "levels", units_path, out;
  std::uint64_t seed = 0;
};

int run_heuristics(const HeuristicsFlags& f) {
  auto units = f.files.load();
  if (!f.units_path.empty()) units = select_units(units, read_id_list(f.units_path));
  const auto transformed = apply_transform(units, parse_transform(f.transform));
  const auto pairs = match_pairs(transformed, std::nullopt);
  const auto ranges = heuristic_ranges(pairs);
  Json doc = to_json(ranges);
  doc["n_pairs"] = pairs.size();
  doc["transform"] = f.transform;
  write_file_atomic(f.out, to_text(doc));

  RunManifest m;
  m.subcommand = "heuristics";
  m.seed = f.seed;
  m.parameters = {{"transform", f.transform}};
  f.files.digest_into(m);
  write_manifest(manifest_beside(f.out), m);
  return 0;
}

struct ImputeFlags {
  std::string events, out_dir;
  double eta = 0;
  int replicates = 1;
  std::uint64_t seed = 0;
};

int run_impute(const ImputeFlags& f) {
  std::ifstream in(f.events, std::ios::binary);
  const auto units = data::read_events(in);
  const auto assignments = impute_treatment(units, f.eta, f.replicates, f.seed);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  std::ostringstream all;
  all << "replicate,unit_id,z\n";
  for (int r = 0; r < f.replicates; ++r) {
    std::ostringstream out;
    out << "unit_id,event_indicator,event_day\n";
    for (std::size_t i = 0; i < units.size(); ++i) {
      const auto& a = assignments[static_cast<std::size_t>(r) * units.size() + i];
      const auto& u = units[i];
      out << u.unit_id << ',' << (a.z ? 1 : 0) << ',';
      // Only units that are treated and observed carry a known event day.
      if (a.z && u.event_time) out << *u.event_time;
      out << '\n';
      all << r << ',' << u.unit_id << ',' << (a.z ? 1 : 0) << '\n';
    }
    write_file_atomic(dir / ("events_r" + std::to_string(r) + ".csv"), out.str());
  }
  write_file_atomic(dir / "assignments.csv", all.str());

  RunManifest m;
  m.subcommand = "impute";
  m.seed = f.seed;
  m.parameters = {{"eta", f.eta}, {"replicates", f.replicates}};
  m.input_digests[f.events] = sha256_file(f.events);
  write_manifest(dir / "manifest.json", m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal effects with unknown treatment time: LaPRET pilot studies and main-study effects"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::function<int()> action;

  SimFlags simulate_flags;
  auto* simulate = app.add_subcommand("simulate", "simulate one scenario and estimate d-hat");
  add_sim_flags(simulate, simulate_flags);
  simulate->add_option("--seed", simulate_flags.seed, "master seed");
  simulate->callback([&] {
    sim::SweepGrid defaults;
    defaults.sigmas = {0.0};
    defaults.contaminations = {sim::Contamination::f1};
    defaults.alphas = {10.0};
    defaults.epsilons = {0.2};
    action = [&, defaults] { return run_sim("simulate", simulate_flags, defaults); };
  });

  SimFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "reproduce the d-hat grid over (sigma, f, alpha, epsilon)");
  add_sim_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--seed", sweep_flags.seed, "master seed");
  sweep_cmd->callback([&] { action = [&] { return run_sim("sweep", sweep_flags, sim::SweepGrid{}); }; });

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "build synthetic tradezones from DMA inputs");
  generate->add_option("--dma", gen.dma, "dma.csv")->required()->check(CLI::ExistingFile);
  generate->add_option("--dma-panel", gen.dma_panel, "dma_panel.csv")->required()->check(CLI::ExistingFile);
  generate->add_option("--sigma", gen.spec.sigma, "tradezone noise sd")->required();
  generate->add_option("--snow-threshold", gen.spec.snow_threshold_h, "treatment snowfall threshold (kg/m^2)");
  generate->add_option("--control-threshold", gen.spec.control_threshold_l, "control snowfall ceiling (kg/m^2)");
  generate->add_option("--total", gen.spec.total_tradezones, "total tradezones");
  generate->add_option("--seed", gen.spec.seed, "seed");
  generate->add_option("--out-dir", gen.out_dir, "output directory")->required();
  generate->callback([&] { action = [&] { return run_generate(gen); }; });

  PilotFlags pilot;
  auto* pilot_cmd = app.add_subcommand("pilot", "split, then estimate d-hat on the pilot sample");
  pilot.files.add_to(pilot_cmd);
  pilot.study.add_to(pilot_cmd, true);
  pilot_cmd->add_option("--pilot-fraction", pilot.pilot_fraction, "share of units in the pilot");
  pilot_cmd->add_option("--seed", pilot.seed, "split seed");
  pilot_cmd->add_option("--out-dir", pilot.out_dir, "output directory")->required();
  pilot_cmd->callback([&] { action = [&] { return run_pilot_cmd(pilot); }; });

  AnalyzeFlags analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "main-study effects within the causal window");
  analyze.files.add_to(analyze_cmd);
  analyze_cmd->add_option("--pilot", analyze.pilot_path, "pilot.json from the pilot subcommand")
      ->required()
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--units", analyze.units_path, "analysis unit ids, one per line (default: plan's main set)")
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out-dir", analyze.out_dir, "output directory")->required();
  analyze_cmd->callback([&] { action = [&] { return run_analyze(analyze); }; });

  SensitivityFlags sens;
  sens.study.alpha = 2.5;
  sens.study.epsilon = 4.0;
  sens.study.transform = "lagged-diff";
  sens.study.undetected = "zero";
  auto* sens_cmd = app.add_subcommand("sensitivity", "pilot + analysis across tradezone noise levels");
  sens_cmd->add_option("--dma", sens.dma, "dma.csv")->required()->check(CLI::ExistingFile);
  sens_cmd->add_option("--dma-panel", sens.dma_panel, "dma_panel.csv")->required()->check(CLI::ExistingFile);
  sens_cmd->add_option("--sigma", sens.sigmas, "noise levels (default 2^k, k=1..7)")->delimiter(',');
  sens.study.add_to(sens_cmd, false);
  sens_cmd->add_option("--pilot-fraction", sens.pilot_fraction, "share of units in each pilot");
  sens_cmd->add_option("--snow-threshold", sens.spec.snow_threshold_h, "treatment snowfall threshold (kg/m^2)");
  sens_cmd->add_option("--control-threshold", sens.spec.control_threshold_l, "control snowfall ceiling (kg/m^2)");
  sens_cmd->add_option("--total", sens.spec.total_tradezones, "total tradezones");
  sens_cmd->add_option("--seed", sens.seed, "master seed");
  sens_cmd->add_option("--out-dir", sens.out_dir, "output directory")->required();
  sens_cmd->callback([&] { action = [&] { return run_sensitivity(sens); }; });

  HeuristicsFlags heur;
  auto* heur_cmd = app.add_subcommand("heuristics", "suggested alpha and epsilon ranges");
  heur.files.add_to(heur_cmd);
  heur_cmd->add_option("--transform", heur.transform, "levels or lagged-diff")
      ->check(CLI::IsMember({"levels", "lagged-diff"}));
  heur_cmd->add_option("--units", heur.units_path, "restrict to these unit ids")->check(CLI::ExistingFile);
  heur_cmd->add_option("--seed", heur.seed, "recorded in the manifest");
  heur_cmd->add_option("--out", heur.out, "output JSON")->required();
  heur_cmd->callback([&] { action = [&] { return run_heuristics(heur); }; });

  ImputeFlags imp;
  auto* imp_cmd = app.add_subcommand("impute", "multiple imputation of treatment status from the event proxy");
  imp_cmd->add_option("--events", imp.events, "events CSV")->required()->check(CLI::ExistingFile);
  imp_cmd->add_option("--eta", imp.eta, "identification slack in [0, 1)")->required();
  imp_cmd->add_option("--replicates", imp.replicates, "number of imputed datasets");
  imp_cmd->add_option("--seed", imp.seed, "seed");
  imp_cmd->add_option("--out-dir", imp.out_dir, "output directory")->required();
  imp_cmd->callback([&] { action = [&] { return run_impute(imp); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
