#pragma once

// Pipeline orchestration behind the CLI: run configuration, the
// simulate / fit / effects / sensitivity / validate commands, and report
// emission. Every output carries the config hash, seed, engine version and
// a reference to the layout manifest.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/cohort.hpp"
#include "its/common.hpp"
#include "its/data.hpp"
#include "its/design.hpp"
#include "its/effects.hpp"
#include "its/fit.hpp"
#include "its/intervention.hpp"
#include "its/mcmc.hpp"
#include "its/synth.hpp"

namespace its::harness {

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
  std::optional<double> threshold_pct;
  std::optional<std::string> out;
};

struct RunConfig {
  std::string panel_path;
  std::string areas_path;
  std::string rollout_path;
  std::string dictionary_path;  // empty = built-in default dictionary

  cohort::StudyWindow window{2009, 2018};
  double phat_floor = 0.01;

  intervention::InterventionDefinition definition = intervention::InterventionDefinition::awareness(25.0);
  std::vector<intervention::InterventionDefinition> sensitivity_definitions;

  std::vector<std::string> confounder_fields = confounder_field_names();
  model::PriorSpec prior;
  inference::InferenceOptions inference;
  inference::McmcOptions mcmc;
  effects::EffectOptions effect_options;

  json simulate_scenario;  // scenario name (string) or inline scenario object
  std::string output_dir = "out";

  std::string config_hash;
  json canonical;

  DataDictionary dictionary() const {
    if (dictionary_path.empty()) return default_dictionary();
    std::ifstream in(dictionary_path);
    if (!in) throw validation_error("cannot open data dictionary: " + dictionary_path);
    json j;
    in >> j;
    return DataDictionary::from_json(j);
  }
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw validation_error("invalid json in " + path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open file for writing: " + path);
  out << j.dump(2) << "\n";
}

// Parse and validate a run configuration, then apply flag overrides and
// stamp the config hash of the merged document.
inline RunConfig parse_config(json j, const Overrides& overrides = {}) {
  if (!j.is_object()) throw validation_error("config must be a json object");

  if (overrides.seed) {
    j["inference"]["seed"] = *overrides.seed;
    if (j.contains("simulate") && j["simulate"].is_object()) {
      j["simulate"]["seed"] = *overrides.seed;
    }
  }
  if (overrides.draws) j["inference"]["draws"] = *overrides.draws;
  if (overrides.threshold_pct) {
    j["intervention"] = {{"type", "awareness"}, {"pct", *overrides.threshold_pct}};
  }
  if (overrides.out) j["output_dir"] = *overrides.out;

  RunConfig cfg;
  cfg.canonical = j;
  cfg.config_hash = hex64(fnv1a(j.dump()));

  if (j.contains("data")) {
    const auto& d = j.at("data");
    cfg.panel_path = d.value("panel", "");
    cfg.areas_path = d.value("areas", "");
    cfg.rollout_path = d.value("rollout", "");
    cfg.dictionary_path = d.value("dictionary", "");
  }
  if (j.contains("study_window")) {
    cfg.window.first_year = j.at("study_window").at("first_year").get<int>();
    cfg.window.last_year = j.at("study_window").at("last_year").get<int>();
    if (cfg.window.first_year > cfg.window.last_year) {
      throw validation_error("study_window: first_year must not exceed last_year");
    }
  }
  cfg.phat_floor = j.value("phat_floor", 0.01);
  if (!(cfg.phat_floor > 0.0 && cfg.phat_floor <= 1.0)) {
    throw validation_error("phat_floor must be in (0,1]");
  }

  if (j.contains("intervention")) {
    cfg.definition = intervention::InterventionDefinition::from_json(j.at("intervention"));
  }
  if (j.contains("sensitivity") && j.at("sensitivity").contains("definitions")) {
    for (const auto& dj : j.at("sensitivity").at("definitions")) {
      cfg.sensitivity_definitions.push_back(intervention::InterventionDefinition::from_json(dj));
    }
    if (cfg.sensitivity_definitions.empty()) {
      throw validation_error("sensitivity.definitions must not be empty");
    }
  } else {
    cfg.sensitivity_definitions = {intervention::InterventionDefinition::introduction(),
                                   intervention::InterventionDefinition::awareness(5.0),
                                   intervention::InterventionDefinition::awareness(15.0),
                                   intervention::InterventionDefinition::awareness(25.0),
                                   intervention::InterventionDefinition::awareness(35.0),
                                   intervention::InterventionDefinition::awareness(45.0)};
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("confounder_fields")) {
      cfg.confounder_fields = m.at("confounder_fields").get<std::vector<std::string>>();
      const auto& known = confounder_field_names();
      for (const auto& f : cfg.confounder_fields) {
        if (std::find(known.begin(), known.end(), f) == known.end()) {
          throw validation_error("model.confounder_fields: unknown field '" + f + "'");
        }
      }
    }
    if (m.contains("prior")) cfg.prior = model::PriorSpec::from_json(m.at("prior"));
  }

  if (j.contains("inference")) {
    const auto& inf = j.at("inference");
    cfg.inference.n_draws = inf.value("draws", 1000);
    if (cfg.inference.n_draws < 0) throw validation_error("inference.draws must be >= 0");
    cfg.inference.seed = inf.value("seed", std::uint64_t{20090101});
    if (inf.contains("grid")) {
      const auto& g = inf.at("grid");
      cfg.inference.grid.half_width = g.value("half_width", 2);
      cfg.inference.grid.spacing = g.value("spacing", 0.5);
      cfg.inference.grid.lower_bound = g.value("lower", -4.0);
      cfg.inference.grid.upper_bound = g.value("upper", 3.0);
      if (cfg.inference.grid.half_width < 0 || !(cfg.inference.grid.spacing > 0.0) ||
          cfg.inference.grid.lower_bound >= cfg.inference.grid.upper_bound) {
        throw validation_error("inference.grid: invalid grid settings");
      }
    }
  }

  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    cfg.mcmc.chains = m.value("chains", 4);
    cfg.mcmc.iterations = m.value("iterations", 20000L);
    cfg.mcmc.burn = m.value("burn", cfg.mcmc.iterations / 2);
    cfg.mcmc.thin = m.value("thin", 10);
    cfg.mcmc.seed = m.value("seed", cfg.inference.seed + 1);
    if (cfg.mcmc.chains < 2) throw validation_error("mcmc.chains must be >= 2");
    if (cfg.mcmc.burn >= cfg.mcmc.iterations) {
      throw validation_error("mcmc.burn must be below mcmc.iterations");
    }
  } else {
    cfg.mcmc.seed = cfg.inference.seed + 1;
  }

  if (j.contains("effects")) {
    const auto& e = j.at("effects");
    const std::string agg = e.value("aggregation", "linear_predictor");
    if (agg == "linear_predictor") {
      cfg.effect_options.aggregation = effects::Aggregation::LinearPredictor;
    } else if (agg == "probability") {
      cfg.effect_options.aggregation = effects::Aggregation::Probability;
    } else {
      throw validation_error("effects.aggregation must be 'linear_predictor' or 'probability'");
    }
    const std::string adj = e.value("adjustment", "multiplicative");
    if (adj == "multiplicative") {
      cfg.effect_options.adjustment = effects::Adjustment::Multiplicative;
    } else if (adj == "additive") {
      cfg.effect_options.adjustment = effects::Adjustment::Additive;
    } else {
      throw validation_error("effects.adjustment must be 'multiplicative' or 'additive'");
    }
  }

  if (j.contains("simulate")) cfg.simulate_scenario = j.at("simulate");
  cfg.output_dir = j.value("output_dir", "out");
  return cfg;
}

inline RunConfig load_config(const std::string& path, const Overrides& overrides = {}) {
  return parse_config(read_json_file(path), overrides);
}

// ---------------------------------------------------------------------------
// Shared pipeline steps.

struct LoadedData {
  DataDictionary dict;
  std::vector<RawResponse> panel;
  std::vector<AreaAttributes> areas;
  std::vector<intervention::RolloutSeries> rollout;
  cohort::Cohort cohort;
};

inline LoadedData load_and_build_cohort(const RunConfig& cfg) {
  if (cfg.panel_path.empty() || cfg.areas_path.empty() || cfg.rollout_path.empty()) {
    throw validation_error("config: data.panel, data.areas and data.rollout are required");
  }
  LoadedData data;
  data.dict = cfg.dictionary();
  data.panel = read_panel_csv(cfg.panel_path, data.dict);
  data.areas = read_areas_csv(cfg.areas_path);
  data.rollout = intervention::read_rollout_csv(cfg.rollout_path);
  cohort::CohortOptions copts;
  copts.window = cfg.window;
  copts.phat_floor = cfg.phat_floor;
  data.cohort = cohort::build_cohort(data.panel, data.areas, data.dict, copts);
  return data;
}

inline model::Design design_for_definition(const LoadedData& data, const RunConfig& cfg,
                                           const intervention::InterventionDefinition& def) {
  const auto timelines = intervention::derive_timelines(data.rollout, def);
  return model::build_design(data.cohort.observations, timelines, data.dict,
                             cfg.confounder_fields, cfg.window);
}

inline json exclusions_json(const cohort::ExclusionLog& log) {
  json j;
  j["raw_rows"] = log.n_raw_rows;
  j["retained_rows"] = log.n_retained;
  json reasons;
  for (const auto& [reason, count] : log.reasons) reasons[reason] = count;
  j["excluded_by_reason"] = reasons;
  return j;
}

// ---------------------------------------------------------------------------
// Report emission.

namespace emit {

inline std::string pct(double fraction) { return csv::format_double(100.0 * fraction); }

inline void metadata(csv::Writer& w, const RunConfig& cfg, const std::string& definition_label,
                     const std::string& manifest_ref) {
  w.comment("engine_version=" + std::string(kEngineVersion));
  w.comment("config_hash=" + cfg.config_hash);
  w.comment("seed=" + std::to_string(cfg.inference.seed));
  w.comment("intervention=" + definition_label);
  w.comment("layout_manifest=" + manifest_ref);
}

inline std::string rho_empty_reason(const effects::RhoResult& rho) {
  if (!rho.empty) return "";
  std::string reason = "no_rows:";
  bool first = true;
  const auto add = [&](const char* name, long n) {
    if (n > 0) return;
    if (!first) reason += ",";
    reason += name;
    first = false;
  };
  add("EA", rho.n_ea);
  add("EB", rho.n_eb);
  add("CA", rho.n_ca);
  add("CB", rho.n_cb);
  return reason;
}

inline std::vector<std::string> rho_fields(const effects::RhoResult& rho) {
  if (rho.empty) {
    return {"", "", "", std::to_string(rho.n_ea), std::to_string(rho.n_eb),
            std::to_string(rho.n_ca), std::to_string(rho.n_cb),
            std::to_string(rho.excluded_draws), rho_empty_reason(rho)};
  }
  return {pct(rho.summary.lower), pct(rho.summary.median), pct(rho.summary.upper),
          std::to_string(rho.n_ea), std::to_string(rho.n_eb), std::to_string(rho.n_ca),
          std::to_string(rho.n_cb), std::to_string(rho.excluded_draws), ""};
}

inline json rho_json(const effects::RhoResult& rho) {
  json j;
  if (rho.empty) {
    j["rho_pct"] = nullptr;
    j["empty_reason"] = rho_empty_reason(rho);
  } else {
    j["rho_pct"] = {{"lower", 100.0 * rho.summary.lower},
                    {"median", 100.0 * rho.summary.median},
                    {"upper", 100.0 * rho.summary.upper}};
  }
  j["n"] = {{"EA", rho.n_ea}, {"EB", rho.n_eb}, {"CA", rho.n_ca}, {"CB", rho.n_cb}};
  j["excluded_draws"] = rho.excluded_draws;
  return j;
}

}  // namespace emit

struct EffectsOutput {
  std::vector<effects::TrendRow> trend;
  effects::RhoResult rho_national;
  std::vector<effects::SweepCell> rho_by_area;
  std::vector<std::pair<std::string, std::vector<effects::SweepCell>>> rho_by_confounder;
  std::vector<std::pair<std::pair<std::string, std::string>, std::vector<effects::SweepCell>>>
      rho_joint_tiles;
  std::vector<effects::SweepCell> rho_profiles;
};

inline EffectsOutput compute_effects(const effects::EffectsEngine& engine,
                                     const std::vector<std::string>& confounder_fields) {
  EffectsOutput out;
  out.trend = effects::national_trend(engine);
  out.rho_national = engine.standardised_change({});
  out.rho_by_area = effects::profile_sweep(engine, {effects::SweepDimension::area()});
  for (const auto& field : confounder_fields) {
    out.rho_by_confounder.emplace_back(
        field, effects::profile_sweep(engine, {effects::SweepDimension::confounder(field)}));
  }
  const std::vector<std::string> individual = {"age_band", "education", "ethnicity",
                                               "marital_status", "sex"};
  const std::vector<std::string> community = {"deprivation_decile", "ethnic_mix_quintile"};
  std::vector<std::string> individual_used, community_used;
  for (const auto& f : individual) {
    if (std::find(confounder_fields.begin(), confounder_fields.end(), f) != confounder_fields.end()) {
      individual_used.push_back(f);
    }
  }
  for (const auto& f : community) {
    if (std::find(confounder_fields.begin(), confounder_fields.end(), f) != confounder_fields.end()) {
      community_used.push_back(f);
    }
  }
  for (const auto& fi : individual_used) {
    for (const auto& fc : community_used) {
      out.rho_joint_tiles.emplace_back(
          std::make_pair(fi, fc),
          effects::profile_sweep(engine, {effects::SweepDimension::confounder(fi),
                                          effects::SweepDimension::confounder(fc)}));
    }
  }
  if (!individual_used.empty()) {
    std::vector<effects::SweepDimension> dims;
    for (const auto& f : individual_used) dims.push_back(effects::SweepDimension::confounder(f));
    out.rho_profiles = effects::profile_sweep(engine, dims);
  }
  return out;
}

inline void write_effects_reports(const std::string& dir, const std::string& suffix,
                                  const RunConfig& cfg, const std::string& definition_label,
                                  const std::string& manifest_ref, const EffectsOutput& out) {
  const auto path = [&](const std::string& stem) {
    return dir + "/" + stem + suffix + ".csv";
  };

  {
    csv::Writer w(path("trend_national"));
    emit::metadata(w, cfg, definition_label, manifest_ref);
    w.row({"label", "centered_year", "exposed_lower_pct", "exposed_median_pct",
           "exposed_upper_pct", "control_lower_pct", "control_median_pct", "control_upper_pct",
           "ratio_lower", "ratio_median", "ratio_upper", "n_exposed", "n_control",
           "empty_reason"});
    for (const auto& row : out.trend) {
      std::vector<std::string> fields;
      fields.push_back(row.label);
      fields.push_back(row.centered_year ? std::to_string(*row.centered_year) : "");
      std::string reason;
      if (row.exposed.empty()) reason += "no_exposed_rows";
      if (row.control.empty()) reason += std::string(reason.empty() ? "" : ";") + "no_control_rows";
      const auto prev_fields = [&](const effects::PrevalenceResult& p) {
        if (p.empty()) return std::vector<std::string>{"", "", ""};
        return std::vector<std::string>{emit::pct(p.summary.lower), emit::pct(p.summary.median),
                                        emit::pct(p.summary.upper)};
      };
      for (const auto& f : prev_fields(row.exposed)) fields.push_back(f);
      for (const auto& f : prev_fields(row.control)) fields.push_back(f);
      if (row.ratio.empty) {
        fields.insert(fields.end(), {"", "", ""});
      } else {
        fields.insert(fields.end(), {csv::format_double(row.ratio.summary.lower),
                                     csv::format_double(row.ratio.summary.median),
                                     csv::format_double(row.ratio.summary.upper)});
      }
      fields.push_back(std::to_string(row.exposed.n));
      fields.push_back(std::to_string(row.control.n));
      fields.push_back(reason);
      w.row(fields);
    }
  }

  {
    csv::Writer w(path("rho_national"));
    emit::metadata(w, cfg, definition_label, manifest_ref);
    w.row({"rho_lower_pct", "rho_median_pct", "rho_upper_pct", "n_EA", "n_EB", "n_CA", "n_CB",
           "excluded_draws", "empty_reason"});
    w.row(emit::rho_fields(out.rho_national));
  }

  {
    csv::Writer w(path("rho_by_area"));
    emit::metadata(w, cfg, definition_label, manifest_ref);
    w.row({"area_id", "rho_lower_pct", "rho_median_pct", "rho_upper_pct", "n_EA", "n_EB", "n_CA",
           "n_CB", "excluded_draws", "empty_reason"});
    for (const auto& cell : out.rho_by_area) {
      std::vector<std::string> fields = {cell.selectors[0].second};
      const auto rf = emit::rho_fields(cell.rho);
      fields.insert(fields.end(), rf.begin(), rf.end());
      w.row(fields);
    }
  }

  {
    csv::Writer w(path("rho_by_confounder"));
    emit::metadata(w, cfg, definition_label, manifest_ref);
    w.row({"field", "level", "rho_lower_pct", "rho_median_pct", "rho_upper_pct", "n_EA", "n_EB",
           "n_CA", "n_CB", "excluded_draws", "empty_reason"});
    for (const auto& [field, cells] : out.rho_by_confounder) {
      for (const auto& cell : cells) {
        std::vector<std::string> fields = {field, cell.selectors[0].second};
        const auto rf = emit::rho_fields(cell.rho);
        fields.insert(fields.end(), rf.begin(), rf.end());
        w.row(fields);
      }
    }
  }

  {
    csv::Writer w(path("rho_joint_tiles"));
    emit::metadata(w, cfg, definition_label, manifest_ref);
    w.row({"individual_field", "individual_level", "community_field", "community_level",
           "rho_lower_pct", "rho_median_pct", "rho_upper_pct", "n_EA", "n_EB", "n_CA", "n_CB",
           "excluded_draws", "empty_reason"});
    for (const auto& [pair, cells] : out.rho_joint_tiles) {
      for (const auto& cell : cells) {
        std::vector<std::string> fields = {pair.first, cell.selectors[0].second, pair.second,
                                           cell.selectors[1].second};
        const auto rf = emit::rho_fields(cell.rho);
        fields.insert(fields.end(), rf.begin(), rf.end());
        w.row(fields);
      }
    }
  }

  if (!out.rho_profiles.empty()) {
    csv::Writer w(path("rho_profiles"));
    emit::metadata(w, cfg, definition_label, manifest_ref);
    std::vector<std::string> header = {"rank"};
    for (const auto& sel : out.rho_profiles.front().selectors) header.push_back(sel.first);
    header.insert(header.end(), {"rho_lower_pct", "rho_median_pct", "rho_upper_pct", "n_EA",
                                 "n_EB", "n_CA", "n_CB", "excluded_draws", "empty_reason"});
    w.row(header);
    int rank = 1;
    for (const auto& cell : out.rho_profiles) {
      std::vector<std::string> fields = {std::to_string(rank++)};
      for (const auto& sel : cell.selectors) fields.push_back(sel.second);
      const auto rf = emit::rho_fields(cell.rho);
      fields.insert(fields.end(), rf.begin(), rf.end());
      w.row(fields);
    }
  }

  // JSON mirror.
  json report;
  report["metadata"] = {{"engine_version", kEngineVersion},
                        {"config_hash", cfg.config_hash},
                        {"seed", cfg.inference.seed},
                        {"intervention", definition_label},
                        {"layout_manifest", manifest_ref},
                        {"aggregation", cfg.effect_options.aggregation ==
                                                effects::Aggregation::LinearPredictor
                                            ? "linear_predictor"
                                            : "probability"},
                        {"adjustment", cfg.effect_options.adjustment ==
                                               effects::Adjustment::Multiplicative
                                           ? "multiplicative"
                                           : "additive"},
                        {"percentile_method", "type7_linear_interpolation"}};
  json trend = json::array();
  for (const auto& row : out.trend) {
    json r;
    r["label"] = row.label;
    if (row.centered_year) r["centered_year"] = *row.centered_year;
    const auto prev_json = [](const effects::PrevalenceResult& p) -> json {
      if (p.empty()) return nullptr;
      return json{{"lower", 100.0 * p.summary.lower},
                  {"median", 100.0 * p.summary.median},
                  {"upper", 100.0 * p.summary.upper}};
    };
    r["exposed_prevalence_pct"] = prev_json(row.exposed);
    r["control_prevalence_pct"] = prev_json(row.control);
    r["ratio"] = row.ratio.empty ? json(nullptr)
                                 : json{{"lower", row.ratio.summary.lower},
                                        {"median", row.ratio.summary.median},
                                        {"upper", row.ratio.summary.upper}};
    r["n_exposed"] = row.exposed.n;
    r["n_control"] = row.control.n;
    trend.push_back(r);
  }
  report["trend_national"] = trend;
  report["rho_national"] = emit::rho_json(out.rho_national);
  json by_area = json::array();
  for (const auto& cell : out.rho_by_area) {
    json c = emit::rho_json(cell.rho);
    c["area_id"] = cell.selectors[0].second;
    by_area.push_back(c);
  }
  report["rho_by_area"] = by_area;
  write_json_file(dir + "/report" + suffix + ".json", report);
}

// ---------------------------------------------------------------------------
// Commands. Each returns the CLI exit code.

inline int cmd_simulate(const RunConfig& cfg) {
  if (cfg.simulate_scenario.is_null()) {
    throw validation_error("config: 'simulate' section (scenario name or object) is required");
  }
  synth::ScenarioConfig scenario;
  if (cfg.simulate_scenario.is_string()) {
    const auto lib = synth::scenario_library();
    const std::string name = cfg.simulate_scenario.get<std::string>();
    const auto it = lib.find(name);
    if (it == lib.end()) {
      std::string known;
      for (const auto& [k, _] : lib) known += (known.empty() ? "" : ", ") + k;
      throw validation_error("unknown scenario '" + name + "' (known: " + known + ")");
    }
    scenario = it->second;
  } else {
    scenario = synth::ScenarioConfig::from_json(cfg.simulate_scenario);
  }

  fs::create_directories(cfg.output_dir);
  const synth::SimulationResult sim = synth::simulate(scenario);
  synth::write_panel_csv(cfg.output_dir + "/panel.csv", sim.panel);
  synth::write_areas_csv(cfg.output_dir + "/areas.csv", sim.areas);
  synth::write_rollout_csv(cfg.output_dir + "/rollout.csv", sim.rollout);
  write_json_file(cfg.output_dir + "/ground_truth.json", sim.ground_truth);
  return 0;
}

inline json make_fit_artifact(const RunConfig& cfg, const inference::FittedPosterior& fitted,
                              const intervention::InterventionDefinition& def,
                              const cohort::ExclusionLog& exclusions) {
  json artifact = inference::to_json(fitted);
  artifact["config_hash"] = cfg.config_hash;
  artifact["intervention"] = def.to_json();
  artifact["exclusions"] = exclusions_json(exclusions);
  return artifact;
}

inline int cmd_fit(const RunConfig& cfg) {
  const LoadedData data = load_and_build_cohort(cfg);
  const model::Design design = design_for_definition(data, cfg, cfg.definition);
  inference::InferenceOptions opts = cfg.inference;
  inference::FittedPosterior fitted = inference::fit_posterior(design, cfg.prior, opts);
  fitted.config_hash = cfg.config_hash;

  fs::create_directories(cfg.output_dir);
  write_json_file(cfg.output_dir + "/fit_artifact.json",
                  make_fit_artifact(cfg, fitted, cfg.definition, data.cohort.exclusions));
  return 0;
}

inline int cmd_effects(const RunConfig& cfg, const std::string& artifact_path) {
  const json artifact = read_json_file(artifact_path);
  inference::FittedPosterior fitted = inference::fitted_posterior_from_json(artifact);
  const auto def = intervention::InterventionDefinition::from_json(artifact.at("intervention"));

  const LoadedData data = load_and_build_cohort(cfg);
  const model::Design design = design_for_definition(data, cfg, def);
  if (design.layout.to_json() != fitted.layout.to_json()) {
    throw validation_error("data/config do not reproduce the artifact's layout manifest; "
                           "refit before computing effects");
  }

  const effects::EffectsEngine engine(design, fitted.draws, data.dict, cfg.effect_options);
  const EffectsOutput out = compute_effects(engine, cfg.confounder_fields);
  fs::create_directories(cfg.output_dir);
  write_effects_reports(cfg.output_dir, "", cfg, def.label(), artifact_path, out);
  return 0;
}

// One full pipeline run per intervention definition, aligned side-by-side
// trend and rho tables. Definitions run as independent parallel jobs.
inline int cmd_sensitivity(const RunConfig& cfg) {
  const LoadedData data = load_and_build_cohort(cfg);
  const std::size_t n_defs = cfg.sensitivity_definitions.size();

  struct JobResult {
    model::Design design;
    inference::FittedPosterior fitted;
    EffectsOutput out;
    std::string error;
  };
  std::vector<JobResult> results(n_defs);

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t next = 0;
  while (next < n_defs) {
    std::vector<std::thread> pool;
    const std::size_t batch_end = std::min(next + hw, n_defs);
    for (std::size_t k = next; k < batch_end; ++k) {
      pool.emplace_back([&, k]() {
        try {
          JobResult& r = results[k];
          r.design = design_for_definition(data, cfg, cfg.sensitivity_definitions[k]);
          r.fitted = inference::fit_posterior(r.design, cfg.prior, cfg.inference);
          r.fitted.config_hash = cfg.config_hash;
          const effects::EffectsEngine engine(r.design, r.fitted.draws, data.dict,
                                              cfg.effect_options);
          r.out = compute_effects(engine, cfg.confounder_fields);
        } catch (const std::exception& e) {
          results[k].error = e.what();
        }
      });
    }
    for (auto& th : pool) th.join();
    next = batch_end;
  }
  for (std::size_t k = 0; k < n_defs; ++k) {
    if (!results[k].error.empty()) {
      throw convergence_error("sensitivity: definition " +
                              cfg.sensitivity_definitions[k].label() + " failed: " +
                              results[k].error);
    }
  }

  fs::create_directories(cfg.output_dir);
  for (std::size_t k = 0; k < n_defs; ++k) {
    const auto& def = cfg.sensitivity_definitions[k];
    write_json_file(cfg.output_dir + "/fit_artifact_" + def.label() + ".json",
                    make_fit_artifact(cfg, results[k].fitted, def, data.cohort.exclusions));
    write_effects_reports(cfg.output_dir, "_" + def.label(), cfg, def.label(),
                          "fit_artifact_" + def.label() + ".json", results[k].out);
  }

  {
    csv::Writer w(cfg.output_dir + "/sensitivity_trend.csv");
    emit::metadata(w, cfg, "all_definitions", "per-definition artifacts");
    w.row({"definition", "label", "centered_year", "exposed_lower_pct", "exposed_median_pct",
           "exposed_upper_pct", "control_lower_pct", "control_median_pct", "control_upper_pct",
           "n_exposed", "n_control", "empty_reason"});
    for (std::size_t k = 0; k < n_defs; ++k) {
      for (const auto& row : results[k].out.trend) {
        std::vector<std::string> fields = {cfg.sensitivity_definitions[k].label(), row.label};
        fields.push_back(row.centered_year ? std::to_string(*row.centered_year) : "");
        std::string reason;
        if (row.exposed.empty()) reason += "no_exposed_rows";
        if (row.control.empty()) reason += std::string(reason.empty() ? "" : ";") + "no_control_rows";
        const auto prev_fields = [&](const effects::PrevalenceResult& p) {
          if (p.empty()) return std::vector<std::string>{"", "", ""};
          return std::vector<std::string>{emit::pct(p.summary.lower), emit::pct(p.summary.median),
                                          emit::pct(p.summary.upper)};
        };
        for (const auto& f : prev_fields(row.exposed)) fields.push_back(f);
        for (const auto& f : prev_fields(row.control)) fields.push_back(f);
        fields.push_back(std::to_string(row.exposed.n));
        fields.push_back(std::to_string(row.control.n));
        fields.push_back(reason);
        w.row(fields);
      }
    }
  }
  {
    csv::Writer w(cfg.output_dir + "/sensitivity_rho.csv");
    emit::metadata(w, cfg, "all_definitions", "per-definition artifacts");
    w.row({"definition", "rho_lower_pct", "rho_median_pct", "rho_upper_pct", "n_EA", "n_EB",
           "n_CA", "n_CB", "excluded_draws", "empty_reason"});
    for (std::size_t k = 0; k < n_defs; ++k) {
      std::vector<std::string> fields = {cfg.sensitivity_definitions[k].label()};
      const auto rf = emit::rho_fields(results[k].out.rho_national);
      fields.insert(fields.end(), rf.begin(), rf.end());
      w.row(fields);
    }
  }
  return 0;
}

// Laplace-vs-MCMC cross-check on the configured data. Exit code 4 when the
// oracle comparison is refused (R-hat) or any fixed effect disagrees.
inline int cmd_validate(const RunConfig& cfg) {
  const LoadedData data = load_and_build_cohort(cfg);
  const model::Design design = design_for_definition(data, cfg, cfg.definition);
  inference::FittedPosterior fitted = inference::fit_posterior(design, cfg.prior, cfg.inference);

  // Mixture-of-modes fixed-effect means from the hyper grid (exact for the
  // Laplace mixture, no Monte-Carlo error).
  const int P = design.layout.n_fixed();
  Vec laplace_mean = Vec::Zero(P);
  for (const auto& pt : fitted.hyper_grid) {
    if (pt.mode.size() > 0) laplace_mean += pt.weight * pt.mode.head(P);
  }

  const Vec start = fitted.map_point.pack();
  const inference::McmcResult mcmc = inference::mcmc_oracle(design, cfg.prior, cfg.mcmc, start);

  json report;
  report["metadata"] = {{"engine_version", kEngineVersion},
                        {"config_hash", cfg.config_hash},
                        {"seed", cfg.inference.seed},
                        {"mcmc_seed", cfg.mcmc.seed},
                        {"intervention", cfg.definition.label()}};
  report["max_rhat"] = mcmc.max_rhat;
  report["rhat_threshold"] = 1.05;
  json coords = json::array();
  bool all_ok = true;
  for (int k = 0; k < P; ++k) {
    const double diff = std::abs(laplace_mean[k] - mcmc.mean[k]);
    const double tol = 0.1 * mcmc.sd[k];
    const bool ok = diff <= tol;
    all_ok = all_ok && ok;
    coords.push_back({{"coordinate", design.layout.coordinate_name(k)},
                      {"laplace_mean", laplace_mean[k]},
                      {"mcmc_mean", mcmc.mean[k]},
                      {"mcmc_sd", mcmc.sd[k]},
                      {"abs_diff", diff},
                      {"tolerance", tol},
                      {"rhat", mcmc.rhat[k]},
                      {"ess", mcmc.ess[k]},
                      {"ok", ok}});
  }
  report["fixed_effects"] = coords;

  fs::create_directories(cfg.output_dir);
  if (!mcmc.converged) {
    report["verdict"] = "refused";
    report["reason"] = "split R-hat above 1.05; oracle comparison refused";
    write_json_file(cfg.output_dir + "/validate_report.json", report);
    return 4;
  }
  report["verdict"] = all_ok ? "agree" : "disagree";
  write_json_file(cfg.output_dir + "/validate_report.json", report);
  return all_ok ? 0 : 4;
}

}  // namespace its::harness
