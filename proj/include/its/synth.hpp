#pragma once

// Synthetic cohorts with known parameters: confounder profiles, staggered
// rollout curves whose threshold crossings land in configured awareness
// years, outcomes drawn from the forward model, and a nonresponse/weight
// mechanism. Ground truth (including the implied standardised change) is
// emitted alongside the data; fits never read it.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/cohort.hpp"
#include "its/common.hpp"
#include "its/data.hpp"
#include "its/design.hpp"
#include "its/intervention.hpp"

namespace its::synth {

struct ScenarioConfig {
  std::string name = "custom";
  int n_areas = 30;
  int n_persons_per_area = 60;
  cohort::StudyWindow window{2009, 2018};

  // ITS / exposure fixed effects (beta0..beta7 blocks of the model).
  double beta_intercept = logit(0.18);
  double beta_year = 0.0;
  double beta_intervention = 0.0;
  double beta_year_post = 0.0;
  double beta_exposed = 0.0;
  double beta_exposed_year = 0.0;
  double beta_exposed_intervention = 0.0;
  double beta_exposed_year_post = 0.0;

  // Confounder effects per field: one value per non-reference level.
  std::map<std::string, std::vector<double>> confounder_effects;

  double sigma_gamma = 0.25;
  double sigma_delta = 0.25;

  // Area-level heterogeneity of the exposed intervention step.
  double hetero_sd = 0.0;

  // Awareness years assigned cyclically over [first, first + span - 1].
  int first_awareness_year = 2012;
  int awareness_span = 4;
  int intro_lead_months = 30;            // introduction precedes the crossing
  double rollout_threshold_pct = 25.0;   // crossings built for this threshold

  double exposure_rate = 0.15;
  double sick_rate = 0.0;          // rows reporting long-term sickness
  double absent_wave1_rate = 0.0;  // persons missing the first wave

  // Nonresponse model on wave-1 covariates (logit scale).
  bool nonresponse = false;
  double response_intercept = 2.2;
  double response_education_effect = -0.7;  // lowest education level
  double response_sex_effect = -0.3;        // second sex level
  double base_weight_log_sd = 0.0;

  // Force an area's post-period rows into the control group (EMPTY-cell
  // fixtures); -1 disables.
  int force_control_area = -1;

  std::uint64_t seed = 1;

  json to_json() const {
    json j;
    j["name"] = name;
    j["n_areas"] = n_areas;
    j["n_persons_per_area"] = n_persons_per_area;
    j["window"] = {{"first_year", window.first_year}, {"last_year", window.last_year}};
    j["beta"] = {{"intercept", beta_intercept},
                 {"year", beta_year},
                 {"intervention", beta_intervention},
                 {"year_post", beta_year_post},
                 {"exposed", beta_exposed},
                 {"exposed_year", beta_exposed_year},
                 {"exposed_intervention", beta_exposed_intervention},
                 {"exposed_year_post", beta_exposed_year_post}};
    json ce;
    for (const auto& [field, values] : confounder_effects) ce[field] = values;
    j["confounder_effects"] = ce;
    j["sigma_gamma"] = sigma_gamma;
    j["sigma_delta"] = sigma_delta;
    j["hetero_sd"] = hetero_sd;
    j["first_awareness_year"] = first_awareness_year;
    j["awareness_span"] = awareness_span;
    j["intro_lead_months"] = intro_lead_months;
    j["rollout_threshold_pct"] = rollout_threshold_pct;
    j["exposure_rate"] = exposure_rate;
    j["sick_rate"] = sick_rate;
    j["absent_wave1_rate"] = absent_wave1_rate;
    j["nonresponse"] = nonresponse;
    j["response_intercept"] = response_intercept;
    j["response_education_effect"] = response_education_effect;
    j["response_sex_effect"] = response_sex_effect;
    j["base_weight_log_sd"] = base_weight_log_sd;
    j["force_control_area"] = force_control_area;
    j["seed"] = seed;
    return j;
  }

  static ScenarioConfig from_json(const json& j) {
    ScenarioConfig c;
    c.name = j.value("name", std::string("custom"));
    c.n_areas = j.value("n_areas", 30);
    c.n_persons_per_area = j.value("n_persons_per_area", 60);
    if (j.contains("window")) {
      c.window.first_year = j.at("window").at("first_year").get<int>();
      c.window.last_year = j.at("window").at("last_year").get<int>();
    }
    if (j.contains("beta")) {
      const auto& b = j.at("beta");
      c.beta_intercept = b.value("intercept", c.beta_intercept);
      c.beta_year = b.value("year", 0.0);
      c.beta_intervention = b.value("intervention", 0.0);
      c.beta_year_post = b.value("year_post", 0.0);
      c.beta_exposed = b.value("exposed", 0.0);
      c.beta_exposed_year = b.value("exposed_year", 0.0);
      c.beta_exposed_intervention = b.value("exposed_intervention", 0.0);
      c.beta_exposed_year_post = b.value("exposed_year_post", 0.0);
    }
    if (j.contains("confounder_effects")) {
      for (const auto& [field, values] : j.at("confounder_effects").items()) {
        c.confounder_effects[field] = values.get<std::vector<double>>();
      }
    }
    c.sigma_gamma = j.value("sigma_gamma", 0.25);
    c.sigma_delta = j.value("sigma_delta", 0.25);
    c.hetero_sd = j.value("hetero_sd", 0.0);
    c.first_awareness_year = j.value("first_awareness_year", 2012);
    c.awareness_span = j.value("awareness_span", 4);
    c.intro_lead_months = j.value("intro_lead_months", 30);
    c.rollout_threshold_pct = j.value("rollout_threshold_pct", 25.0);
    c.exposure_rate = j.value("exposure_rate", 0.15);
    c.sick_rate = j.value("sick_rate", 0.0);
    c.absent_wave1_rate = j.value("absent_wave1_rate", 0.0);
    c.nonresponse = j.value("nonresponse", false);
    c.response_intercept = j.value("response_intercept", 2.2);
    c.response_education_effect = j.value("response_education_effect", -0.7);
    c.response_sex_effect = j.value("response_sex_effect", -0.3);
    c.base_weight_log_sd = j.value("base_weight_log_sd", 0.0);
    c.force_control_area = j.value("force_control_area", -1);
    c.seed = j.value("seed", std::uint64_t{1});
    return c;
  }
};

// One generated person-year in the (conceptual) full population; the
// emitted panel carries only the responded subset.
struct PopulationRow {
  int area = 0;
  int exposed = 0;
  bool after = false;
  double mu = 0.0;
};

struct SimulationResult {
  std::vector<RawResponse> panel;  // responded rows only
  std::vector<AreaAttributes> areas;
  std::vector<intervention::RolloutSeries> rollout;
  json ground_truth;

  // Convenience copies of the truth for in-process tests.
  double rho_national = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> rho_by_area;  // NaN = EMPTY
  Vec true_beta;                              // ordered per the model layout
  std::vector<std::string> true_beta_names;
  Vec gamma_true;
  Vec delta_true;
  std::map<std::string, int> awareness_year_by_area;
  std::vector<PopulationRow> population;
  double population_prevalence = 0.0;
};

namespace detail {

inline std::string area_name(int index) {
  std::string s = std::to_string(index + 1);
  while (s.size() < 3) s = "0" + s;
  return "A" + s;
}

struct StrataMeans {
  double ea = 0.0, eb = 0.0, ca = 0.0, cb = 0.0;
  long n_ea = 0, n_eb = 0, n_ca = 0, n_cb = 0;

  bool complete() const { return n_ea > 0 && n_eb > 0 && n_ca > 0 && n_cb > 0; }
};

inline double rho_from_means(const StrataMeans& m) {
  const double adjusted = m.eb * (m.ca / m.cb);
  const double p_ea = sigmoid(m.ea);
  const double p_eb = sigmoid(adjusted);
  return (p_ea - p_eb) / p_eb;
}

}  // namespace detail

inline SimulationResult simulate(const ScenarioConfig& config) {
  if (config.n_areas <= 0 || config.n_persons_per_area <= 0) {
    throw validation_error("simulate: counts must be positive");
  }
  for (int a = 0; a < config.n_areas; ++a) {
    const int year = config.first_awareness_year + a % std::max(1, config.awareness_span);
    if (!config.window.contains(year)) {
      throw validation_error("simulate: configured awareness year " + std::to_string(year) +
                             " outside study window");
    }
  }
  const DataDictionary dict = default_dictionary();
  SimulationResult result;

  // --- areas ---------------------------------------------------------------
  RngStream area_rng(substream_seed(config.seed, 0xA8EA));
  for (int a = 0; a < config.n_areas; ++a) {
    AreaAttributes attr;
    attr.area_id = detail::area_name(a);
    attr.imd_score = area_rng.uniform(5.0, 60.0);
    attr.ethnic_minority_proportion = area_rng.uniform(0.01, 0.8);
    result.areas.push_back(attr);
  }
  const auto deciles = cohort::group_deprivation(result.areas);
  const auto quintiles = cohort::group_ethnic_mix(result.areas);

  std::vector<int> awareness_year(static_cast<std::size_t>(config.n_areas));
  for (int a = 0; a < config.n_areas; ++a) {
    awareness_year[static_cast<std::size_t>(a)] =
        config.first_awareness_year + a % std::max(1, config.awareness_span);
    result.awareness_year_by_area[detail::area_name(a)] = awareness_year[static_cast<std::size_t>(a)];
  }

  // --- rollout curves --------------------------------------------------------
  RngStream rollout_rng(substream_seed(config.seed, 0xB01));
  const int start_index = intervention::YearMonth{config.window.first_year, 1}.index();
  const int end_index = intervention::YearMonth{config.window.last_year, 12}.index();
  for (int a = 0; a < config.n_areas; ++a) {
    intervention::RolloutSeries series;
    series.area_id = detail::area_name(a);
    const long final_total = 500 + static_cast<long>(rollout_rng.below(4500));
    const double threshold = config.rollout_threshold_pct / 100.0 * static_cast<double>(final_total);
    const int cross = intervention::YearMonth{awareness_year[static_cast<std::size_t>(a)], 6}.index();
    const int intro = std::max(start_index, cross - config.intro_lead_months);
    const long at_cross = static_cast<long>(std::ceil(threshold));
    for (int m = start_index; m <= end_index; ++m) {
      long count = 0;
      if (m >= intro && m < cross) {
        const double frac = static_cast<double>(m - intro + 1) / static_cast<double>(cross - intro + 1);
        count = static_cast<long>(std::floor(threshold * frac));
      } else if (m == cross) {
        count = at_cross;
      } else if (m > cross) {
        const double frac = static_cast<double>(m - cross) / static_cast<double>(end_index - cross);
        count = at_cross + static_cast<long>(std::llround((final_total - at_cross) * frac));
      }
      series.months.emplace_back(intervention::YearMonth{m / 12, m % 12 + 1}, count);
    }
    const auto crossing = intervention::awareness_month(series, config.rollout_threshold_pct);
    if (!crossing || crossing->year != awareness_year[static_cast<std::size_t>(a)]) {
      throw validation_error("simulate: rollout construction failed to reproduce the awareness "
                             "year for area " + series.area_id);
    }
    result.rollout.push_back(std::move(series));
  }

  // --- true parameter vector laid out like the model design ------------------
  result.true_beta_names = {"intercept", "year", "intervention", "year_post",
                            "exposed",   "exposed:year", "exposed:intervention",
                            "exposed:year_post"};
  std::vector<double> beta = {config.beta_intercept,
                              config.beta_year,
                              config.beta_intervention,
                              config.beta_year_post,
                              config.beta_exposed,
                              config.beta_exposed_year,
                              config.beta_exposed_intervention,
                              config.beta_exposed_year_post};
  std::map<std::string, std::vector<double>> dummy_effects;
  for (const auto& field : confounder_field_names()) {
    const auto levels = dict.levels(field);
    std::vector<double> effects(levels.size() - 1, 0.0);
    const auto it = config.confounder_effects.find(field);
    if (it != config.confounder_effects.end()) {
      if (it->second.size() != effects.size()) {
        throw validation_error("simulate: confounder_effects[" + field + "] must have " +
                               std::to_string(effects.size()) + " entries");
      }
      effects = it->second;
    }
    dummy_effects[field] = effects;
    for (std::size_t level = 1; level < levels.size(); ++level) {
      result.true_beta_names.push_back(field + "=" + levels[level]);
      beta.push_back(effects[level - 1]);
    }
  }
  result.true_beta = Eigen::Map<const Vec>(beta.data(), static_cast<Eigen::Index>(beta.size()));

  // --- random effects ---------------------------------------------------------
  const int T = config.window.n_years();
  RngStream re_rng(substream_seed(config.seed, 0xEFFEC));
  result.gamma_true = Vec(T);
  for (int t = 0; t < T; ++t) result.gamma_true[t] = config.sigma_gamma * re_rng.normal();
  result.delta_true = Vec(config.n_areas);
  for (int a = 0; a < config.n_areas; ++a) result.delta_true[a] = config.sigma_delta * re_rng.normal();
  Vec beta6_offset = Vec::Zero(config.n_areas);
  if (config.hetero_sd > 0.0) {
    for (int a = 0; a < config.n_areas; ++a) beta6_offset[a] = config.hetero_sd * re_rng.normal();
  }

  // --- persons ----------------------------------------------------------------
  const std::vector<double> education_freq = {0.35, 0.40, 0.25};
  const std::vector<double> ethnicity_freq = {0.75, 0.04, 0.10, 0.07, 0.04};
  const std::vector<double> marital_freq = {0.50, 0.50};
  const std::vector<double> sex_freq = {0.52, 0.48};
  const std::vector<std::string> control_levels = {"employed full time", "employed part time",
                                                   "self employed", "full-time student",
                                                   "family care or home"};
  const std::vector<double> control_freq = {0.62, 0.16, 0.10, 0.07, 0.05};

  const auto mu_of = [&](int area, int exposed, const intervention::CenteredTime& ct,
                         const ConfounderProfile& p, int calendar_year) {
    double mu = beta[0] + beta[1] * ct.year + beta[2] * ct.intervention + beta[3] * ct.year_post;
    if (exposed) {
      mu += beta[4] + beta[5] * ct.year +
            (beta[6] + beta6_offset[area]) * ct.intervention + beta[7] * ct.year_post;
    }
    const auto add_dummy = [&](const std::string& field) {
      const int idx = p.level_index(field);
      if (idx > 0) mu += dummy_effects.at(field)[static_cast<std::size_t>(idx - 1)];
    };
    for (const auto& field : confounder_field_names()) add_dummy(field);
    mu += result.gamma_true[calendar_year - config.window.first_year];
    mu += result.delta_true[area];
    return mu;
  };

  long person_counter = 0;
  for (int a = 0; a < config.n_areas; ++a) {
    const std::string area_id = detail::area_name(a);
    for (int pi = 0; pi < config.n_persons_per_area; ++pi) {
      RngStream rng(substream_seed(config.seed, 0xFACE0000ULL +
                                                    static_cast<std::uint64_t>(person_counter)));
      ++person_counter;
      const std::string person_id = "P" + std::to_string(100000 + person_counter);

      const int start_age = 16 + static_cast<int>(rng.below(40));  // 16..55
      ConfounderProfile prof;
      prof.education = rng.categorical(education_freq);
      prof.ethnicity = rng.categorical(ethnicity_freq);
      prof.marital_status = rng.categorical(marital_freq);
      prof.sex = rng.categorical(sex_freq);
      prof.deprivation_decile = deciles.at(area_id);
      prof.ethnic_mix_quintile = quintiles.at(area_id);

      const double base_weight =
          config.base_weight_log_sd > 0.0 ? std::exp(config.base_weight_log_sd * rng.normal()) : 1.0;

      const bool absent_wave1 = rng.uniform() < config.absent_wave1_rate;
      bool respond_all = true;
      if (config.nonresponse) {
        double eta = config.response_intercept;
        if (prof.education == static_cast<int>(dict.education_levels.size()) - 1) {
          eta += config.response_education_effect;
        }
        if (prof.sex == 1) eta += config.response_sex_effect;
        respond_all = rng.uniform() < sigmoid(eta);
      }
      std::vector<bool> present(static_cast<std::size_t>(config.window.n_years()), true);
      if (absent_wave1) present[0] = false;
      if (!absent_wave1 && !respond_all) {
        bool dropped = false;
        for (std::size_t t = 1; t < present.size(); ++t) {
          if (rng.uniform() < 0.35) {
            present[t] = false;
            dropped = true;
          }
        }
        if (!dropped && present.size() > 1) {
          present[1 + rng.below(present.size() - 1)] = false;
        }
      }

      for (int year = config.window.first_year; year <= config.window.last_year; ++year) {
        const int t = year - config.window.first_year;
        const int age = start_age + t;
        prof.age_band = dict.age_band_index(age);

        std::string employment;
        int exposed = 0;
        const auto ct = intervention::center_time(year, awareness_year[static_cast<std::size_t>(a)],
                                                  config.window);
        const bool forced_control = config.force_control_area == a && ct.intervention == 1;
        if (!forced_control && rng.uniform() < config.sick_rate) {
          employment = "long-term sick or disabled";
        } else if (!forced_control && rng.uniform() < config.exposure_rate) {
          employment = dict.exposed_level;
          exposed = 1;
        } else {
          employment = control_levels[static_cast<std::size_t>(rng.categorical(control_freq))];
        }

        const bool valid = employment != "long-term sick or disabled" && prof.age_band >= 0;
        double mu = 0.0;
        int outcome = 0;
        if (valid) {
          mu = mu_of(a, exposed, ct, prof, year);
          outcome = rng.uniform() < sigmoid(mu) ? 1 : 0;
          PopulationRow pr;
          pr.area = a;
          pr.exposed = exposed;
          pr.after = ct.intervention == 1;
          pr.mu = mu;
          result.population.push_back(pr);
          result.population_prevalence += outcome;
        }

        if (!present[static_cast<std::size_t>(t)]) continue;

        RawResponse row;
        row.person_id = person_id;
        row.area_id = area_id;
        row.interview_year = year;
        row.employment_status = employment;
        row.age = age;
        row.education = dict.education_levels[static_cast<std::size_t>(prof.education)];
        row.ethnicity = dict.ethnicity_levels[static_cast<std::size_t>(prof.ethnicity)];
        row.marital_status = dict.marital_levels[static_cast<std::size_t>(prof.marital_status)];
        row.sex = dict.sex_levels[static_cast<std::size_t>(prof.sex)];
        row.base_weight = base_weight;

        // GHQ items consistent with the outcome under caseness scoring.
        const int caseness = outcome == 1 ? 4 + static_cast<int>(rng.below(9))
                                          : static_cast<int>(rng.below(4));
        std::array<int, kGhqItems> items{};
        for (int k = 0; k < kGhqItems; ++k) {
          items[static_cast<std::size_t>(k)] =
              k < caseness ? 2 + static_cast<int>(rng.below(2)) : static_cast<int>(rng.below(2));
        }
        for (int k = kGhqItems - 1; k > 0; --k) {
          const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(k + 1)));
          std::swap(items[static_cast<std::size_t>(k)], items[static_cast<std::size_t>(j)]);
        }
        row.ghq_items = items;
        result.panel.push_back(std::move(row));
      }
    }
  }
  if (!result.population.empty()) {
    result.population_prevalence /= static_cast<double>(result.population.size());
  }

  // --- implied standardised change over the full population -------------------
  const auto strata_of = [&](int area_filter) {
    detail::StrataMeans m;
    for (const auto& r : result.population) {
      if (area_filter >= 0 && r.area != area_filter) continue;
      if (r.exposed && r.after) {
        m.ea += r.mu;
        ++m.n_ea;
      } else if (r.exposed) {
        m.eb += r.mu;
        ++m.n_eb;
      } else if (r.after) {
        m.ca += r.mu;
        ++m.n_ca;
      } else {
        m.cb += r.mu;
        ++m.n_cb;
      }
    }
    if (m.n_ea) m.ea /= static_cast<double>(m.n_ea);
    if (m.n_eb) m.eb /= static_cast<double>(m.n_eb);
    if (m.n_ca) m.ca /= static_cast<double>(m.n_ca);
    if (m.n_cb) m.cb /= static_cast<double>(m.n_cb);
    return m;
  };
  const detail::StrataMeans national = strata_of(-1);
  if (national.complete()) result.rho_national = detail::rho_from_means(national);
  for (int a = 0; a < config.n_areas; ++a) {
    const detail::StrataMeans m = strata_of(a);
    result.rho_by_area[detail::area_name(a)] =
        m.complete() ? detail::rho_from_means(m) : std::numeric_limits<double>::quiet_NaN();
  }

  // --- ground truth JSON -------------------------------------------------------
  json truth;
  truth["scenario"] = config.to_json();
  json fixed;
  for (std::size_t k = 0; k < result.true_beta_names.size(); ++k) {
    fixed[result.true_beta_names[k]] = result.true_beta[static_cast<Eigen::Index>(k)];
  }
  truth["true_fixed_effects"] = fixed;
  truth["sigma_gamma"] = config.sigma_gamma;
  truth["sigma_delta"] = config.sigma_delta;
  json gamma_by_year;
  for (int t = 0; t < T; ++t) {
    gamma_by_year[std::to_string(config.window.first_year + t)] = result.gamma_true[t];
  }
  truth["gamma_by_year"] = gamma_by_year;
  json delta_by_area;
  json beta6_by_area;
  json aware_by_area;
  json rho_area_json;
  for (int a = 0; a < config.n_areas; ++a) {
    const std::string id = detail::area_name(a);
    delta_by_area[id] = result.delta_true[a];
    if (config.hetero_sd > 0.0) beta6_by_area[id] = beta6_offset[a];
    aware_by_area[id] = awareness_year[static_cast<std::size_t>(a)];
    const double r = result.rho_by_area.at(id);
    if (std::isfinite(r)) rho_area_json[id] = r;
    else rho_area_json[id] = nullptr;
  }
  truth["delta_by_area"] = delta_by_area;
  if (config.hetero_sd > 0.0) truth["beta6_offset_by_area"] = beta6_by_area;
  truth["awareness_year_by_area"] = aware_by_area;
  if (std::isfinite(result.rho_national)) truth["rho_national"] = result.rho_national;
  else truth["rho_national"] = nullptr;
  truth["rho_by_area"] = rho_area_json;
  truth["population_rows"] = result.population.size();
  truth["population_prevalence"] = result.population_prevalence;
  result.ground_truth = std::move(truth);
  return result;
}

// ---------------------------------------------------------------------------
// File emission (the exact CSV schemas the cohort/intervention modules read).

inline void write_panel_csv(const std::string& path, const std::vector<RawResponse>& panel) {
  csv::Writer w(path);
  std::vector<std::string> header = panel_csv_header();
  w.row(header);
  for (const auto& r : panel) {
    std::vector<std::string> row = {r.person_id, r.area_id, std::to_string(r.interview_year)};
    for (int k = 0; k < kGhqItems; ++k) {
      row.push_back(std::to_string(r.ghq_items[static_cast<std::size_t>(k)]));
    }
    row.insert(row.end(), {r.employment_status, std::to_string(r.age), r.education, r.ethnicity,
                           r.marital_status, r.sex, csv::format_double(r.base_weight)});
    w.row(row);
  }
}

inline void write_areas_csv(const std::string& path, const std::vector<AreaAttributes>& areas) {
  csv::Writer w(path);
  w.row({"area_id", "imd_score", "ethnic_minority_proportion"});
  for (const auto& a : areas) {
    w.row({a.area_id, csv::format_double(a.imd_score),
           csv::format_double(a.ethnic_minority_proportion)});
  }
}

inline void write_rollout_csv(const std::string& path,
                              const std::vector<intervention::RolloutSeries>& rollout) {
  csv::Writer w(path);
  w.row({"area_id", "month", "count"});
  for (const auto& s : rollout) {
    for (const auto& [ym, count] : s.months) {
      w.row({s.area_id, ym.str(), std::to_string(count)});
    }
  }
}

// ---------------------------------------------------------------------------
// Scenario library.

// NULL: no intervention effect anywhere; PAPER-LIKE: effect sizes chosen so
// the implied national standardised change sits near +0.15 (a calibration
// target, not a replication); HETEROGENEOUS: area-varying exposed step;
// ORACLE: small instance for sampler cross-checks.
inline std::map<std::string, ScenarioConfig> scenario_library() {
  std::map<std::string, ScenarioConfig> lib;

  ScenarioConfig null_cfg;
  null_cfg.name = "null";
  null_cfg.beta_intercept = logit(0.18);
  null_cfg.beta_exposed = 1.0;
  null_cfg.sigma_gamma = 0.20;
  null_cfg.sigma_delta = 0.20;
  null_cfg.exposure_rate = 0.15;
  null_cfg.sick_rate = 0.02;
  null_cfg.absent_wave1_rate = 0.03;
  null_cfg.nonresponse = true;
  null_cfg.seed = 101;
  lib["null"] = null_cfg;

  ScenarioConfig paper;
  paper.name = "paper_like";
  paper.beta_intercept = logit(0.15);
  paper.beta_year = 0.005;
  paper.beta_intervention = 0.08;
  paper.beta_year_post = 0.01;
  paper.beta_exposed = 1.35;
  paper.beta_exposed_year = 0.03;
  paper.beta_exposed_intervention = 0.33;
  paper.beta_exposed_year_post = -0.02;
  paper.confounder_effects["education"] = {0.12, 0.25};
  paper.confounder_effects["ethnicity"] = {0.05, 0.12, 0.18, 0.10};
  paper.confounder_effects["marital_status"] = {0.20};
  paper.confounder_effects["sex"] = {-0.10};
  paper.confounder_effects["age_band"] = {0.10, 0.15, 0.10, 0.02};
  paper.confounder_effects["deprivation_decile"] = {-0.05, -0.10, -0.14, -0.18, -0.21,
                                                    -0.24, -0.26, -0.28, -0.30};
  paper.confounder_effects["ethnic_mix_quintile"] = {-0.03, -0.06, -0.08, -0.10};
  paper.sigma_gamma = 0.15;
  paper.sigma_delta = 0.25;
  paper.exposure_rate = 0.15;
  paper.sick_rate = 0.02;
  paper.absent_wave1_rate = 0.03;
  paper.nonresponse = true;
  paper.seed = 202;
  lib["paper_like"] = paper;

  ScenarioConfig hetero = paper;
  hetero.name = "heterogeneous";
  hetero.hetero_sd = 0.35;
  hetero.seed = 303;
  lib["heterogeneous"] = hetero;

  ScenarioConfig oracle;
  oracle.name = "oracle";
  oracle.n_areas = 10;
  oracle.n_persons_per_area = 20;
  oracle.window = {2009, 2014};
  oracle.first_awareness_year = 2011;
  oracle.awareness_span = 3;
  oracle.intro_lead_months = 18;
  oracle.beta_intercept = logit(0.18);
  oracle.beta_exposed = 1.0;
  oracle.beta_exposed_intervention = 0.4;
  oracle.beta_intervention = 0.1;
  oracle.confounder_effects["education"] = {0.15, 0.3};
  oracle.confounder_effects["sex"] = {-0.2};
  oracle.sigma_gamma = 0.3;
  oracle.sigma_delta = 0.4;
  oracle.exposure_rate = 0.2;
  oracle.nonresponse = false;
  oracle.seed = 404;
  lib["oracle"] = oracle;

  return lib;
}

}  // namespace its::synth
