#pragma once

// Regression design for the interrupted-time-series model: ITS block,
// exposure interactions, dummy-coded confounders, and index maps for the
// temporal and spatial random effects. Column order is fixed and recorded
// in a layout manifest.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/common.hpp"
#include "its/data.hpp"
#include "its/intervention.hpp"

namespace its::model {

struct ModelLayout {
  std::vector<std::string> fixed_names;            // design columns, in order
  std::vector<std::string> confounder_fields;      // fields included, in order
  std::map<std::string, std::string> reference_levels;
  std::vector<int> years;          // t index -> calendar year
  std::vector<std::string> areas;  // l index -> area_id
  cohort::StudyWindow window;

  int n_fixed() const { return static_cast<int>(fixed_names.size()); }
  int n_times() const { return static_cast<int>(years.size()); }
  int n_areas() const { return static_cast<int>(areas.size()); }
  int latent_dim() const { return n_fixed() + n_times() + n_areas(); }
  // Latent coordinates plus (log sigma_gamma, log sigma_delta).
  int full_dim() const { return latent_dim() + 2; }

  int gamma_offset() const { return n_fixed(); }
  int delta_offset() const { return n_fixed() + n_times(); }
  int lsg_index() const { return latent_dim(); }
  int lsd_index() const { return latent_dim() + 1; }

  int time_index(int year) const { return year - window.first_year; }

  int area_index(const std::string& area_id) const {
    const auto it = std::lower_bound(areas.begin(), areas.end(), area_id);
    if (it == areas.end() || *it != area_id) return -1;
    return static_cast<int>(it - areas.begin());
  }

  // Name of any coordinate in the full parameter vector.
  std::string coordinate_name(int k) const {
    if (k < n_fixed()) return fixed_names[static_cast<std::size_t>(k)];
    if (k < delta_offset()) {
      return "gamma[" + std::to_string(years[static_cast<std::size_t>(k - gamma_offset())]) + "]";
    }
    if (k < latent_dim()) {
      return "delta[" + areas[static_cast<std::size_t>(k - delta_offset())] + "]";
    }
    return k == lsg_index() ? "log_sigma_gamma" : "log_sigma_delta";
  }

  json to_json() const {
    json j;
    j["columns"] = fixed_names;
    j["confounder_fields"] = confounder_fields;
    j["reference_levels"] = reference_levels;
    j["time_index_to_year"] = years;
    j["area_index_to_area_id"] = areas;
    j["study_window"] = {{"first_year", window.first_year}, {"last_year", window.last_year}};
    // Normal(0, 1000) is read as variance 1000; see PriorSpec.
    j["fixed_effect_prior"] = "normal, variance per prior spec (flat intercept)";
    j["random_effect_centering"] = "soft sum-to-zero penalty on gamma and delta";
    return j;
  }

  static ModelLayout from_json(const json& j) {
    ModelLayout m;
    m.fixed_names = j.at("columns").get<std::vector<std::string>>();
    m.confounder_fields = j.at("confounder_fields").get<std::vector<std::string>>();
    m.reference_levels = j.at("reference_levels").get<std::map<std::string, std::string>>();
    m.years = j.at("time_index_to_year").get<std::vector<int>>();
    m.areas = j.at("area_index_to_area_id").get<std::vector<std::string>>();
    m.window.first_year = j.at("study_window").at("first_year").get<int>();
    m.window.last_year = j.at("study_window").at("last_year").get<int>();
    return m;
  }
};

// Per-row metadata preserved for effect queries.
struct RowInfo {
  int exposed = 0;
  intervention::CenteredTime centered;
  int t = 0;  // time index
  int l = 0;  // area index
  ConfounderProfile profile;
};

struct Design {
  Mat X;              // n x n_fixed
  Vec y;              // outcomes
  Vec w;              // survey weights
  Eigen::VectorXi t_idx;
  Eigen::VectorXi l_idx;
  std::vector<RowInfo> rows;
  ModelLayout layout;

  Eigen::Index n() const { return X.rows(); }
};

// Builds one design row per observation. Interaction columns are the
// elementwise product of `exposed` with the ITS block; each categorical
// contributes (levels - 1) indicators with the first declared level as
// reference.
inline Design build_design(const std::vector<Observation>& observations,
                           const std::map<std::string, intervention::InterventionTimeline>& timelines,
                           const DataDictionary& dict,
                           const std::vector<std::string>& confounder_fields,
                           const cohort::StudyWindow& window) {
  std::set<std::string> missing;
  std::set<std::string> area_set;
  for (const auto& o : observations) {
    if (!timelines.count(o.area_id)) missing.insert(o.area_id);
    area_set.insert(o.area_id);
  }
  if (!missing.empty()) {
    std::string msg = "areas without intervention timelines:";
    for (const auto& a : missing) msg += " " + a;
    throw validation_error(msg);
  }
  for (const auto& f : confounder_fields) {
    (void)dict.levels(f);  // validates the field name
  }

  Design d;
  d.layout.window = window;
  d.layout.confounder_fields = confounder_fields;
  d.layout.areas.assign(area_set.begin(), area_set.end());
  for (int y = window.first_year; y <= window.last_year; ++y) d.layout.years.push_back(y);

  d.layout.fixed_names = {"intercept", "year", "intervention", "year_post",
                          "exposed",   "exposed:year", "exposed:intervention",
                          "exposed:year_post"};
  struct DummyCol {
    std::string field;
    int level;
  };
  std::vector<DummyCol> dummy_cols;
  for (const auto& f : confounder_fields) {
    const auto levels = dict.levels(f);
    d.layout.reference_levels[f] = levels.front();
    for (std::size_t level = 1; level < levels.size(); ++level) {
      d.layout.fixed_names.push_back(f + "=" + levels[level]);
      dummy_cols.push_back({f, static_cast<int>(level)});
    }
  }

  const auto n = static_cast<Eigen::Index>(observations.size());
  const int P = d.layout.n_fixed();
  d.X = Mat::Zero(n, P);
  d.y = Vec(n);
  d.w = Vec(n);
  d.t_idx = Eigen::VectorXi(n);
  d.l_idx = Eigen::VectorXi(n);
  d.rows.resize(observations.size());

  for (Eigen::Index i = 0; i < n; ++i) {
    const Observation& o = observations[static_cast<std::size_t>(i)];
    const auto& tl = timelines.at(o.area_id);
    const intervention::CenteredTime ct = intervention::center_time(o.year, tl.awareness_year, window);

    RowInfo info;
    info.exposed = o.exposed;
    info.centered = ct;
    info.t = d.layout.time_index(o.year);
    info.l = d.layout.area_index(o.area_id);
    info.profile = o.confounders;
    d.rows[static_cast<std::size_t>(i)] = info;

    d.X(i, 0) = 1.0;
    d.X(i, 1) = static_cast<double>(ct.year);
    d.X(i, 2) = static_cast<double>(ct.intervention);
    d.X(i, 3) = static_cast<double>(ct.year_post);
    const double e = static_cast<double>(o.exposed);
    d.X(i, 4) = e;
    d.X(i, 5) = e * d.X(i, 1);
    d.X(i, 6) = e * d.X(i, 2);
    d.X(i, 7) = e * d.X(i, 3);
    for (std::size_t c = 0; c < dummy_cols.size(); ++c) {
      const auto& dc = dummy_cols[c];
      const int idx = o.confounders.level_index(dc.field);
      d.X(i, 8 + static_cast<Eigen::Index>(c)) = (idx == dc.level) ? 1.0 : 0.0;
    }

    d.y[i] = static_cast<double>(o.outcome);
    if (!(o.weight > 0.0)) {
      throw validation_error("observation " + std::to_string(i) + " has nonpositive weight");
    }
    d.w[i] = o.weight;
    d.t_idx[i] = info.t;
    d.l_idx[i] = info.l;
  }
  return d;
}

}  // namespace its::model
