#pragma once

// Cohort derivation: distress outcome from GHQ-12, exposure from employment
// status, area groupings, nonresponse-adjusted survey weights, and the
// person-year Observation table with an exhaustive exclusion log.

#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "its/common.hpp"
#include "its/data.hpp"

namespace its::cohort {

// ---------------------------------------------------------------------------
// Outcome.

// Collapse each item to caseness (0,1 -> 0; 2,3 -> 1), sum, threshold at 4.
inline int dichotomize_ghq(const std::vector<int>& ghq_items) {
  if (ghq_items.size() != static_cast<std::size_t>(kGhqItems)) {
    throw validation_error("ghq_items must have exactly 12 entries, got " +
                           std::to_string(ghq_items.size()));
  }
  int caseness_sum = 0;
  for (std::size_t k = 0; k < ghq_items.size(); ++k) {
    const int v = ghq_items[k];
    if (v < 0 || v > 3) {
      throw validation_error("ghq item " + std::to_string(k + 1) + " out of range 0..3: " +
                             std::to_string(v));
    }
    caseness_sum += (v >= 2) ? 1 : 0;
  }
  return caseness_sum >= 4 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Exposure.

enum class Exposure { Control = 0, Exposed = 1, Excluded = 2 };

inline Exposure derive_exposure(const std::string& employment_status,
                                const DataDictionary& dict) {
  if (dict.employment_index(employment_status) < 0) {
    throw validation_error("unknown employment status code: '" + employment_status + "'");
  }
  for (const auto& ex : dict.excluded_levels) {
    if (employment_status == ex) return Exposure::Excluded;
  }
  return employment_status == dict.exposed_level ? Exposure::Exposed : Exposure::Control;
}

// ---------------------------------------------------------------------------
// Area groupings. Rank-based equal-count groups; group sizes differ by at
// most one; ties keep stable input order.

namespace detail {

template <typename Score>
std::map<std::string, int> rank_groups(const std::vector<AreaAttributes>& areas, int n_groups,
                                       Score score, const char* what) {
  if (static_cast<int>(areas.size()) < n_groups) {
    throw validation_error(std::string("cannot form ") + what + ": need at least " +
                           std::to_string(n_groups) + " areas, got " +
                           std::to_string(areas.size()));
  }
  std::vector<std::size_t> order(areas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score(areas[a]) > score(areas[b]);  // descending: group 1 first
  });
  std::map<std::string, int> out;
  const std::size_t n = areas.size();
  for (std::size_t rank = 0; rank < n; ++rank) {
    const int group = static_cast<int>((rank * static_cast<std::size_t>(n_groups)) / n) + 1;
    out[areas[order[rank]].area_id] = group;
  }
  return out;
}

}  // namespace detail

// Decile 1 = most deprived (highest IMD score).
inline std::map<std::string, int> group_deprivation(const std::vector<AreaAttributes>& areas) {
  for (const auto& a : areas) {
    if (!std::isfinite(a.imd_score)) {
      throw validation_error("imd_score not finite for area " + a.area_id);
    }
  }
  return detail::rank_groups(areas, 10, [](const AreaAttributes& a) { return a.imd_score; },
                             "deprivation deciles");
}

// Quintile 1 = most ethnically mixed (highest minority proportion).
inline std::map<std::string, int> group_ethnic_mix(const std::vector<AreaAttributes>& areas) {
  return detail::rank_groups(
      areas, 5, [](const AreaAttributes& a) { return a.ethnic_minority_proportion; },
      "ethnic-mix quintiles");
}

// ---------------------------------------------------------------------------
// Nonresponse weight adjustment.

struct StudyWindow {
  int first_year = 2009;
  int last_year = 2021;

  int n_years() const { return last_year - first_year + 1; }
  bool contains(int year) const { return year >= first_year && year <= last_year; }
};

struct WeightDiagnostics {
  long n_persons = 0;
  long n_clamped = 0;        // p-hat below floor
  bool degenerate = false;   // constant response indicator, no model fit
  Vec response_coefficients; // intercept first, then dummy columns
};

// Plain logistic regression with a weak ridge, Newton iterations.
inline Vec fit_logistic_ridge(const Mat& X, const Eigen::VectorXi& y, double prior_variance) {
  const auto n = X.rows();
  const auto p = X.cols();
  Vec beta = Vec::Zero(p);
  for (int iter = 0; iter < 100; ++iter) {
    Vec eta = X * beta;
    Vec mu(n);
    Vec s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = sigmoid(eta[i]);
      s[i] = mu[i] * (1.0 - mu[i]);
    }
    Vec grad = X.transpose() * (y.cast<double>() - mu) - beta / prior_variance;
    Mat hess = X.transpose() * s.asDiagonal() * X;
    hess.diagonal().array() += 1.0 / prior_variance;
    Vec step = hess.ldlt().solve(grad);
    beta += step;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return beta;
}

struct PersonWeight {
  double weight = 1.0;  // base_weight / p-hat, before rescaling
  double phat = 1.0;
  bool clamped = false;
};

// Weight = base / P(respond to all subsequent waves | wave-1 covariates).
// Response probabilities below `phat_floor` are clamped and flagged.
// `person_covariates` holds one dummy-coded row per person (no intercept
// column; it is added here); `responded_all` is the all-subsequent-waves
// indicator. When the indicator is constant there is nothing to model and
// the observed rate is used directly.
inline std::vector<PersonWeight> adjust_weights(const std::vector<double>& base_weights,
                                                const Mat& person_covariates,
                                                const std::vector<bool>& responded_all,
                                                double phat_floor,
                                                WeightDiagnostics* diag = nullptr) {
  const std::size_t n = base_weights.size();
  if (person_covariates.rows() != static_cast<Eigen::Index>(n) ||
      responded_all.size() != n) {
    throw validation_error("adjust_weights: inconsistent input sizes");
  }
  if (n == 0) return {};
  std::size_t n_resp = 0;
  for (const bool r : responded_all) n_resp += r ? 1u : 0u;

  std::vector<double> phat(n, 1.0);
  Vec coef;
  bool degenerate = false;
  if (n_resp == 0 || n_resp == n) {
    degenerate = true;
    const double rate = static_cast<double>(n_resp) / static_cast<double>(n);
    std::fill(phat.begin(), phat.end(), rate);
  } else {
    Mat X(static_cast<Eigen::Index>(n), person_covariates.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(person_covariates.cols()) = person_covariates;
    Eigen::VectorXi y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = responded_all[i] ? 1 : 0;
    coef = fit_logistic_ridge(X, y, 1000.0);
    Vec eta = X * coef;
    for (std::size_t i = 0; i < n; ++i) phat[i] = sigmoid(eta[static_cast<Eigen::Index>(i)]);
  }

  std::vector<PersonWeight> out(n);
  long n_clamped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    PersonWeight pw;
    pw.phat = phat[i];
    if (pw.phat < phat_floor) {
      pw.phat = phat_floor;
      pw.clamped = true;
      ++n_clamped;
    }
    pw.weight = base_weights[i] / pw.phat;
    out[i] = pw;
  }
  if (diag) {
    diag->n_persons = static_cast<long>(n);
    diag->n_clamped = n_clamped;
    diag->degenerate = degenerate;
    diag->response_coefficients = coef;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full cohort build.

struct CohortOptions {
  StudyWindow window;
  double phat_floor = 0.01;
  // Wave-1 covariates for the response model (individual-level fields only).
  std::vector<std::string> response_covariates = {"age_band", "education", "ethnicity",
                                                  "marital_status", "sex"};
};

struct ExclusionLog {
  long n_raw_rows = 0;
  long n_retained = 0;
  std::map<std::string, long> reasons;  // reason -> excluded row count

  long n_excluded() const {
    long total = 0;
    for (const auto& [_, c] : reasons) total += c;
    return total;
  }
};

struct Cohort {
  std::vector<Observation> observations;
  std::map<std::string, int> deprivation_decile;
  std::map<std::string, int> ethnic_mix_quintile;
  ExclusionLog exclusions;
  WeightDiagnostics weight_diagnostics;
};

// Dummy-code the selected fields of a wave-1 row (reference level dropped).
namespace detail {

inline int covariate_width(const DataDictionary& dict, const std::vector<std::string>& fields) {
  int w = 0;
  for (const auto& f : fields) w += static_cast<int>(dict.levels(f).size()) - 1;
  return w;
}

inline void fill_covariate_row(Mat& X, Eigen::Index row, const DataDictionary& dict,
                               const std::vector<std::string>& fields,
                               const ConfounderProfile& profile) {
  int col = 0;
  for (const auto& f : fields) {
    const int n_levels = static_cast<int>(dict.levels(f).size());
    const int idx = profile.level_index(f);
    for (int level = 1; level < n_levels; ++level) {
      X(row, col++) = (idx == level) ? 1.0 : 0.0;
    }
  }
}

}  // namespace detail

// Ingest raw person-year rows and produce the analysis table. Rows are
// excluded (and counted) for: person absent at wave 1, excluded employment
// status, age outside the working range. Structural problems (unknown area,
// year outside the window, invalid GHQ items) are validation errors.
inline Cohort build_cohort(const std::vector<RawResponse>& raw,
                           const std::vector<AreaAttributes>& areas,
                           const DataDictionary& dict, const CohortOptions& options) {
  Cohort cohort;
  cohort.exclusions.n_raw_rows = static_cast<long>(raw.size());
  cohort.deprivation_decile = group_deprivation(areas);
  cohort.ethnic_mix_quintile = group_ethnic_mix(areas);

  std::set<std::string> known_areas;
  for (const auto& a : areas) known_areas.insert(a.area_id);
  std::set<std::string> offenders;
  for (const auto& r : raw) {
    if (!options.window.contains(r.interview_year)) {
      throw validation_error("line " + std::to_string(r.source_line) + ": interview_year " +
                             std::to_string(r.interview_year) + " outside study window " +
                             std::to_string(options.window.first_year) + ".." +
                             std::to_string(options.window.last_year));
    }
    if (!known_areas.count(r.area_id)) offenders.insert(r.area_id);
  }
  if (!offenders.empty()) {
    std::string msg = "areas without attributes:";
    for (const auto& a : offenders) msg += " " + a;
    throw validation_error(msg);
  }

  // Group rows by person, in first-appearance order.
  std::vector<std::string> person_order;
  std::map<std::string, std::vector<std::size_t>> person_rows;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = person_rows.try_emplace(raw[i].person_id);
    if (inserted) person_order.push_back(raw[i].person_id);
    it->second.push_back(i);
  }

  // Wave-1 presence and the all-subsequent-waves response indicator
  // (derived from row presence: a person responded in a year iff a row
  // exists for that year).
  struct PersonInfo {
    std::size_t wave1_row = 0;
    bool responded_all = false;
  };
  std::vector<std::string> retained_persons;
  std::vector<PersonInfo> infos;
  long absent_wave1_rows = 0;
  for (const auto& pid : person_order) {
    const auto& rows = person_rows[pid];
    std::set<int> years;
    int wave1 = -1;
    for (const std::size_t i : rows) {
      years.insert(raw[i].interview_year);
      if (raw[i].interview_year == options.window.first_year && wave1 < 0) {
        wave1 = static_cast<int>(i);
      }
    }
    if (wave1 < 0) {
      absent_wave1_rows += static_cast<long>(rows.size());
      continue;
    }
    PersonInfo info;
    info.wave1_row = static_cast<std::size_t>(wave1);
    info.responded_all = static_cast<int>(years.size()) == options.window.n_years();
    retained_persons.push_back(pid);
    infos.push_back(info);
  }
  if (absent_wave1_rows > 0) {
    cohort.exclusions.reasons["absent_at_wave_1"] = absent_wave1_rows;
  }

  // Wave-1 confounder profiles for the response model.
  const auto profile_of = [&](const RawResponse& r) {
    ConfounderProfile p;
    p.age_band = dict.age_band_index(r.age);
    p.education = DataDictionary::index_of(dict.education_levels, r.education);
    p.ethnicity = DataDictionary::index_of(dict.ethnicity_levels, r.ethnicity);
    p.marital_status = DataDictionary::index_of(dict.marital_levels, r.marital_status);
    p.sex = DataDictionary::index_of(dict.sex_levels, r.sex);
    return p;
  };

  const int cov_width = detail::covariate_width(dict, options.response_covariates);
  Mat X(static_cast<Eigen::Index>(retained_persons.size()), cov_width);
  X.setZero();
  std::vector<double> base_weights(retained_persons.size());
  std::vector<bool> responded(retained_persons.size());
  for (std::size_t k = 0; k < retained_persons.size(); ++k) {
    const RawResponse& w1 = raw[infos[k].wave1_row];
    ConfounderProfile p = profile_of(w1);
    // An out-of-range wave-1 age contributes the reference band to the
    // response model; the row itself is filtered later.
    if (p.age_band < 0) p.age_band = 0;
    detail::fill_covariate_row(X, static_cast<Eigen::Index>(k), dict,
                               options.response_covariates, p);
    base_weights[k] = w1.base_weight;
    responded[k] = infos[k].responded_all;
  }
  const auto person_weights = adjust_weights(base_weights, X, responded, options.phat_floor,
                                             &cohort.weight_diagnostics);
  std::map<std::string, double> weight_of;
  for (std::size_t k = 0; k < retained_persons.size(); ++k) {
    weight_of[retained_persons[k]] = person_weights[k].weight;
  }

  // Row-level derivation.
  long employment_excluded = 0;
  long age_excluded = 0;
  for (const auto& pid : retained_persons) {
    for (const std::size_t i : person_rows[pid]) {
      const RawResponse& r = raw[i];
      const Exposure exposure = derive_exposure(r.employment_status, dict);
      if (exposure == Exposure::Excluded) {
        ++employment_excluded;
        continue;
      }
      ConfounderProfile p = profile_of(r);
      if (p.age_band < 0) {
        ++age_excluded;
        continue;
      }
      std::vector<int> items(r.ghq_items.begin(), r.ghq_items.end());
      int outcome;
      try {
        outcome = dichotomize_ghq(items);
      } catch (const validation_error& e) {
        throw validation_error("line " + std::to_string(r.source_line) + ": " + e.what());
      }
      p.deprivation_decile = cohort.deprivation_decile.at(r.area_id);
      p.ethnic_mix_quintile = cohort.ethnic_mix_quintile.at(r.area_id);
      Observation obs;
      obs.person_id = r.person_id;
      obs.area_id = r.area_id;
      obs.year = r.interview_year;
      obs.outcome = outcome;
      obs.exposed = exposure == Exposure::Exposed ? 1 : 0;
      obs.confounders = p;
      obs.weight = weight_of.at(pid);
      cohort.observations.push_back(std::move(obs));
    }
  }
  if (employment_excluded > 0) {
    cohort.exclusions.reasons["employment_status_excluded"] = employment_excluded;
  }
  if (age_excluded > 0) {
    cohort.exclusions.reasons["age_outside_working_range"] = age_excluded;
  }
  cohort.exclusions.n_retained = static_cast<long>(cohort.observations.size());

  // Rescale weights to mean 1 over the analysis sample.
  if (!cohort.observations.empty()) {
    double total = 0.0;
    for (const auto& o : cohort.observations) total += o.weight;
    const double mean = total / static_cast<double>(cohort.observations.size());
    if (!(mean > 0.0)) {
      throw validation_error("weights have nonpositive mean; check base weights");
    }
    for (auto& o : cohort.observations) o.weight /= mean;
  }
  return cohort;
}

}  // namespace its::cohort
