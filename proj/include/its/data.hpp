#pragma once

// Domain records and the categorical data dictionary. Level sets are fixed
// up front (from the dictionary) so that design layouts are stable across
// runs and across datasets drawn from the same dictionary.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/common.hpp"
#include "its/csv.hpp"

namespace its {

using json = nlohmann::ordered_json;

inline constexpr int kGhqItems = 12;

// Individual-level confounder fields plus the two area-level groupings.
// Order here fixes the design-matrix block order.
inline const std::vector<std::string>& confounder_field_names() {
  static const std::vector<std::string> names = {
      "age_band", "education", "ethnicity", "marital_status",
      "sex",      "deprivation_decile", "ethnic_mix_quintile"};
  return names;
}

struct DataDictionary {
  std::vector<std::string> employment_levels;
  std::string exposed_level;
  std::vector<std::string> excluded_levels;

  std::vector<std::string> education_levels;
  std::vector<std::string> ethnicity_levels;
  std::vector<std::string> marital_levels;
  std::vector<std::string> sex_levels;

  // Half-open age bands: edges {16,25,35,45,55,65} give [16,25) .. [55,65).
  std::vector<int> age_band_edges;

  std::vector<std::string> age_band_labels() const {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k + 1 < age_band_edges.size(); ++k) {
      labels.push_back("[" + std::to_string(age_band_edges[k]) + "," +
                       std::to_string(age_band_edges[k + 1]) + ")");
    }
    return labels;
  }

  int min_age() const { return age_band_edges.front(); }
  int max_age_exclusive() const { return age_band_edges.back(); }

  // -1 when the age is outside working range.
  int age_band_index(int age) const {
    for (std::size_t k = 0; k + 1 < age_band_edges.size(); ++k) {
      if (age >= age_band_edges[k] && age < age_band_edges[k + 1]) return static_cast<int>(k);
    }
    return -1;
  }

  int employment_index(const std::string& level) const {
    for (std::size_t k = 0; k < employment_levels.size(); ++k) {
      if (employment_levels[k] == level) return static_cast<int>(k);
    }
    return -1;
  }

  // Levels of a confounder field, in declared order (first level = reference).
  std::vector<std::string> levels(const std::string& field) const {
    if (field == "age_band") return age_band_labels();
    if (field == "education") return education_levels;
    if (field == "ethnicity") return ethnicity_levels;
    if (field == "marital_status") return marital_levels;
    if (field == "sex") return sex_levels;
    if (field == "deprivation_decile") {
      std::vector<std::string> v;
      for (int d = 1; d <= 10; ++d) v.push_back(std::to_string(d));
      return v;
    }
    if (field == "ethnic_mix_quintile") {
      std::vector<std::string> v;
      for (int q = 1; q <= 5; ++q) v.push_back(std::to_string(q));
      return v;
    }
    throw validation_error("unknown confounder field: " + field);
  }

  static int index_of(const std::vector<std::string>& levels, const std::string& value) {
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (levels[k] == value) return static_cast<int>(k);
    }
    return -1;
  }

  json to_json() const {
    json j;
    j["employment_status"] = {{"levels", employment_levels},
                              {"exposed", exposed_level},
                              {"excluded", excluded_levels}};
    j["education"] = {{"levels", education_levels}};
    j["ethnicity"] = {{"levels", ethnicity_levels}};
    j["marital_status"] = {{"levels", marital_levels}};
    j["sex"] = {{"levels", sex_levels}};
    j["age_band_edges"] = age_band_edges;
    return j;
  }

  static DataDictionary from_json(const json& j) {
    DataDictionary d;
    d.employment_levels = j.at("employment_status").at("levels").get<std::vector<std::string>>();
    d.exposed_level = j.at("employment_status").at("exposed").get<std::string>();
    d.excluded_levels = j.at("employment_status").at("excluded").get<std::vector<std::string>>();
    d.education_levels = j.at("education").at("levels").get<std::vector<std::string>>();
    d.ethnicity_levels = j.at("ethnicity").at("levels").get<std::vector<std::string>>();
    d.marital_levels = j.at("marital_status").at("levels").get<std::vector<std::string>>();
    d.sex_levels = j.at("sex").at("levels").get<std::vector<std::string>>();
    d.age_band_edges = j.at("age_band_edges").get<std::vector<int>>();
    d.validate();
    return d;
  }

  void validate() const {
    if (employment_levels.empty()) throw validation_error("dictionary: no employment levels");
    if (employment_index(exposed_level) < 0) {
      throw validation_error("dictionary: exposed level '" + exposed_level + "' not declared");
    }
    for (const auto& ex : excluded_levels) {
      if (employment_index(ex) < 0) {
        throw validation_error("dictionary: excluded level '" + ex + "' not declared");
      }
    }
    if (age_band_edges.size() < 2) throw validation_error("dictionary: need at least one age band");
    for (std::size_t k = 0; k + 1 < age_band_edges.size(); ++k) {
      if (age_band_edges[k] >= age_band_edges[k + 1]) {
        throw validation_error("dictionary: age band edges must be strictly increasing");
      }
    }
  }
};

// UKHLS-style employment responses (14 options) and Table-2-style levels.
inline DataDictionary default_dictionary() {
  DataDictionary d;
  d.employment_levels = {"self employed",
                         "employed full time",
                         "employed part time",
                         "unemployed",
                         "retired",
                         "maternity leave",
                         "family care or home",
                         "full-time student",
                         "long-term sick or disabled",
                         "government training scheme",
                         "unpaid family business",
                         "apprenticeship",
                         "furloughed",
                         "doing something else"};
  d.exposed_level = "unemployed";
  d.excluded_levels = {"long-term sick or disabled"};
  d.education_levels = {"Degree or higher", "GCSE, A-level or equivalent",
                        "Below GCSE and other"};
  d.ethnicity_levels = {"White", "Mixed", "Asian", "Black", "Other"};
  d.marital_levels = {"Married or civil partnership", "Unmarried"};
  d.sex_levels = {"Female", "Male"};
  d.age_band_edges = {16, 25, 35, 45, 55, 65};
  return d;
}

// One person-year survey row as ingested.
struct RawResponse {
  std::string person_id;
  std::string area_id;
  int interview_year = 0;
  std::array<int, kGhqItems> ghq_items{};
  std::string employment_status;
  int age = 0;
  std::string education;
  std::string ethnicity;
  std::string marital_status;
  std::string sex;
  double base_weight = 1.0;
  std::size_t source_line = 0;
};

struct AreaAttributes {
  std::string area_id;
  double imd_score = 0.0;
  double ethnic_minority_proportion = 0.0;
};

// Confounder profile as level indices into the dictionary's level sets.
struct ConfounderProfile {
  int age_band = 0;
  int education = 0;
  int ethnicity = 0;
  int marital_status = 0;
  int sex = 0;
  int deprivation_decile = 1;   // 1 = most deprived
  int ethnic_mix_quintile = 1;  // 1 = most ethnically mixed

  // 0-based level index for a named field.
  int level_index(const std::string& field) const {
    if (field == "age_band") return age_band;
    if (field == "education") return education;
    if (field == "ethnicity") return ethnicity;
    if (field == "marital_status") return marital_status;
    if (field == "sex") return sex;
    if (field == "deprivation_decile") return deprivation_decile - 1;
    if (field == "ethnic_mix_quintile") return ethnic_mix_quintile - 1;
    throw validation_error("unknown confounder field: " + field);
  }
};

// One analysis-ready person-year record.
struct Observation {
  std::string person_id;
  std::string area_id;
  int year = 0;  // calendar interview year
  int outcome = 0;
  int exposed = 0;
  ConfounderProfile confounders;
  double weight = 1.0;
};

// ---------------------------------------------------------------------------
// CSV schemas.

inline std::vector<std::string> panel_csv_header() {
  std::vector<std::string> h = {"person_id", "area_id", "interview_year"};
  for (int k = 1; k <= kGhqItems; ++k) h.push_back("ghq_" + std::to_string(k));
  h.insert(h.end(), {"employment_status", "age", "education", "ethnicity", "marital_status",
                     "sex", "base_weight"});
  return h;
}

inline std::vector<RawResponse> read_panel_csv(const std::string& path,
                                               const DataDictionary& dict) {
  const csv::Table t = csv::read_file(path);
  const auto expected = panel_csv_header();
  for (const auto& name : expected) t.require_column(name, path);
  const int c_pid = t.column("person_id");
  const int c_area = t.column("area_id");
  const int c_year = t.column("interview_year");
  std::array<int, kGhqItems> c_ghq{};
  for (int k = 0; k < kGhqItems; ++k) c_ghq[static_cast<std::size_t>(k)] = t.column("ghq_" + std::to_string(k + 1));
  const int c_emp = t.column("employment_status");
  const int c_age = t.column("age");
  const int c_edu = t.column("education");
  const int c_eth = t.column("ethnicity");
  const int c_mar = t.column("marital_status");
  const int c_sex = t.column("sex");
  const int c_w = t.column("base_weight");

  std::vector<RawResponse> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    RawResponse rec;
    rec.source_line = line;
    rec.person_id = row[static_cast<std::size_t>(c_pid)];
    rec.area_id = row[static_cast<std::size_t>(c_area)];
    rec.interview_year = static_cast<int>(csv::parse_long(row[static_cast<std::size_t>(c_year)], "interview_year", line));
    for (int k = 0; k < kGhqItems; ++k) {
      rec.ghq_items[static_cast<std::size_t>(k)] = static_cast<int>(
          csv::parse_long(row[static_cast<std::size_t>(c_ghq[static_cast<std::size_t>(k)])], "ghq item", line));
    }
    rec.employment_status = row[static_cast<std::size_t>(c_emp)];
    if (dict.employment_index(rec.employment_status) < 0) {
      throw validation_error(path + ": line " + std::to_string(line) +
                             ": unknown employment_status '" + rec.employment_status + "'");
    }
    rec.age = static_cast<int>(csv::parse_long(row[static_cast<std::size_t>(c_age)], "age", line));
    rec.education = row[static_cast<std::size_t>(c_edu)];
    rec.ethnicity = row[static_cast<std::size_t>(c_eth)];
    rec.marital_status = row[static_cast<std::size_t>(c_mar)];
    rec.sex = row[static_cast<std::size_t>(c_sex)];
    const auto check_level = [&](const std::vector<std::string>& levels, const std::string& value,
                                 const char* field) {
      if (DataDictionary::index_of(levels, value) < 0) {
        throw validation_error(path + ": line " + std::to_string(line) + ": unknown " + field +
                               " level '" + value + "'");
      }
    };
    check_level(dict.education_levels, rec.education, "education");
    check_level(dict.ethnicity_levels, rec.ethnicity, "ethnicity");
    check_level(dict.marital_levels, rec.marital_status, "marital_status");
    check_level(dict.sex_levels, rec.sex, "sex");
    rec.base_weight = csv::parse_double(row[static_cast<std::size_t>(c_w)], "base_weight", line);
    if (!(rec.base_weight >= 0.0) || !std::isfinite(rec.base_weight)) {
      throw validation_error(path + ": line " + std::to_string(line) +
                             ": base_weight must be a nonnegative real");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<AreaAttributes> read_areas_csv(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const int c_area = t.require_column("area_id", path);
  const int c_imd = t.require_column("imd_score", path);
  const int c_eth = t.require_column("ethnic_minority_proportion", path);
  std::vector<AreaAttributes> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    AreaAttributes a;
    a.area_id = row[static_cast<std::size_t>(c_area)];
    a.imd_score = csv::parse_double(row[static_cast<std::size_t>(c_imd)], "imd_score", line);
    a.ethnic_minority_proportion =
        csv::parse_double(row[static_cast<std::size_t>(c_eth)], "ethnic_minority_proportion", line);
    if (!std::isfinite(a.imd_score)) {
      throw validation_error(path + ": line " + std::to_string(line) + ": imd_score not finite");
    }
    if (a.ethnic_minority_proportion < 0.0 || a.ethnic_minority_proportion > 1.0) {
      throw validation_error(path + ": line " + std::to_string(line) +
                             ": ethnic_minority_proportion outside [0,1]");
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace its
