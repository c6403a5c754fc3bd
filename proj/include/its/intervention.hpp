#pragma once

// Intervention timing: contextual-awareness (threshold crossing of the
// end-of-study rollout total) or first introduction, and the centered time
// variables derived from each area's awareness year.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/cohort.hpp"
#include "its/common.hpp"
#include "its/csv.hpp"

namespace its::intervention {

struct YearMonth {
  int year = 0;
  int month = 1;  // 1..12

  int index() const { return year * 12 + (month - 1); }
  auto operator<=>(const YearMonth&) const = default;

  std::string str() const {
    std::string m = std::to_string(month);
    if (m.size() == 1) m = "0" + m;
    return std::to_string(year) + "-" + m;
  }

  static YearMonth parse(const std::string& s, std::size_t line_no = 0) {
    if (s.size() != 7 || s[4] != '-') {
      throw validation_error("line " + std::to_string(line_no) +
                             ": month must be ISO year-month (YYYY-MM), got '" + s + "'");
    }
    YearMonth ym;
    ym.year = static_cast<int>(csv::parse_long(s.substr(0, 4), "year", line_no));
    ym.month = static_cast<int>(csv::parse_long(s.substr(5, 2), "month", line_no));
    if (ym.month < 1 || ym.month > 12) {
      throw validation_error("line " + std::to_string(line_no) + ": month out of range in '" + s +
                             "'");
    }
    return ym;
  }
};

struct RolloutSeries {
  std::string area_id;
  std::vector<std::pair<YearMonth, long>> months;  // strictly increasing

  long final_count() const { return months.empty() ? 0 : months.back().second; }

  void validate() const {
    if (months.empty()) throw validation_error("rollout series for " + area_id + " is empty");
    for (std::size_t i = 0; i < months.size(); ++i) {
      if (months[i].second < 0) {
        throw validation_error("rollout series for " + area_id + " has a negative count at " +
                               months[i].first.str());
      }
      if (i > 0 && !(months[i - 1].first < months[i].first)) {
        throw validation_error("rollout series for " + area_id +
                               " months not strictly increasing at " + months[i].first.str());
      }
    }
  }
};

// First month whose count reaches threshold_pct% of the final-month total.
// A month qualifies only with a positive count, so an all-zero series (and
// any series whose reference total is zero) yields no awareness.
inline std::optional<YearMonth> awareness_month(const RolloutSeries& series, double threshold_pct) {
  if (series.months.empty()) {
    throw validation_error("awareness_month: empty rollout series for " + series.area_id);
  }
  if (!(threshold_pct > 0.0) || threshold_pct > 100.0) {
    throw validation_error("awareness threshold_pct must be in (0,100], got " +
                           std::to_string(threshold_pct));
  }
  series.validate();
  const double threshold_count =
      threshold_pct / 100.0 * static_cast<double>(series.final_count());
  for (const auto& [ym, count] : series.months) {
    if (count > 0 && static_cast<double>(count) >= threshold_count) return ym;
  }
  return std::nullopt;
}

// First month with at least one recipient.
inline std::optional<YearMonth> introduction_month(const RolloutSeries& series) {
  if (series.months.empty()) {
    throw validation_error("introduction_month: empty rollout series for " + series.area_id);
  }
  series.validate();
  for (const auto& [ym, count] : series.months) {
    if (count >= 1) return ym;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Intervention definition and per-area timelines.

struct InterventionDefinition {
  enum class Kind { Introduction, Awareness };
  Kind kind = Kind::Awareness;
  double threshold_pct = 25.0;

  static InterventionDefinition introduction() {
    InterventionDefinition d;
    d.kind = Kind::Introduction;
    d.threshold_pct = 0.0;
    return d;
  }

  static InterventionDefinition awareness(double pct) {
    InterventionDefinition d;
    d.kind = Kind::Awareness;
    d.threshold_pct = pct;
    return d;
  }

  std::string label() const {
    if (kind == Kind::Introduction) return "introduction";
    std::string pct = csv::format_double(threshold_pct);
    return "awareness_" + pct + "pct";
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    if (kind == Kind::Introduction) {
      j["type"] = "introduction";
    } else {
      j["type"] = "awareness";
      j["pct"] = threshold_pct;
    }
    return j;
  }

  static InterventionDefinition from_json(const nlohmann::ordered_json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "introduction") return introduction();
    if (type == "awareness") return awareness(j.at("pct").get<double>());
    throw validation_error("intervention definition type must be 'awareness' or 'introduction', "
                           "got '" + type + "'");
  }
};

struct InterventionTimeline {
  std::string area_id;
  std::optional<int> awareness_year;  // nullopt = never intervened
  InterventionDefinition definition;
};

// The crossing month's calendar year becomes the awareness year; outcome
// data are yearly, so every interview in that year or later is post.
inline InterventionTimeline derive_timeline(const RolloutSeries& series,
                                            const InterventionDefinition& def) {
  InterventionTimeline t;
  t.area_id = series.area_id;
  t.definition = def;
  const std::optional<YearMonth> crossing = def.kind == InterventionDefinition::Kind::Introduction
                                                ? introduction_month(series)
                                                : awareness_month(series, def.threshold_pct);
  if (crossing) t.awareness_year = crossing->year;
  return t;
}

inline std::map<std::string, InterventionTimeline> derive_timelines(
    const std::vector<RolloutSeries>& series, const InterventionDefinition& def) {
  std::map<std::string, InterventionTimeline> out;
  for (const auto& s : series) {
    if (out.count(s.area_id)) {
      throw validation_error("duplicate rollout series for area " + s.area_id);
    }
    out[s.area_id] = derive_timeline(s, def);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Centered time.

struct CenteredTime {
  int year = 0;          // interview year minus awareness year
  int intervention = 0;  // 1 iff year >= 0
  int year_post = 0;     // max(year, 0)
};

// Never-aware areas are centered on a sentinel one year past the study
// window, keeping every row pre-intervention.
inline CenteredTime center_time(int interview_year, std::optional<int> awareness_year,
                                const cohort::StudyWindow& window) {
  if (!window.contains(interview_year)) {
    throw validation_error("interview year " + std::to_string(interview_year) +
                           " outside study window");
  }
  const int anchor = awareness_year ? *awareness_year : window.last_year + 1;
  CenteredTime ct;
  ct.year = interview_year - anchor;
  ct.intervention = ct.year >= 0 ? 1 : 0;
  ct.year_post = std::max(ct.year, 0);
  return ct;
}

// ---------------------------------------------------------------------------
// Rollout CSV: area_id, month (ISO year-month), count.

inline std::vector<RolloutSeries> read_rollout_csv(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const int c_area = t.require_column("area_id", path);
  const int c_month = t.require_column("month", path);
  const int c_count = t.require_column("count", path);

  std::vector<std::string> area_order;
  std::map<std::string, RolloutSeries> by_area;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    const std::string& area = row[static_cast<std::size_t>(c_area)];
    auto [it, inserted] = by_area.try_emplace(area);
    if (inserted) {
      it->second.area_id = area;
      area_order.push_back(area);
    }
    const YearMonth ym = YearMonth::parse(row[static_cast<std::size_t>(c_month)], line);
    const long count = csv::parse_long(row[static_cast<std::size_t>(c_count)], "count", line);
    if (count < 0) {
      throw validation_error(path + ": line " + std::to_string(line) + ": negative count");
    }
    it->second.months.emplace_back(ym, count);
  }
  std::vector<RolloutSeries> out;
  out.reserve(area_order.size());
  for (const auto& area : area_order) {
    RolloutSeries& s = by_area[area];
    std::sort(s.months.begin(), s.months.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    s.validate();  // rejects duplicate months
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace its::intervention
