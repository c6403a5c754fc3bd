#pragma once

// Posterior-draw marginalization into profiles: stratum-aggregated linear
// predictors, prevalences, exposed/control ratios and the standardised
// change rho, with EMPTY-cell propagation for unpopulated strata.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "its/common.hpp"
#include "its/design.hpp"
#include "its/posterior.hpp"

namespace its::effects {

using model::Design;
using model::RowInfo;

// Stratum selectors; unset selectors match everything.
struct ProfileQuery {
  std::optional<bool> exposed;
  std::optional<bool> after;  // intervention flag: year >= 0
  std::optional<std::pair<int, int>> year_range;  // centered years, inclusive
  std::optional<std::set<int>> area_indices;
  std::map<std::string, int> level_constraints;  // confounder field -> level index

  bool matches(const RowInfo& r) const {
    if (exposed && (r.exposed != 0) != *exposed) return false;
    if (after && (r.centered.intervention != 0) != *after) return false;
    if (year_range && (r.centered.year < year_range->first || r.centered.year > year_range->second)) {
      return false;
    }
    if (area_indices && !area_indices->count(r.l)) return false;
    for (const auto& [field, level] : level_constraints) {
      if (r.profile.level_index(field) != level) return false;
    }
    return true;
  }

  ProfileQuery with_group(bool is_exposed, bool is_after) const {
    ProfileQuery q = *this;
    q.exposed = is_exposed;
    q.after = is_after;
    return q;
  }
};

enum class Aggregation { LinearPredictor, Probability };
enum class Adjustment { Multiplicative, Additive };

struct EffectOptions {
  Aggregation aggregation = Aggregation::LinearPredictor;
  Adjustment adjustment = Adjustment::Multiplicative;
};

// Per-draw stratum-mean linear predictor; EMPTY when no rows match.
struct MarginalMu {
  std::vector<double> mu_bar;
  long n = 0;
  double weight_total = 0.0;

  bool empty() const { return n == 0; }
};

struct PrevalenceResult {
  std::vector<double> draws;  // per-draw prevalence
  Summary3 summary;
  long n = 0;

  bool empty() const { return n == 0; }
};

struct RhoResult {
  std::vector<double> draws;  // per-draw rho, excluded draws dropped
  Summary3 summary;
  long n_ea = 0, n_eb = 0, n_ca = 0, n_cb = 0;
  long excluded_draws = 0;  // mu_CB == 0 in the multiplicative adjustment
  bool empty = true;        // any of the four strata unpopulated
};

struct RatioResult {
  std::vector<double> draws;
  Summary3 summary;
  bool empty = true;
};

// Per-draw ratio of two prevalence draw vectors.
inline RatioResult exposed_control_ratio(const PrevalenceResult& exposed,
                                         const PrevalenceResult& control) {
  RatioResult out;
  if (exposed.empty() || control.empty()) return out;
  if (exposed.draws.size() != control.draws.size()) {
    throw validation_error("ratio: draw counts differ between strata");
  }
  out.draws.resize(exposed.draws.size());
  for (std::size_t n = 0; n < exposed.draws.size(); ++n) {
    out.draws[n] = exposed.draws[n] / control.draws[n];
  }
  out.summary = summarize_draws(out.draws);
  out.empty = false;
  return out;
}

class EffectsEngine {
public:
  EffectsEngine(const Design& design, const Mat& draws, const DataDictionary& dict,
                EffectOptions options = {})
      : design_(design), draws_(draws), dict_(dict), options_(options) {
    if (draws_.cols() != design_.layout.full_dim()) {
      throw validation_error("draw matrix does not match the layout manifest");
    }
  }

  const Design& design() const { return design_; }
  const DataDictionary& dictionary() const { return dict_; }
  const EffectOptions& options() const { return options_; }
  int n_draws() const { return static_cast<int>(draws_.rows()); }

  // Weighted mean of the linear predictor over the stratum, per draw.
  // Under Aggregation::Probability the stratum is averaged on the
  // probability scale and mapped back through the logit so downstream
  // formulas are unchanged.
  MarginalMu marginal_mu(const ProfileQuery& query) const {
    MarginalMu out;
    const auto& layout = design_.layout;
    const int latent = layout.latent_dim();
    std::vector<int> rows;
    for (std::size_t i = 0; i < design_.rows.size(); ++i) {
      if (query.matches(design_.rows[i])) rows.push_back(static_cast<int>(i));
    }
    out.n = static_cast<long>(rows.size());
    if (rows.empty()) return out;

    double W = 0.0;
    for (const int i : rows) W += design_.w[i];
    out.weight_total = W;
    out.mu_bar.assign(static_cast<std::size_t>(n_draws()), 0.0);

    if (options_.aggregation == Aggregation::LinearPredictor) {
      Vec z = Vec::Zero(latent);
      for (const int i : rows) {
        z.head(layout.n_fixed()) += design_.w[i] * design_.X.row(i).transpose();
        z[layout.gamma_offset() + design_.t_idx[i]] += design_.w[i];
        z[layout.delta_offset() + design_.l_idx[i]] += design_.w[i];
      }
      z /= W;
      for (int n = 0; n < n_draws(); ++n) {
        out.mu_bar[static_cast<std::size_t>(n)] = draws_.row(n).head(latent).dot(z);
      }
    } else {
      const Mat& mu = mu_cache();
      for (int n = 0; n < n_draws(); ++n) {
        double acc = 0.0;
        for (const int i : rows) acc += design_.w[i] * sigmoid(mu(i, n));
        out.mu_bar[static_cast<std::size_t>(n)] = logit(acc / W);
      }
    }
    return out;
  }

  PrevalenceResult prevalence(const ProfileQuery& query) const {
    const MarginalMu mu = marginal_mu(query);
    PrevalenceResult out;
    out.n = mu.n;
    if (mu.empty()) return out;
    out.draws.resize(mu.mu_bar.size());
    for (std::size_t n = 0; n < mu.mu_bar.size(); ++n) out.draws[n] = sigmoid(mu.mu_bar[n]);
    out.summary = summarize_draws(out.draws);
    return out;
  }

  // Standardised change: p_EA vs the control-adjusted before prevalence.
  // cell_query must not set the exposure/after selectors.
  RhoResult standardised_change(const ProfileQuery& cell_query) const {
    const MarginalMu ea = marginal_mu(cell_query.with_group(true, true));
    const MarginalMu eb = marginal_mu(cell_query.with_group(true, false));
    const MarginalMu ca = marginal_mu(cell_query.with_group(false, true));
    const MarginalMu cb = marginal_mu(cell_query.with_group(false, false));
    RhoResult out;
    out.n_ea = ea.n;
    out.n_eb = eb.n;
    out.n_ca = ca.n;
    out.n_cb = cb.n;
    if (ea.empty() || eb.empty() || ca.empty() || cb.empty()) return out;

    out.draws.reserve(ea.mu_bar.size());
    for (std::size_t n = 0; n < ea.mu_bar.size(); ++n) {
      double adjusted;
      if (options_.adjustment == Adjustment::Multiplicative) {
        if (cb.mu_bar[n] == 0.0) {
          ++out.excluded_draws;
          continue;
        }
        adjusted = eb.mu_bar[n] * (ca.mu_bar[n] / cb.mu_bar[n]);
      } else {
        adjusted = eb.mu_bar[n] + ca.mu_bar[n] - cb.mu_bar[n];
      }
      const double p_ea = sigmoid(ea.mu_bar[n]);
      const double p_eb = sigmoid(adjusted);
      out.draws.push_back((p_ea - p_eb) / p_eb);
    }
    if (out.draws.empty()) return out;
    out.summary = summarize_draws(out.draws);
    out.empty = false;
    return out;
  }

private:
  const Mat& mu_cache() const {
    if (mu_cache_.size() == 0) {
      const auto& layout = design_.layout;
      mu_cache_ = design_.X * draws_.leftCols(layout.n_fixed()).transpose();
      for (Eigen::Index i = 0; i < design_.n(); ++i) {
        const int gt = layout.gamma_offset() + design_.t_idx[i];
        const int dl = layout.delta_offset() + design_.l_idx[i];
        for (int n = 0; n < n_draws(); ++n) {
          mu_cache_(i, n) += draws_(n, gt) + draws_(n, dl);
        }
      }
    }
    return mu_cache_;
  }

  const Design& design_;
  const Mat& draws_;
  const DataDictionary& dict_;
  EffectOptions options_;
  mutable Mat mu_cache_;
};

// ---------------------------------------------------------------------------
// Report-level aggregations.

struct TrendRow {
  std::string label;  // centered year, or before/after/all
  std::optional<int> centered_year;
  PrevalenceResult exposed;
  PrevalenceResult control;
  RatioResult ratio;
};

// One row per observed centered year plus before/after/all aggregates.
inline std::vector<TrendRow> national_trend(const EffectsEngine& engine,
                                            const ProfileQuery& base = {}) {
  std::set<int> years;
  for (const auto& r : engine.design().rows) {
    if (base.matches(r)) years.insert(r.centered.year);
  }
  std::vector<TrendRow> rows;
  const auto add_row = [&](const std::string& label, std::optional<int> year,
                           const ProfileQuery& q) {
    TrendRow row;
    row.label = label;
    row.centered_year = year;
    ProfileQuery qe = q;
    qe.exposed = true;
    ProfileQuery qc = q;
    qc.exposed = false;
    row.exposed = engine.prevalence(qe);
    row.control = engine.prevalence(qc);
    row.ratio = exposed_control_ratio(row.exposed, row.control);
    rows.push_back(std::move(row));
  };
  for (const int y : years) {
    ProfileQuery q = base;
    q.year_range = std::make_pair(y, y);
    add_row(std::to_string(y), y, q);
  }
  ProfileQuery before = base;
  before.after = false;
  add_row("before", std::nullopt, before);
  ProfileQuery after = base;
  after.after = true;
  add_row("after", std::nullopt, after);
  add_row("all", std::nullopt, base);
  return rows;
}

// ---------------------------------------------------------------------------
// Profile sweeps.

struct SweepDimension {
  enum class Kind { Area, Confounder };
  Kind kind = Kind::Confounder;
  std::string field;  // confounder field name; unused for areas

  static SweepDimension area() {
    SweepDimension s;
    s.kind = Kind::Area;
    return s;
  }
  static SweepDimension confounder(const std::string& field) {
    SweepDimension s;
    s.kind = Kind::Confounder;
    s.field = field;
    return s;
  }
};

struct SweepCell {
  // dimension label -> level label (field name or "area")
  std::vector<std::pair<std::string, std::string>> selectors;
  RhoResult rho;
};

// Enumerate the Cartesian product of the requested dimensions' levels and
// compute rho per cell; cells sorted by median rho (descending), EMPTY
// cells last. Survives unpopulated cells by carrying them through EMPTY.
inline std::vector<SweepCell> profile_sweep(const EffectsEngine& engine,
                                            const std::vector<SweepDimension>& dims,
                                            const ProfileQuery& base = {}) {
  const auto& layout = engine.design().layout;
  struct DimLevels {
    std::string name;
    std::vector<std::string> labels;
  };
  std::vector<DimLevels> levels;
  for (const auto& dim : dims) {
    DimLevels dl;
    if (dim.kind == SweepDimension::Kind::Area) {
      dl.name = "area";
      dl.labels = layout.areas;
    } else {
      dl.name = dim.field;
      dl.labels = engine.dictionary().levels(dim.field);
    }
    levels.push_back(std::move(dl));
  }

  std::vector<SweepCell> cells;
  std::vector<std::size_t> idx(levels.size(), 0);
  while (true) {
    ProfileQuery q = base;
    SweepCell cell;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const auto& dl = levels[k];
      cell.selectors.emplace_back(dl.name, dl.labels[idx[k]]);
      if (dl.name == "area") {
        std::set<int> one = {layout.area_index(dl.labels[idx[k]])};
        q.area_indices = one;
      } else {
        q.level_constraints[dl.name] = static_cast<int>(idx[k]);
      }
    }
    cell.rho = engine.standardised_change(q);
    cells.push_back(std::move(cell));

    std::size_t k = 0;
    while (k < idx.size()) {
      if (++idx[k] < levels[k].labels.size()) break;
      idx[k] = 0;
      ++k;
    }
    if (k == idx.size()) break;
    if (levels.empty()) break;
  }

  std::stable_sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) {
    if (a.rho.empty != b.rho.empty) return !a.rho.empty;  // EMPTY last
    if (a.rho.empty && b.rho.empty) return false;
    return a.rho.summary.median > b.rho.summary.median;
  });
  return cells;
}

}  // namespace its::effects
