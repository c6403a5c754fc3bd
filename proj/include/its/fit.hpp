#pragma once

// MAP + Laplace inference. Inner Newton iterations find the latent mode at
// fixed hyperparameters; the outer loop walks a lattice in
// (log sigma_gamma, log sigma_delta), weights grid points by the
// Laplace-approximate marginal likelihood, and posterior draws mix the
// per-point Gaussian approximations.

#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/common.hpp"
#include "its/posterior.hpp"

namespace its::inference {

using model::Design;
using model::ModelLayout;
using model::ParameterVector;
using model::PriorSpec;

struct MapFit {
  Vec mode;          // latent coordinates (beta, gamma, delta)
  Mat neg_hessian;   // at the mode, latent block only
  double log_posterior = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // objective per iteration
};

namespace detail {

inline ParameterVector with_latent(const ModelLayout& layout, const Vec& latent, double lsg,
                                   double lsd) {
  ParameterVector p;
  p.beta = latent.head(layout.n_fixed());
  p.gamma = latent.segment(layout.gamma_offset(), layout.n_times());
  p.delta = latent.segment(layout.delta_offset(), layout.n_areas());
  p.log_sigma_gamma = lsg;
  p.log_sigma_delta = lsd;
  return p;
}

}  // namespace detail

struct NewtonOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

// Newton ascent with backtracking line search on the latent coordinates,
// hyperparameters held fixed. Falls back to a damped (quasi-Newton) step
// when the Newton direction is not an ascent direction.
inline MapFit fit_map(const Design& d, const PriorSpec& prior, double lsg, double lsd,
                      const Vec& start, const NewtonOptions& options = {}) {
  const ModelLayout& layout = d.layout;
  const int dim = layout.latent_dim();
  if (start.size() != dim) throw validation_error("fit_map: start has wrong dimension");

  Vec x = start;
  const auto value_at = [&](const Vec& z) {
    return model::log_posterior(d, prior, detail::with_latent(layout, z, lsg, lsd));
  };

  MapFit fit;
  double f = value_at(x);
  fit.trace.push_back(f);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const ParameterVector p = detail::with_latent(layout, x, lsg, lsd);
    const Vec g = model::gradient(d, prior, p).head(dim);
    if (g.norm() < options.gradient_tolerance) {
      fit.iterations = iter;
      fit.mode = x;
      fit.log_posterior = f;
      Mat H = model::hessian(d, prior, p).topLeftCorner(dim, dim);
      fit.neg_hessian = -H;
      Eigen::LLT<Mat> llt(fit.neg_hessian);
      if (llt.info() != Eigen::Success) {
        throw convergence_error("fit_map: Hessian at mode is not negative definite");
      }
      return fit;
    }

    Mat negH = -model::hessian(d, prior, p).topLeftCorner(dim, dim);
    Vec step;
    bool have_step = false;
    {
      Eigen::LLT<Mat> llt(negH);
      if (llt.info() == Eigen::Success) {
        step = llt.solve(g);
        have_step = g.dot(step) > 0.0;
      }
    }
    if (!have_step) {
      // Damp towards gradient ascent until the direction points uphill.
      double tau = 1e-6 * std::max(1.0, negH.diagonal().cwiseAbs().maxCoeff());
      for (int k = 0; k < 20 && !have_step; ++k, tau *= 10.0) {
        Mat damped = negH;
        damped.diagonal().array() += tau;
        Eigen::LLT<Mat> llt(damped);
        if (llt.info() != Eigen::Success) continue;
        step = llt.solve(g);
        have_step = g.dot(step) > 0.0;
      }
      if (!have_step) step = g / std::max(1.0, g.norm());
    }

    const double slope = g.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const double f_try = value_at(x + t * step);
      if (std::isfinite(f_try) && f_try >= f + 1e-4 * t * slope) {
        x += t * step;
        f = f_try;
        accepted = true;
        break;
      }
    }
    fit.trace.push_back(f);
    if (!accepted) {
      std::ostringstream os;
      os << "fit_map: line search failed at iteration " << iter << " (gradient norm " << g.norm()
         << "); trace:";
      for (const double v : fit.trace) os << " " << v;
      throw convergence_error(os.str());
    }
  }
  std::ostringstream os;
  os << "fit_map: no convergence in " << options.max_iterations << " iterations; trace tail:";
  const std::size_t from = fit.trace.size() > 8 ? fit.trace.size() - 8 : 0;
  for (std::size_t i = from; i < fit.trace.size(); ++i) os << " " << fit.trace[i];
  throw convergence_error(os.str());
}

// log p(y, x-hat, theta) + (d/2) log 2pi - 1/2 log det(-H): the Laplace
// approximation to the marginal likelihood of the hyper point.
inline double laplace_log_marginal(const MapFit& fit) {
  Eigen::LLT<Mat> llt(fit.neg_hessian);
  if (llt.info() != Eigen::Success) {
    throw convergence_error("laplace_log_marginal: negative Hessian not positive definite");
  }
  double log_det = 0.0;
  const Mat& Lmat = llt.matrixLLT();
  for (Eigen::Index k = 0; k < Lmat.rows(); ++k) log_det += 2.0 * std::log(Lmat(k, k));
  const double dim = static_cast<double>(fit.neg_hessian.rows());
  return fit.log_posterior + 0.5 * dim * model::detail::kLog2Pi - 0.5 * log_det;
}

struct HyperPoint {
  double lsg = 0.0;
  double lsd = 0.0;
  double log_marginal = 0.0;
  double weight = 0.0;
  Vec mode;
  Mat chol_lower;  // L with -H = L L^T, for Gaussian draws
};

struct HyperGridOptions {
  int half_width = 2;      // 5x5 grid
  double spacing = 0.5;    // in log sigma
  double lower_bound = -4.0;
  double upper_bound = 3.0;
  int max_climb_steps = 64;
};

struct HyperGrid {
  std::vector<HyperPoint> points;
  int best_index = 0;
  int inner_fits = 0;

  // Posterior mass at sigma_gamma below a threshold.
  double mass_sigma_gamma_below(double sigma) const {
    double m = 0.0;
    for (const auto& pt : points) {
      if (std::exp(pt.lsg) < sigma) m += pt.weight;
    }
    return m;
  }
};

// Hill-climb on the lattice to locate the marginal-likelihood optimum, then
// evaluate a (2h+1) x (2h+1) grid around it (shifted to stay in bounds) and
// normalize the weights.
inline HyperGrid optimize_hyper(const Design& d, const PriorSpec& prior,
                                const HyperGridOptions& options = {},
                                const NewtonOptions& newton = {}) {
  const ModelLayout& layout = d.layout;
  const int dim = layout.latent_dim();

  struct CacheEntry {
    MapFit fit;
    double log_marginal;
  };
  std::map<std::pair<long, long>, CacheEntry> cache;
  int inner_fits = 0;
  Vec warm = Vec::Zero(dim);

  const auto key_of = [&](double lsg, double lsd) {
    return std::make_pair(std::lround(lsg / options.spacing * 4.0),
                          std::lround(lsd / options.spacing * 4.0));
  };
  const auto evaluate = [&](double lsg, double lsd) -> const CacheEntry& {
    const auto key = key_of(lsg, lsd);
    auto it = cache.find(key);
    if (it == cache.end()) {
      MapFit fit = fit_map(d, prior, lsg, lsd, warm, newton);
      ++inner_fits;
      warm = fit.mode;
      const double lm = laplace_log_marginal(fit);
      it = cache.emplace(key, CacheEntry{std::move(fit), lm}).first;
    }
    return it->second;
  };
  const auto clamp = [&](double v) {
    return std::min(options.upper_bound, std::max(options.lower_bound, v));
  };

  double lsg = clamp(0.0);
  double lsd = clamp(0.0);
  double best = evaluate(lsg, lsd).log_marginal;
  for (int step = 0; step < options.max_climb_steps; ++step) {
    double cand_lsg = lsg;
    double cand_lsd = lsd;
    double cand_val = best;
    const double moves[4][2] = {{options.spacing, 0.0},
                                {-options.spacing, 0.0},
                                {0.0, options.spacing},
                                {0.0, -options.spacing}};
    for (const auto& mv : moves) {
      const double g2 = clamp(lsg + mv[0]);
      const double d2 = clamp(lsd + mv[1]);
      if (g2 == lsg && d2 == lsd) continue;
      const double val = evaluate(g2, d2).log_marginal;
      if (val > cand_val) {
        cand_val = val;
        cand_lsg = g2;
        cand_lsd = d2;
      }
    }
    if (cand_val <= best) break;
    best = cand_val;
    lsg = cand_lsg;
    lsd = cand_lsd;
  }

  // Shift the window so the full grid stays inside the bounds.
  const double span = 2.0 * options.half_width * options.spacing;
  const double lo_g = clamp(std::min(lsg - options.half_width * options.spacing,
                                     options.upper_bound - span));
  const double lo_d = clamp(std::min(lsd - options.half_width * options.spacing,
                                     options.upper_bound - span));

  HyperGrid grid;
  const int side = 2 * options.half_width + 1;
  double max_lm = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) {
      const double g2 = clamp(lo_g + a * options.spacing);
      const double d2 = clamp(lo_d + b * options.spacing);
      const CacheEntry& e = evaluate(g2, d2);
      HyperPoint pt;
      pt.lsg = g2;
      pt.lsd = d2;
      pt.log_marginal = e.log_marginal;
      pt.mode = e.fit.mode;
      Eigen::LLT<Mat> llt(e.fit.neg_hessian);
      pt.chol_lower = llt.matrixL();
      grid.points.push_back(std::move(pt));
      max_lm = std::max(max_lm, e.log_marginal);
    }
  }
  double total = 0.0;
  for (auto& pt : grid.points) {
    pt.weight = std::exp(pt.log_marginal - max_lm);
    total += pt.weight;
  }
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    grid.points[k].weight /= total;
    if (grid.points[k].log_marginal == max_lm) grid.best_index = static_cast<int>(k);
  }
  grid.inner_fits = inner_fits;
  return grid;
}

// ---------------------------------------------------------------------------
// Posterior draws.

// Each draw: pick a hyper point by weight, then sample the latent field from
// that point's Gaussian approximation. Reproducible from (seed, draw index).
inline Mat draw_posterior(const ModelLayout& layout, const HyperGrid& grid, int n_draws,
                          std::uint64_t seed) {
  const int dim = layout.latent_dim();
  Mat draws(n_draws, layout.full_dim());
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& pt : grid.points) {
    acc += pt.weight;
    cumulative.push_back(acc);
  }
  for (int n = 0; n < n_draws; ++n) {
    RngStream rng(substream_seed(seed, static_cast<std::uint64_t>(n)));
    const double u = rng.uniform();
    std::size_t g = 0;
    while (g + 1 < cumulative.size() && u > cumulative[g]) ++g;
    const HyperPoint& pt = grid.points[g];
    Vec z(dim);
    for (int k = 0; k < dim; ++k) z[k] = rng.normal();
    // x = mode + L^-T z has covariance (L L^T)^-1 = (-H)^-1.
    const Vec x = pt.mode + pt.chol_lower.transpose()
                                .triangularView<Eigen::Upper>()
                                .solve(z);
    draws.row(n).head(dim) = x.transpose();
    draws(n, layout.lsg_index()) = pt.lsg;
    draws(n, layout.lsd_index()) = pt.lsd;
  }
  return draws;
}

// ---------------------------------------------------------------------------
// Bundled fit artifact.

struct FitDiagnostics {
  int inner_fits = 0;
  int newton_iterations_at_best = 0;
  double gradient_norm_at_mode = 0.0;
  double condition_estimate = 0.0;
  std::vector<double> best_trace;
};

struct FittedPosterior {
  ModelLayout layout;
  PriorSpec prior;
  ParameterVector map_point;  // latent mode at the best hyper point
  Mat laplace_cov;            // latent covariance at the best hyper point
  std::vector<HyperPoint> hyper_grid;  // modes/chol dropped on serialization
  Mat draws;                  // n_draws x full_dim
  FitDiagnostics diagnostics;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string engine_version = kEngineVersion;
};

struct InferenceOptions {
  int n_draws = 1000;
  std::uint64_t seed = 20090101;
  HyperGridOptions grid;
  NewtonOptions newton;
};

inline FittedPosterior fit_posterior(const Design& d, const PriorSpec& prior,
                                     const InferenceOptions& options) {
  FittedPosterior out;
  out.layout = d.layout;
  out.prior = prior;
  out.seed = options.seed;

  HyperGrid grid = optimize_hyper(d, prior, options.grid, options.newton);
  const HyperPoint& best = grid.points[static_cast<std::size_t>(grid.best_index)];

  MapFit best_fit = fit_map(d, prior, best.lsg, best.lsd, best.mode, options.newton);
  out.map_point = detail::with_latent(d.layout, best_fit.mode, best.lsg, best.lsd);
  Eigen::LLT<Mat> llt(best_fit.neg_hessian);
  out.laplace_cov = llt.solve(Mat::Identity(d.layout.latent_dim(), d.layout.latent_dim()));

  out.diagnostics.inner_fits = grid.inner_fits;
  out.diagnostics.newton_iterations_at_best = best_fit.iterations;
  const ParameterVector p_mode = out.map_point;
  out.diagnostics.gradient_norm_at_mode =
      model::gradient(d, prior, p_mode).head(d.layout.latent_dim()).norm();
  const Vec diag = best_fit.neg_hessian.diagonal();
  out.diagnostics.condition_estimate = diag.maxCoeff() / diag.minCoeff();
  out.diagnostics.best_trace = best_fit.trace;

  out.draws = draw_posterior(d.layout, grid, options.n_draws, options.seed);
  out.hyper_grid = std::move(grid.points);
  return out;
}

// ---------------------------------------------------------------------------
// Artifact serialization (versioned JSON).

inline json to_json(const FittedPosterior& f) {
  json j;
  j["artifact"] = "fitted_posterior";
  j["format_version"] = 1;
  j["engine_version"] = f.engine_version;
  j["config_hash"] = f.config_hash;
  j["seed"] = f.seed;
  j["layout"] = f.layout.to_json();
  j["prior"] = f.prior.to_json();
  j["map_point"] = {{"beta", std::vector<double>(f.map_point.beta.begin(), f.map_point.beta.end())},
                    {"gamma", std::vector<double>(f.map_point.gamma.begin(), f.map_point.gamma.end())},
                    {"delta", std::vector<double>(f.map_point.delta.begin(), f.map_point.delta.end())},
                    {"log_sigma_gamma", f.map_point.log_sigma_gamma},
                    {"log_sigma_delta", f.map_point.log_sigma_delta}};
  json grid = json::array();
  for (const auto& pt : f.hyper_grid) {
    grid.push_back({{"log_sigma_gamma", pt.lsg},
                    {"log_sigma_delta", pt.lsd},
                    {"log_marginal", pt.log_marginal},
                    {"weight", pt.weight}});
  }
  j["hyper_grid"] = grid;
  json cov = json::array();
  for (Eigen::Index r = 0; r < f.laplace_cov.rows(); ++r) {
    cov.push_back(std::vector<double>(f.laplace_cov.row(r).begin(), f.laplace_cov.row(r).end()));
  }
  j["laplace_cov"] = cov;
  json draws = json::array();
  for (Eigen::Index r = 0; r < f.draws.rows(); ++r) {
    draws.push_back(std::vector<double>(f.draws.row(r).begin(), f.draws.row(r).end()));
  }
  j["draws"] = draws;
  j["diagnostics"] = {{"inner_fits", f.diagnostics.inner_fits},
                      {"newton_iterations_at_best", f.diagnostics.newton_iterations_at_best},
                      {"gradient_norm_at_mode", f.diagnostics.gradient_norm_at_mode},
                      {"condition_estimate", f.diagnostics.condition_estimate},
                      {"best_trace", f.diagnostics.best_trace}};
  return j;
}

inline FittedPosterior fitted_posterior_from_json(const json& j) {
  if (j.value("artifact", "") != std::string("fitted_posterior")) {
    throw validation_error("not a fitted_posterior artifact");
  }
  if (j.at("format_version").get<int>() != 1) {
    throw validation_error("unsupported artifact format_version");
  }
  FittedPosterior f;
  f.engine_version = j.at("engine_version").get<std::string>();
  f.config_hash = j.value("config_hash", "");
  f.seed = j.at("seed").get<std::uint64_t>();
  f.layout = ModelLayout::from_json(j.at("layout"));
  f.prior = PriorSpec::from_json(j.at("prior"));
  const auto get_vec = [](const json& arr) {
    const auto v = arr.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  f.map_point.beta = get_vec(j.at("map_point").at("beta"));
  f.map_point.gamma = get_vec(j.at("map_point").at("gamma"));
  f.map_point.delta = get_vec(j.at("map_point").at("delta"));
  f.map_point.log_sigma_gamma = j.at("map_point").at("log_sigma_gamma").get<double>();
  f.map_point.log_sigma_delta = j.at("map_point").at("log_sigma_delta").get<double>();
  for (const auto& pt : j.at("hyper_grid")) {
    HyperPoint h;
    h.lsg = pt.at("log_sigma_gamma").get<double>();
    h.lsd = pt.at("log_sigma_delta").get<double>();
    h.log_marginal = pt.at("log_marginal").get<double>();
    h.weight = pt.at("weight").get<double>();
    f.hyper_grid.push_back(h);
  }
  const auto& cov = j.at("laplace_cov");
  f.laplace_cov = Mat(cov.size(), cov.empty() ? 0 : cov[0].size());
  for (std::size_t r = 0; r < cov.size(); ++r) {
    const auto row = cov[r].get<std::vector<double>>();
    f.laplace_cov.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Vec>(row.data(), static_cast<Eigen::Index>(row.size()));
  }
  const auto& dr = j.at("draws");
  f.draws = Mat(dr.size(), f.layout.full_dim());
  for (std::size_t r = 0; r < dr.size(); ++r) {
    const auto row = dr[r].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != f.layout.full_dim()) {
      throw validation_error("draw row dimension mismatch in artifact");
    }
    f.draws.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Vec>(row.data(), static_cast<Eigen::Index>(row.size()));
  }
  f.diagnostics.inner_fits = j.at("diagnostics").value("inner_fits", 0);
  f.diagnostics.newton_iterations_at_best =
      j.at("diagnostics").value("newton_iterations_at_best", 0);
  f.diagnostics.gradient_norm_at_mode = j.at("diagnostics").value("gradient_norm_at_mode", 0.0);
  f.diagnostics.condition_estimate = j.at("diagnostics").value("condition_estimate", 0.0);
  return f;
}

}  // namespace its::inference
