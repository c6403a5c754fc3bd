#pragma once

// Survey-weighted Bernoulli log-posterior over all latent quantities
// (fixed effects, temporal and spatial random effects) and the two
// log-standard-deviation hyperparameters, with analytic gradient and
// Hessian. Random effects carry a soft sum-to-zero penalty so the flat
// intercept stays identified.

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "its/common.hpp"
#include "its/design.hpp"

namespace its::model {

struct PriorSpec {
  // Normal(0, variance) on every fixed effect except the flat intercept.
  double fixed_effect_variance = 1000.0;
  // Penalised complexity prior on each random-effect standard deviation:
  // exponential with rate chosen so P(sigma > u) = alpha.
  double pc_u = 1.0;
  double pc_alpha = 0.1;
  // Precision of the soft sum-to-zero penalty on gamma and delta.
  double sum_to_zero_precision = 1e6;

  double pc_rate() const { return -std::log(pc_alpha) / pc_u; }

  void validate() const {
    if (!(fixed_effect_variance > 0.0)) throw validation_error("fixed_effect_variance must be > 0");
    if (!(pc_u > 0.0)) throw validation_error("pc prior u must be > 0");
    if (!(pc_alpha > 0.0 && pc_alpha < 1.0)) throw validation_error("pc prior alpha must be in (0,1)");
    if (!(sum_to_zero_precision >= 0.0)) throw validation_error("sum_to_zero_precision must be >= 0");
  }

  json to_json() const {
    return json{{"fixed_effect_variance", fixed_effect_variance},
                {"pc_u", pc_u},
                {"pc_alpha", pc_alpha},
                {"sum_to_zero_precision", sum_to_zero_precision}};
  }

  static PriorSpec from_json(const json& j) {
    PriorSpec p;
    p.fixed_effect_variance = j.value("fixed_effect_variance", 1000.0);
    p.pc_u = j.value("pc_u", 1.0);
    p.pc_alpha = j.value("pc_alpha", 0.1);
    p.sum_to_zero_precision = j.value("sum_to_zero_precision", 1e6);
    p.validate();
    return p;
  }
};

struct ParameterVector {
  Vec beta;
  Vec gamma;
  Vec delta;
  double log_sigma_gamma = 0.0;
  double log_sigma_delta = 0.0;

  double sigma_gamma() const { return std::exp(log_sigma_gamma); }
  double sigma_delta() const { return std::exp(log_sigma_delta); }

  Vec pack() const {
    Vec flat(beta.size() + gamma.size() + delta.size() + 2);
    flat << beta, gamma, delta, log_sigma_gamma, log_sigma_delta;
    return flat;
  }

  static ParameterVector unpack(const Vec& flat, const ModelLayout& layout) {
    if (flat.size() != layout.full_dim()) {
      throw validation_error("parameter vector has dimension " + std::to_string(flat.size()) +
                             ", layout expects " + std::to_string(layout.full_dim()));
    }
    ParameterVector p;
    p.beta = flat.head(layout.n_fixed());
    p.gamma = flat.segment(layout.gamma_offset(), layout.n_times());
    p.delta = flat.segment(layout.delta_offset(), layout.n_areas());
    p.log_sigma_gamma = flat[layout.lsg_index()];
    p.log_sigma_delta = flat[layout.lsd_index()];
    return p;
  }

  static ParameterVector zeros(const ModelLayout& layout) {
    ParameterVector p;
    p.beta = Vec::Zero(layout.n_fixed());
    p.gamma = Vec::Zero(layout.n_times());
    p.delta = Vec::Zero(layout.n_areas());
    return p;
  }
};

// mu_i = x_i . beta + gamma_{t(i)} + delta_{l(i)}
inline Vec linear_predictor(const Design& d, const ParameterVector& p) {
  if (p.beta.size() != d.layout.n_fixed() || p.gamma.size() != d.layout.n_times() ||
      p.delta.size() != d.layout.n_areas()) {
    throw validation_error("parameter blocks do not match the layout manifest");
  }
  Vec mu = d.X * p.beta;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    mu[i] += p.gamma[d.t_idx[i]] + p.delta[d.l_idx[i]];
  }
  return mu;
}

inline double linear_predictor_row(const Design& d, Eigen::Index i, const ParameterVector& p) {
  return d.X.row(i).dot(p.beta) + p.gamma[d.t_idx[i]] + p.delta[d.l_idx[i]];
}

namespace detail {

inline void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) {
    throw numeric_error(std::string("log_posterior: non-finite ") + term);
  }
}

inline constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace detail

inline double log_posterior(const Design& d, const PriorSpec& prior, const ParameterVector& p) {
  if (!(d.w.array() > 0.0).all()) throw validation_error("weights must be positive");
  const Vec mu = linear_predictor(d, p);

  double loglik = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    loglik += d.w[i] * (d.y[i] * mu[i] - log1pexp(mu[i]));
  }
  detail::require_finite(loglik, "weighted log-likelihood");

  double lp_beta = 0.0;  // intercept (k = 0) flat, contributes zero
  const double v = prior.fixed_effect_variance;
  for (Eigen::Index k = 1; k < p.beta.size(); ++k) {
    lp_beta += -0.5 * (detail::kLog2Pi + std::log(v)) - p.beta[k] * p.beta[k] / (2.0 * v);
  }
  detail::require_finite(lp_beta, "fixed-effect prior");

  const double sg2 = std::exp(2.0 * p.log_sigma_gamma);
  double lp_gamma = 0.0;
  for (Eigen::Index t = 0; t < p.gamma.size(); ++t) {
    lp_gamma += -0.5 * detail::kLog2Pi - p.log_sigma_gamma - p.gamma[t] * p.gamma[t] / (2.0 * sg2);
  }
  detail::require_finite(lp_gamma, "temporal random-effect prior");

  const double sd2 = std::exp(2.0 * p.log_sigma_delta);
  double lp_delta = 0.0;
  for (Eigen::Index l = 0; l < p.delta.size(); ++l) {
    lp_delta += -0.5 * detail::kLog2Pi - p.log_sigma_delta - p.delta[l] * p.delta[l] / (2.0 * sd2);
  }
  detail::require_finite(lp_delta, "spatial random-effect prior");

  // PC prior on sigma, evaluated in log sigma (includes the Jacobian).
  const double lambda = prior.pc_rate();
  double lp_sigma = 0.0;
  if (p.gamma.size() > 0) {
    lp_sigma += std::log(lambda) - lambda * p.sigma_gamma() + p.log_sigma_gamma;
  }
  if (p.delta.size() > 0) {
    lp_sigma += std::log(lambda) - lambda * p.sigma_delta() + p.log_sigma_delta;
  }
  detail::require_finite(lp_sigma, "pc prior on sigma");

  const double kappa = prior.sum_to_zero_precision;
  const double sum_g = p.gamma.sum();
  const double sum_d = p.delta.sum();
  const double penalty = -0.5 * kappa * (sum_g * sum_g + sum_d * sum_d);
  detail::require_finite(penalty, "sum-to-zero penalty");

  return loglik + lp_beta + lp_gamma + lp_delta + lp_sigma + penalty;
}

inline Vec gradient(const Design& d, const PriorSpec& prior, const ParameterVector& p) {
  const ModelLayout& layout = d.layout;
  const Vec mu = linear_predictor(d, p);
  Vec grad = Vec::Zero(layout.full_dim());

  // Likelihood part: sum_i w_i (y_i - p_i) over each coordinate's column.
  Vec resid(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    resid[i] = d.w[i] * (d.y[i] - sigmoid(mu[i]));
  }
  grad.head(layout.n_fixed()) = d.X.transpose() * resid;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    grad[layout.gamma_offset() + d.t_idx[i]] += resid[i];
    grad[layout.delta_offset() + d.l_idx[i]] += resid[i];
  }

  const double v = prior.fixed_effect_variance;
  for (Eigen::Index k = 1; k < p.beta.size(); ++k) grad[k] -= p.beta[k] / v;

  const double kappa = prior.sum_to_zero_precision;
  const double lambda = prior.pc_rate();
  const double sg2 = std::exp(2.0 * p.log_sigma_gamma);
  const double sum_g = p.gamma.sum();
  for (Eigen::Index t = 0; t < p.gamma.size(); ++t) {
    grad[layout.gamma_offset() + t] -= p.gamma[t] / sg2 + kappa * sum_g;
  }
  const double sd2 = std::exp(2.0 * p.log_sigma_delta);
  const double sum_d = p.delta.sum();
  for (Eigen::Index l = 0; l < p.delta.size(); ++l) {
    grad[layout.delta_offset() + l] -= p.delta[l] / sd2 + kappa * sum_d;
  }

  if (p.gamma.size() > 0) {
    grad[layout.lsg_index()] = -static_cast<double>(p.gamma.size()) +
                               p.gamma.squaredNorm() / sg2 - lambda * p.sigma_gamma() + 1.0;
  }
  if (p.delta.size() > 0) {
    grad[layout.lsd_index()] = -static_cast<double>(p.delta.size()) +
                               p.delta.squaredNorm() / sd2 - lambda * p.sigma_delta() + 1.0;
  }
  return grad;
}

inline Mat hessian(const Design& d, const PriorSpec& prior, const ParameterVector& p) {
  const ModelLayout& layout = d.layout;
  const int P = layout.n_fixed();
  const int T = layout.n_times();
  const int L = layout.n_areas();
  const int dim = layout.full_dim();
  const Vec mu = linear_predictor(d, p);

  Vec s(d.n());  // curvature weights w_i p_i (1 - p_i)
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double pi = sigmoid(mu[i]);
    s[i] = d.w[i] * pi * (1.0 - pi);
  }

  Mat H = Mat::Zero(dim, dim);
  H.topLeftCorner(P, P) = -(d.X.transpose() * s.asDiagonal() * d.X);
  Mat Xt_s_by_time = Mat::Zero(P, T);
  Mat Xt_s_by_area = Mat::Zero(P, L);
  Vec s_by_time = Vec::Zero(T);
  Vec s_by_area = Vec::Zero(L);
  Mat s_cross = Mat::Zero(T, L);
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const int t = d.t_idx[i];
    const int l = d.l_idx[i];
    Xt_s_by_time.col(t) -= s[i] * d.X.row(i).transpose();
    Xt_s_by_area.col(l) -= s[i] * d.X.row(i).transpose();
    s_by_time[t] += s[i];
    s_by_area[l] += s[i];
    s_cross(t, l) -= s[i];
  }
  const int go = layout.gamma_offset();
  const int dlo = layout.delta_offset();
  H.block(0, go, P, T) = Xt_s_by_time;
  H.block(go, 0, T, P) = Xt_s_by_time.transpose();
  H.block(0, dlo, P, L) = Xt_s_by_area;
  H.block(dlo, 0, L, P) = Xt_s_by_area.transpose();
  H.block(go, dlo, T, L) = s_cross;
  H.block(dlo, go, L, T) = s_cross.transpose();

  const double kappa = prior.sum_to_zero_precision;
  const double sg2 = std::exp(2.0 * p.log_sigma_gamma);
  const double sd2 = std::exp(2.0 * p.log_sigma_delta);
  H.block(go, go, T, T).array() -= kappa;
  for (int t = 0; t < T; ++t) H(go + t, go + t) -= s_by_time[t] + 1.0 / sg2;
  H.block(dlo, dlo, L, L).array() -= kappa;
  for (int l = 0; l < L; ++l) H(dlo + l, dlo + l) -= s_by_area[l] + 1.0 / sd2;

  const double v = prior.fixed_effect_variance;
  for (int k = 1; k < P; ++k) H(k, k) -= 1.0 / v;

  const double lambda = prior.pc_rate();
  const int lsg = layout.lsg_index();
  const int lsd = layout.lsd_index();
  if (T > 0) {
    for (int t = 0; t < T; ++t) {
      const double cross = 2.0 * p.gamma[t] / sg2;
      H(go + t, lsg) = cross;
      H(lsg, go + t) = cross;
    }
    H(lsg, lsg) = -2.0 * p.gamma.squaredNorm() / sg2 - lambda * p.sigma_gamma();
  }
  if (L > 0) {
    for (int l = 0; l < L; ++l) {
      const double cross = 2.0 * p.delta[l] / sd2;
      H(dlo + l, lsd) = cross;
      H(lsd, dlo + l) = cross;
    }
    H(lsd, lsd) = -2.0 * p.delta.squaredNorm() / sd2 - lambda * p.sigma_delta();
  }
  return H;
}

}  // namespace its::model
