#pragma once

// Adaptive random-walk Metropolis-within-Gibbs over (latents, log-hypers).
// Serves as the sampling oracle the Laplace scheme is validated against.
// Proposal scales adapt in batches during burn-in only; chains run
// independently (optionally in parallel) with substream seeds.

#include <cmath>
#include <thread>
#include <vector>

#include "its/common.hpp"
#include "its/posterior.hpp"

namespace its::inference {

struct McmcOptions {
  int chains = 4;
  long iterations = 20000;  // per chain, including burn-in
  long burn = 10000;
  int thin = 10;
  std::uint64_t seed = 1;
  int adapt_interval = 50;
  int threads = 0;  // 0 = one thread per chain up to hardware concurrency
};

struct McmcResult {
  std::vector<Mat> chain_draws;  // per chain: kept x full_dim
  Mat pooled;                    // all chains stacked
  Vec mean;
  Vec sd;
  Vec rhat;
  Vec ess;
  double max_rhat = 1.0;
  bool converged = false;  // max split R-hat <= 1.05
  Vec accept_rate;         // per coordinate, post burn-in
};

namespace mcmc_detail {

struct CoordColumn {
  std::vector<int> rows;
  std::vector<double> values;
};

struct ChainState {
  Vec x;
  Vec mu;
  Vec lse;  // cached log1pexp(mu)
  double sum_g = 0.0, sumsq_g = 0.0;
  double sum_d = 0.0, sumsq_d = 0.0;
};

inline void run_chain(const model::Design& d, const model::PriorSpec& prior,
                      const McmcOptions& options, const Vec& start, std::uint64_t chain_seed,
                      const std::vector<CoordColumn>& columns, const std::vector<bool>& active,
                      Mat& out_draws, Vec& out_accept) {
  const model::ModelLayout& layout = d.layout;
  const int dim = layout.full_dim();
  const int P = layout.n_fixed();
  const int T = layout.n_times();
  const int L = layout.n_areas();
  const int go = layout.gamma_offset();
  const int dlo = layout.delta_offset();
  const int lsg = layout.lsg_index();
  const int lsd = layout.lsd_index();
  const double V = prior.fixed_effect_variance;
  const double kappa = prior.sum_to_zero_precision;
  const double lambda = prior.pc_rate();

  RngStream rng(chain_seed);

  ChainState st;
  st.x = start;
  // Overdispersed start: jitter every active coordinate.
  for (int k = 0; k < dim; ++k) {
    if (active[static_cast<std::size_t>(k)]) st.x[k] += 0.5 * rng.normal();
  }
  {
    const model::ParameterVector p = model::ParameterVector::unpack(st.x, layout);
    st.mu = model::linear_predictor(d, p);
  }
  st.lse = Vec(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) st.lse[i] = log1pexp(st.mu[i]);
  st.sum_g = st.x.segment(go, T).sum();
  st.sumsq_g = st.x.segment(go, T).squaredNorm();
  st.sum_d = st.x.segment(dlo, L).sum();
  st.sumsq_d = st.x.segment(dlo, L).squaredNorm();

  Vec log_scale = Vec::Constant(dim, std::log(0.1));
  log_scale[lsg] = std::log(0.3);
  log_scale[lsd] = std::log(0.3);

  const auto delta_log_posterior = [&](int k, double eps) -> double {
    double dlp = 0.0;
    if (k < layout.latent_dim()) {
      const CoordColumn& col = columns[static_cast<std::size_t>(k)];
      for (std::size_t a = 0; a < col.rows.size(); ++a) {
        const int i = col.rows[a];
        const double dx = eps * col.values[a];
        dlp += d.w[i] * (d.y[i] * dx - (log1pexp(st.mu[i] + dx) - st.lse[i]));
      }
    }
    if (k == 0) {
      // flat intercept
    } else if (k < P) {
      const double b = st.x[k];
      dlp += -((b + eps) * (b + eps) - b * b) / (2.0 * V);
    } else if (k < dlo) {
      const double g = st.x[k];
      const double sg2 = std::exp(2.0 * st.x[lsg]);
      dlp += -((g + eps) * (g + eps) - g * g) / (2.0 * sg2);
      dlp += -0.5 * kappa * ((st.sum_g + eps) * (st.sum_g + eps) - st.sum_g * st.sum_g);
    } else if (k < layout.latent_dim()) {
      const double v0 = st.x[k];
      const double sd2 = std::exp(2.0 * st.x[lsd]);
      dlp += -((v0 + eps) * (v0 + eps) - v0 * v0) / (2.0 * sd2);
      dlp += -0.5 * kappa * ((st.sum_d + eps) * (st.sum_d + eps) - st.sum_d * st.sum_d);
    } else if (k == lsg) {
      const double th = st.x[lsg];
      const double th2 = th + eps;
      dlp += -static_cast<double>(T) * eps -
             0.5 * st.sumsq_g * (std::exp(-2.0 * th2) - std::exp(-2.0 * th)) -
             lambda * (std::exp(th2) - std::exp(th)) + eps;
    } else {
      const double th = st.x[lsd];
      const double th2 = th + eps;
      dlp += -static_cast<double>(L) * eps -
             0.5 * st.sumsq_d * (std::exp(-2.0 * th2) - std::exp(-2.0 * th)) -
             lambda * (std::exp(th2) - std::exp(th)) + eps;
    }
    return dlp;
  };

  const auto apply = [&](int k, double eps) {
    if (k < layout.latent_dim()) {
      const CoordColumn& col = columns[static_cast<std::size_t>(k)];
      for (std::size_t a = 0; a < col.rows.size(); ++a) {
        const int i = col.rows[a];
        st.mu[i] += eps * col.values[a];
        st.lse[i] = log1pexp(st.mu[i]);
      }
    }
    if (k >= go && k < dlo) {
      st.sum_g += eps;
      st.sumsq_g += 2.0 * st.x[k] * eps + eps * eps;
    } else if (k >= dlo && k < layout.latent_dim()) {
      st.sum_d += eps;
      st.sumsq_d += 2.0 * st.x[k] * eps + eps * eps;
    }
    st.x[k] += eps;
  };

  const long n_kept = (options.iterations - options.burn) / options.thin;
  out_draws = Mat(n_kept, dim);
  Eigen::VectorXi accepted_post = Eigen::VectorXi::Zero(dim);
  Eigen::VectorXi batch_accepted = Eigen::VectorXi::Zero(dim);
  long kept = 0;
  long post_iters = 0;
  int batch_number = 0;

  for (long iter = 0; iter < options.iterations; ++iter) {
    const bool in_burn = iter < options.burn;
    for (int k = 0; k < dim; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      const double eps = std::exp(log_scale[k]) * rng.normal();
      const double dlp = delta_log_posterior(k, eps);
      if (std::log(rng.uniform()) < dlp) {
        apply(k, eps);
        if (in_burn) {
          batch_accepted[k] += 1;
        } else {
          accepted_post[k] += 1;
        }
      }
    }
    if (in_burn && (iter + 1) % options.adapt_interval == 0) {
      ++batch_number;
      for (int k = 0; k < dim; ++k) {
        if (!active[static_cast<std::size_t>(k)]) continue;
        const double rate = static_cast<double>(batch_accepted[k]) /
                            static_cast<double>(options.adapt_interval);
        double factor = 1.0;
        if (rate < 0.001) factor = 0.1;
        else if (rate < 0.05) factor = 0.5;
        else if (rate < 0.25) factor = 0.8;
        else if (rate > 0.95) factor = 10.0;
        else if (rate > 0.75) factor = 2.0;
        else if (rate > 0.55) factor = 1.2;
        log_scale[k] += std::log(factor);
      }
      batch_accepted.setZero();
    }
    if (!in_burn) {
      ++post_iters;
      if ((iter - options.burn + 1) % options.thin == 0 && kept < n_kept) {
        out_draws.row(kept++) = st.x.transpose();
      }
    }
  }
  out_accept = Vec::Zero(dim);
  if (post_iters > 0) {
    for (int k = 0; k < dim; ++k) {
      out_accept[k] = static_cast<double>(accepted_post[k]) / static_cast<double>(post_iters);
    }
  }
}

}  // namespace mcmc_detail

// Split R-hat over a set of equal-length scalar sequences.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t n2 = c.size() / 2;
    if (n2 < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<long>(n2));
    halves.emplace_back(c.begin() + static_cast<long>(c.size() - n2), c.end());
  }
  if (halves.size() < 2) return 1.0;
  const double n = static_cast<double>(halves[0].size());
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double w_sum = 0.0;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (const double v : h) mean += v;
    mean /= n;
    double var = 0.0;
    for (const double v : h) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    means.push_back(mean);
    w_sum += var;
  }
  const double w = w_sum / m;
  double grand = 0.0;
  for (const double v : means) grand += v;
  grand /= m;
  double b = 0.0;
  for (const double v : means) b += (v - grand) * (v - grand);
  b *= n / (m - 1.0);
  if (w <= 0.0) return 1.0;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Effective sample size with Geyer initial-positive-sequence truncation.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty() || chains[0].size() < 4) return 0.0;
  const std::size_t n = chains[0].size();
  const double m = static_cast<double>(chains.size());
  std::vector<double> means(chains.size());
  std::vector<double> vars(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    double mean = 0.0;
    for (const double v : chains[c]) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double v : chains[c]) var += (v - mean) * (v - mean);
    vars[c] = var / static_cast<double>(n - 1);
    means[c] = mean;
  }
  double w = 0.0;
  for (const double v : vars) w += v;
  w /= m;
  double b_over_n = 0.0;
  if (chains.size() > 1) {
    double grand = 0.0;
    for (const double v : means) grand += v;
    grand /= m;
    for (const double v : means) b_over_n += (v - grand) * (v - grand);
    b_over_n /= (m - 1.0);
  }
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + b_over_n;
  if (var_plus <= 0.0) return static_cast<double>(n) * m;

  const auto acov = [&](std::size_t c, std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
    }
    return s / static_cast<double>(n);
  };

  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  const std::size_t max_lag = std::min<std::size_t>(n - 2, 500);
  for (std::size_t lag = 1; lag + 1 <= max_lag; lag += 2) {
    double rho_a = 0.0, rho_b = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      rho_a += acov(c, lag);
      rho_b += acov(c, lag + 1);
    }
    rho_a = 1.0 - (w - rho_a / m) / var_plus;
    rho_b = 1.0 - (w - rho_b / m) / var_plus;
    double pair = rho_a + rho_b;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) * m / tau;
}

inline McmcResult mcmc_oracle(const model::Design& d, const model::PriorSpec& prior,
                              const McmcOptions& options, const Vec& start) {
  const model::ModelLayout& layout = d.layout;
  const int dim = layout.full_dim();
  if (start.size() != dim) throw validation_error("mcmc_oracle: start has wrong dimension");
  if (options.burn >= options.iterations) {
    throw validation_error("mcmc_oracle: burn must be below iterations");
  }

  // Nonzero entries of each latent coordinate's design column.
  std::vector<mcmc_detail::CoordColumn> columns(static_cast<std::size_t>(layout.latent_dim()));
  for (int k = 0; k < layout.n_fixed(); ++k) {
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      if (d.X(i, k) != 0.0) {
        columns[static_cast<std::size_t>(k)].rows.push_back(static_cast<int>(i));
        columns[static_cast<std::size_t>(k)].values.push_back(d.X(i, k));
      }
    }
  }
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    auto& ct = columns[static_cast<std::size_t>(layout.gamma_offset() + d.t_idx[i])];
    ct.rows.push_back(static_cast<int>(i));
    ct.values.push_back(1.0);
    auto& cl = columns[static_cast<std::size_t>(layout.delta_offset() + d.l_idx[i])];
    cl.rows.push_back(static_cast<int>(i));
    cl.values.push_back(1.0);
  }

  std::vector<bool> active(static_cast<std::size_t>(dim), true);
  if (layout.n_times() == 0) active[static_cast<std::size_t>(layout.lsg_index())] = false;
  if (layout.n_areas() == 0) active[static_cast<std::size_t>(layout.lsd_index())] = false;

  McmcResult result;
  result.chain_draws.resize(static_cast<std::size_t>(options.chains));
  std::vector<Vec> accepts(static_cast<std::size_t>(options.chains));

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_threads = options.threads > 0
                                 ? static_cast<unsigned>(options.threads)
                                 : std::min<unsigned>(hw, static_cast<unsigned>(options.chains));
  std::vector<std::thread> pool;
  std::size_t next_chain = 0;
  while (next_chain < static_cast<std::size_t>(options.chains)) {
    pool.clear();
    const std::size_t batch_end =
        std::min(next_chain + n_threads, static_cast<std::size_t>(options.chains));
    for (std::size_t c = next_chain; c < batch_end; ++c) {
      pool.emplace_back([&, c]() {
        mcmc_detail::run_chain(d, prior, options, start,
                               substream_seed(options.seed, static_cast<std::uint64_t>(c)),
                               columns, active, result.chain_draws[c], accepts[c]);
      });
    }
    for (auto& th : pool) th.join();
    next_chain = batch_end;
  }

  const long kept = result.chain_draws.empty() ? 0 : result.chain_draws[0].rows();
  result.pooled = Mat(kept * options.chains, dim);
  for (int c = 0; c < options.chains; ++c) {
    result.pooled.middleRows(static_cast<long>(c) * kept, kept) =
        result.chain_draws[static_cast<std::size_t>(c)];
  }

  result.mean = Vec::Zero(dim);
  result.sd = Vec::Zero(dim);
  result.rhat = Vec::Ones(dim);
  result.ess = Vec::Zero(dim);
  result.accept_rate = Vec::Zero(dim);
  for (int c = 0; c < options.chains; ++c) {
    result.accept_rate += accepts[static_cast<std::size_t>(c)];
  }
  result.accept_rate /= static_cast<double>(options.chains);

  const double n_total = static_cast<double>(result.pooled.rows());
  for (int k = 0; k < dim; ++k) {
    const Vec col = result.pooled.col(k);
    const double mean = col.mean();
    result.mean[k] = mean;
    result.sd[k] = n_total > 1 ? std::sqrt((col.array() - mean).square().sum() / (n_total - 1.0))
                               : 0.0;
    if (!active[static_cast<std::size_t>(k)]) continue;
    std::vector<std::vector<double>> seqs;
    for (int c = 0; c < options.chains; ++c) {
      const Mat& ch = result.chain_draws[static_cast<std::size_t>(c)];
      seqs.emplace_back(ch.col(k).begin(), ch.col(k).end());
    }
    result.rhat[k] = split_rhat(seqs);
    result.ess[k] = effective_sample_size(seqs);
  }
  result.max_rhat = result.rhat.maxCoeff();
  result.converged = result.max_rhat <= 1.05;
  return result;
}

}  // namespace its::inference
