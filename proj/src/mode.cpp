#include "tagbias/mode.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace tagbias {

std::string
to_string(OptimizerStatus status) {
  switch (status) {
  case OptimizerStatus::converged:
    return "converged";
  case OptimizerStatus::cycled:
    return "cycled";
  case OptimizerStatus::max_iter:
    return "max_iter";
  case OptimizerStatus::failed:
    return "failed";
  }
  return "?";
}

namespace {

std::vector<double>
start_composition(const TagDataset &data) {
  if (data.total_tags() == 0)
    return CompositionVector::uniform(data.size()).values();
  return corrected_mle(data).values();
}

double
l1(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d += std::abs(a[i] - b[i]);
  return d;
}

struct LsState {
  std::vector<double> m;
  std::vector<std::uint64_t> g;
  double N{};
};

}  // namespace

OptimizerResult
dpb_lindley_smith(const TagDataset &data, const Hyperparams &hyper, double tol,
                  std::uint64_t max_iter) {
  if (!(tol > 0.0))
    throw std::invalid_argument("tolerance must be positive");
  hyper.validate(data.size());
  const auto &phi = data.phi();
  const auto &alpha = hyper.alpha;
  const std::size_t k = data.size();

  LsState s;
  s.m = start_composition(data);
  s.N = std::max(1.0, natural_population_estimate(data));
  s.g.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    s.g[i] = data[i].tag_count + static_cast<std::uint64_t>(
                                     std::floor(s.N * s.m[i] * (1.0 - phi[i])));

  constexpr std::size_t max_period = 4;
  std::deque<LsState> history;  // most recent first

  OptimizerResult out;
  std::vector<double> m_new(k);
  for (std::uint64_t it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < k; ++i)
      m_new[i] = (static_cast<double>(s.g[i]) + alpha[i]) / s.N;
    const double residual = l1(m_new, s.m);
    s.m.swap(m_new);

    std::uint64_t g_total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      s.g[i] = data[i].tag_count + static_cast<std::uint64_t>(std::floor(
                                       s.N * s.m[i] * (1.0 - phi[i])));
      g_total += s.g[i];
    }
    s.N = (static_cast<double>(g_total) + hyper.gamma1) / (1.0 + hyper.gamma2);

    out.iterations_used = it;
    out.final_residual = residual;
    if (residual <= tol) {
      out.status = OptimizerStatus::converged;
      break;
    }

    // a repeated (g, N) pair means the iteration is periodic from here on;
    // history[j] is j + 1 updates old, and a match at j = 0 is a fixed point
    // that the next residual will confirm
    std::size_t period = 0;
    for (std::size_t j = 1; j < history.size() && j < max_period; ++j) {
      const auto &old = history[j];
      if (old.g == s.g && old.N == s.N) {
        period = j + 1;
        break;
      }
    }
    if (period > 0) {
      // candidates: the current state and the period-1 states before it
      const LsState *best = &s;
      double best_kernel = neg_inf;
      for (std::size_t j = 0; j < period; ++j) {
        const LsState &cand = j == 0 ? s : history[j - 1];
        const auto mc = CompositionVector::from_weights(cand.m);
        const double lk = log_posterior_kernel(data, mc, alpha);
        if (j == 0 || lk > best_kernel) {
          best_kernel = lk;
          best = &cand;
        }
      }
      const LsState chosen = *best;
      s = chosen;
      out.status = OptimizerStatus::cycled;
      out.diagnostic = "latent counts cycle with period " +
                       std::to_string(period);
      break;
    }
    history.push_front(s);
    if (history.size() > max_period)
      history.pop_back();
  }
  if (out.status == OptimizerStatus::failed) {
    out.status = OptimizerStatus::max_iter;
    out.diagnostic = "no convergence within " + std::to_string(max_iter) +
                     " iterations";
  }
  out.m_raw = s.m;
  out.m = CompositionVector::from_weights(s.m);
  out.g = s.g;
  out.N = s.N;
  return out;
}

OptimizerResult
md_mode_iteration(const TagDataset &data, std::span<const double> alpha,
                  double mu, double tol, std::uint64_t max_iter) {
  if (!(tol > 0.0))
    throw std::invalid_argument("tolerance must be positive");
  if (alpha.size() != data.size())
    throw std::invalid_argument("alpha length does not match category count");
  if (!(mu >= 0.0))
    throw std::invalid_argument("mu must be nonnegative");
  const auto &t = data.counts();
  const auto &phi = data.phi();
  const std::size_t k = data.size();

  double prior_plus_counts = 0.0;
  std::vector<double> numerators(k);
  for (std::size_t i = 0; i < k; ++i) {
    prior_plus_counts += alpha[i] + t[i];
    numerators[i] = std::max(t[i] + alpha[i] - 1.0, 0.0);
  }

  OptimizerResult out;
  if (std::all_of(numerators.begin(), numerators.end(),
                  [](double x) { return x == 0.0; })) {
    out.diagnostic = "every Dirichlet mode coordinate is on the boundary";
    return out;
  }

  const auto m0 = start_composition(data);
  std::vector<double> v(k);
  double v_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    v[i] = m0[i] * phi[i];
    v_sum += v[i];
  }
  double v0 = std::max(0.0, 1.0 - v_sum);

  std::vector<double> v_new(k);
  for (std::uint64_t it = 1; it <= max_iter; ++it) {
    out.r = static_cast<std::uint64_t>(std::floor(v0 * mu));
    const double denom = prior_plus_counts + static_cast<double>(out.r) -
                         static_cast<double>(k);
    if (!(denom > 0.0)) {
      out.status = OptimizerStatus::failed;
      out.diagnostic = "nonpositive Dirichlet mode denominator " +
                       std::to_string(denom) + " (r = " +
                       std::to_string(out.r) + ")";
      out.iterations_used = it;
      return out;
    }
    double sum_new = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      v_new[i] = numerators[i] / denom;
      sum_new += v_new[i];
    }
    const double v0_new = std::max(0.0, 1.0 - sum_new);
    const double residual = l1(v_new, v) + std::abs(v0_new - v0);
    v.swap(v_new);
    v0 = v0_new;
    out.iterations_used = it;
    out.final_residual = residual;
    if (residual <= tol) {
      out.status = OptimizerStatus::converged;
      break;
    }
  }
  if (out.status != OptimizerStatus::converged) {
    out.status = OptimizerStatus::max_iter;
    out.diagnostic = "no convergence within " + std::to_string(max_iter) +
                     " iterations";
  }
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i)
    w[i] = v[i] / phi[i];
  out.m_raw = v;
  out.m = CompositionVector::from_weights(std::move(w));
  return out;
}

CompositionVector
md_exact_mean(const TagDataset &data, std::span<const double> alpha) {
  if (alpha.size() != data.size())
    throw std::invalid_argument("alpha length does not match category count");
  const auto &t = data.counts();
  const auto &phi = data.phi();
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    total += alpha[i] + t[i];
  if (!(total > 0.0))
    throw std::domain_error("prior plus counts must be positive");
  std::vector<double> w(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    w[i] = (alpha[i] + t[i]) / total / phi[i];
  return CompositionVector::from_weights(std::move(w));
}

std::optional<GammaSelection>
select_dpb_gammas(const TagDataset &data, std::span<const double> alpha,
                  const CompositionVector &target,
                  std::span<const double> gamma1_grid,
                  std::span<const double> gamma2_grid, double tol,
                  std::uint64_t max_iter) {
  std::optional<GammaSelection> best;
  Hyperparams hyper;
  hyper.alpha.assign(alpha.begin(), alpha.end());
  for (const double g1 : gamma1_grid)
    for (const double g2 : gamma2_grid) {
      hyper.gamma1 = g1;
      hyper.gamma2 = g2;
      auto res = dpb_lindley_smith(data, hyper, tol, max_iter);
      if (!res.ok())
        continue;
      const double d = l1(res.m_raw, target.values());
      if (!best || d < best->distance)
        best = GammaSelection{g1, g2, d, std::move(res)};
    }
  return best;
}

}  // namespace tagbias
