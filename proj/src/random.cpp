#include "tagbias/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tagbias {

Rng
make_rng(std::uint64_t seed, std::uint64_t chain) {
  const auto lo = [](std::uint64_t x) {
    return static_cast<std::uint32_t>(x & 0xffffffffu);
  };
  const auto hi = [](std::uint64_t x) {
    return static_cast<std::uint32_t>(x >> 32);
  };
  std::seed_seq seq{lo(seed), hi(seed), lo(chain), hi(chain)};
  return Rng(seq);
}

double
draw_gamma(double shape, Rng &rng) {
  return rng.gamma(shape);
}

std::uint64_t
draw_poisson(double mean, Rng &rng) {
  if (!(mean > 0.0))
    return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

std::uint64_t
draw_binomial(std::uint64_t n, double p, Rng &rng) {
  if (n == 0 || !(p > 0.0))
    return 0;
  if (p >= 1.0)
    return n;
  std::binomial_distribution<std::uint64_t> dist(n, p);
  return dist(rng);
}

void
draw_dirichlet(std::span<const double> shape, std::span<double> out,
               Rng &rng) {
  constexpr double underflow_guard = 1e-250;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // For shape a < 1: X = G(a+1) U^(1/a); keep log X for those entries so the
  // normalization can be redone in log space if everything underflows.
  std::vector<double> log_small;
  double total = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const double a = shape[i];
    if (a >= 1.0) {
      out[i] = draw_gamma(a, rng);
    }
    else {
      const double g = draw_gamma(a + 1.0, rng);
      const double lx = std::log(g) + std::log(unif(rng)) / a;
      if (log_small.empty())
        log_small.assign(shape.size(), std::numeric_limits<double>::quiet_NaN());
      log_small[i] = lx;
      out[i] = std::exp(lx);
    }
    total += out[i];
  }
  if (total > underflow_guard) {
    for (auto &x : out)
      x /= total;
    return;
  }
  std::vector<double> lx(shape.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shape.size(); ++i) {
    lx[i] = shape[i] >= 1.0 ? std::log(out[i]) : log_small[i];
    top = std::max(top, lx[i]);
  }
  total = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out[i] = std::exp(lx[i] - top);
    total += out[i];
  }
  for (auto &x : out)
    x /= total;
}

bool
add_multinomial(std::uint64_t n, std::span<const double> weights,
                std::span<std::uint64_t> counts, Rng &rng) {
  if (n == 0)
    return true;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0))
    return false;
  const std::size_t k = weights.size();

  if (n * 8 < k) {
    // few trials over many cells: place n sorted uniforms on the cumulative
    // weight scale
    std::uniform_real_distribution<double> unif(0.0, total);
    std::vector<double> u(n);
    for (auto &x : u)
      x = unif(rng);
    std::sort(u.begin(), u.end());
    std::size_t j = 0;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < k && j < n; ++i) {
      if (weights[i] <= 0.0)
        continue;
      last_positive = i;
      cum += weights[i];
      while (j < n && u[j] < cum) {
        ++counts[i];
        ++j;
      }
    }
    // rounding can leave a draw past the final cumulative sum
    counts[last_positive] += n - j;
    return true;
  }

  std::uint64_t remaining = n;
  double mass = total;
  for (std::size_t i = 0; i < k && remaining > 0; ++i) {
    if (weights[i] <= 0.0)
      continue;
    const double p = std::min(1.0, weights[i] / mass);
    const auto x = draw_binomial(remaining, p, rng);
    counts[i] += x;
    remaining -= x;
    mass -= weights[i];
    if (mass <= 0.0 && remaining > 0) {
      counts[i] += remaining;
      remaining = 0;
    }
  }
  if (remaining > 0) {
    // floating point left mass on the table; give it to the last live cell
    for (std::size_t i = k; i-- > 0;)
      if (weights[i] > 0.0) {
        counts[i] += remaining;
        break;
      }
  }
  return true;
}

}  // namespace tagbias
