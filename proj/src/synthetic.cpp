#include "tagbias/synthetic.hpp"
#include "tagbias/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tagbias {

void
SimSpec::validate() const {
  if (m_true.size() == 0)
    throw std::invalid_argument("simulation needs at least one category");
  if (phi.size() != m_true.size())
    throw std::invalid_argument("phi length does not match m_true");
  for (const double p : phi)
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("phi out of (0,1]");
  if (!ids.empty() && ids.size() != m_true.size())
    throw std::invalid_argument("ids length does not match m_true");
  if (const auto *pois = std::get_if<PoissonPopulation>(&population))
    if (!(pois->lambda > 0.0))
      throw std::invalid_argument("Poisson population mean must be positive");
}

Simulation
simulate_dataset(const SimSpec &spec) {
  spec.validate();
  auto rng = make_rng(spec.seed);
  const std::size_t k = spec.m_true.size();

  Simulation sim;
  if (const auto *fixed = std::get_if<FixedPopulation>(&spec.population))
    sim.N_true = fixed->N;
  else
    sim.N_true = draw_poisson(std::get<PoissonPopulation>(spec.population).lambda,
                              rng);

  sim.g_true.assign(k, 0);
  add_multinomial(sim.N_true, spec.m_true.span(), sim.g_true, rng);

  std::vector<GeneRecord> records(k);
  for (std::size_t i = 0; i < k; ++i) {
    records[i].id = spec.ids.empty() ? "c" + std::to_string(i + 1) : spec.ids[i];
    records[i].phi = spec.phi[i];
    records[i].tag_count = draw_binomial(sim.g_true[i], spec.phi[i], rng);
  }
  sim.data = TagDataset(std::move(records));
  return sim;
}

FixtureStats
fixture_stats(const TagDataset &data) {
  FixtureStats s;
  s.categories = data.size();
  s.total_tags = data.total_tags();
  s.phi_min = 1.0;
  s.phi_max = 0.0;
  for (const auto &r : data.records()) {
    if (r.tag_count == 0)
      ++s.zero_count;
    s.max_count = std::max(s.max_count, r.tag_count);
    s.phi_min = std::min(s.phi_min, r.phi);
    s.phi_max = std::max(s.phi_max, r.phi);
  }
  s.natural_population = natural_population_estimate(data);
  return s;
}

std::string
FixtureStats::describe() const {
  std::ostringstream os;
  os << "categories=" << categories << " total_tags=" << total_tags
     << " zero_count=" << zero_count << " max_count=" << max_count
     << " phi=[" << phi_min << ", " << phi_max << "]"
     << " natural_population=" << natural_population;
  return os.str();
}

namespace {

bool
within(double achieved, double target, double rel) {
  return std::abs(achieved - target) <= rel * target;
}

// Geometric site model: 1 + Poisson(2.5) sites (at most 12), cleavage
// probability 0.6, each site ambiguous with probability 0.12.
std::vector<double>
draw_site_phi(std::size_t k, double phi_min, Rng &rng) {
  constexpr double cleave = 0.6;
  constexpr double ambiguous_rate = 0.12;
  std::poisson_distribution<std::uint32_t> extra_sites(2.5);
  std::bernoulli_distribution is_ambiguous(ambiguous_rate);
  std::vector<double> phi(k);
  std::vector<std::uint32_t> ambiguous;
  for (auto &p : phi) {
    const std::uint32_t sites = 1 + std::min<std::uint32_t>(extra_sites(rng), 11);
    ambiguous.clear();
    for (std::uint32_t j = 1; j <= sites; ++j)
      if (is_ambiguous(rng))
        ambiguous.push_back(j);
    p = std::clamp(compute_phi(cleave, sites, ambiguous), phi_min, 1.0);
  }
  return phi;
}

// Tag frequencies from log-normal abundances with spread `sigma`, the
// largest pinned at `top_share`.
std::vector<double>
pinned_frequencies(const std::vector<double> &z, const std::vector<double> &phi,
                   double sigma, double top_share) {
  std::vector<double> theta(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    theta[i] = std::exp(sigma * z[i]) * phi[i];
  const auto top = static_cast<std::size_t>(
      std::max_element(theta.begin(), theta.end()) - theta.begin());
  theta[top] = 0.0;
  const double rest = std::accumulate(theta.begin(), theta.end(), 0.0);
  for (auto &x : theta)
    x *= (1.0 - top_share) / rest;
  theta[top] = top_share;
  return theta;
}

double
expected_zeros(const std::vector<double> &theta, double total) {
  double z = 0.0;
  for (const double x : theta)
    z += std::pow(1.0 - x, total);
  return z;
}

}  // namespace

TagDataset
make_paper_scale_fixture(std::uint64_t seed, const FixtureTargets &targets) {
  const std::size_t k = targets.categories;
  const double total = static_cast<double>(targets.total_tags);
  const double top_share = static_cast<double>(targets.max_count) / total;
  FixtureStats last;

  for (int attempt = 0; attempt < targets.max_attempts; ++attempt) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    const auto phi = draw_site_phi(k, targets.phi_min, rng);
    std::normal_distribution<double> normal;
    std::vector<double> z(k);
    for (auto &x : z)
      x = normal(rng);

    // spread of the abundance distribution controls the zero count
    double lo = 0.05, hi = 6.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double zeros =
          expected_zeros(pinned_frequencies(z, phi, mid, top_share), total);
      (zeros < static_cast<double>(targets.zero_count) ? lo : hi) = mid;
    }
    const auto theta = pinned_frequencies(z, phi, 0.5 * (lo + hi), top_share);

    std::vector<double> m(k);
    for (std::size_t i = 0; i < k; ++i)
      m[i] = theta[i] / phi[i];
    auto m_true = CompositionVector::from_weights(std::move(m));
    double tag_rate = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      tag_rate += m_true[i] * phi[i];

    SimSpec spec;
    spec.m_true = std::move(m_true);
    spec.phi = phi;
    spec.population = FixedPopulation{
        static_cast<std::uint64_t>(std::llround(total / tag_rate))};
    spec.seed = rng();
    spec.ids.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "gene%05zu", i + 1);
      spec.ids[i] = buf;
    }
    auto sim = simulate_dataset(spec);

    last = fixture_stats(sim.data);
    const double rel = targets.relative_tolerance;
    if (within(static_cast<double>(last.total_tags), total, rel) &&
        within(static_cast<double>(last.zero_count),
               static_cast<double>(targets.zero_count), rel) &&
        within(static_cast<double>(last.max_count),
               static_cast<double>(targets.max_count), rel) &&
        last.natural_population >= targets.population_low &&
        last.natural_population <= targets.population_high)
      return std::move(sim.data);
  }
  throw std::runtime_error("paper-scale fixture missed its targets after " +
                           std::to_string(targets.max_attempts) +
                           " attempts; last: " + last.describe());
}

namespace {

struct WeightedPoint {
  double value;
  double weight;
};

// quantile of a discrete distribution: each support point carries its
// mass at its own location, and the CDF is interpolated linearly between
// the mid-mass points so that reflecting the support reflects the result
double
weighted_quantile(std::vector<WeightedPoint> pts, double q) {
  std::sort(pts.begin(), pts.end(),
            [](const auto &a, const auto &b) { return a.value < b.value; });
  std::vector<WeightedPoint> merged;
  for (const auto &p : pts) {
    if (!merged.empty() && merged.back().value == p.value)
      merged.back().weight += p.weight;
    else
      merged.push_back(p);
  }
  double total = 0.0;
  for (const auto &p : merged)
    total += p.weight;
  const double target = q * total;
  double cum = 0.0;
  double prev_mid = 0.0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const double mid = cum + 0.5 * merged[i].weight;
    if (mid >= target) {
      if (i == 0 || mid == prev_mid)
        return merged[i].value;
      const double frac = (target - prev_mid) / (mid - prev_mid);
      return merged[i - 1].value + frac * (merged[i].value - merged[i - 1].value);
    }
    prev_mid = mid;
    cum += merged[i].weight;
  }
  return merged.back().value;
}

}  // namespace

OracleResult
grid_oracle(const TagDataset &data, std::span<const double> alpha,
            std::size_t grid_points) {
  const std::size_t k = data.size();
  if (k != 2 && k != 3)
    throw std::invalid_argument("grid oracle supports k = 2 or 3 only");
  if (alpha.size() != k)
    throw std::invalid_argument("alpha length does not match category count");
  if ((k == 2 && grid_points < 1000) || (k == 3 && grid_points < 100))
    throw std::invalid_argument("grid too coarse for the oracle");

  // cell centres of an equal-area partition of the simplex
  std::vector<std::vector<double>> nodes;
  const double n = static_cast<double>(grid_points);
  if (k == 2) {
    nodes.reserve(grid_points);
    for (std::size_t j = 0; j < grid_points; ++j) {
      const double x = (static_cast<double>(j) + 0.5) / n;
      nodes.push_back({x, 1.0 - x});
    }
  }
  else {
    nodes.reserve(grid_points * grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
      for (std::size_t j = 0; i + j < grid_points; ++j) {
        const double a = (static_cast<double>(i) + 1.0 / 3.0) / n;
        const double b = (static_cast<double>(j) + 1.0 / 3.0) / n;
        nodes.push_back({a, b, 1.0 - a - b});
        if (i + j + 2 <= grid_points) {
          const double c = (static_cast<double>(i) + 2.0 / 3.0) / n;
          const double d = (static_cast<double>(j) + 2.0 / 3.0) / n;
          nodes.push_back({c, d, 1.0 - c - d});
        }
      }
  }

  std::vector<double> logw(nodes.size());
  double top = neg_inf;
  std::size_t arg = 0;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    logw[p] = log_posterior_kernel(data, std::span<const double>(nodes[p]), alpha);
    if (logw[p] > top) {
      top = logw[p];
      arg = p;
    }
  }
  if (!std::isfinite(top))
    throw std::domain_error("posterior kernel is not finite on the grid");

  std::vector<double> w(nodes.size());
  double total = 0.0;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    w[p] = std::exp(logw[p] - top);
    total += w[p];
  }

  OracleResult out;
  out.resolution = 1.0 / n;
  std::vector<double> mean(k, 0.0);
  for (std::size_t p = 0; p < nodes.size(); ++p)
    for (std::size_t i = 0; i < k; ++i)
      mean[i] += w[p] * nodes[p][i];
  for (auto &x : mean)
    x /= total;
  out.mean = CompositionVector::from_weights(std::move(mean));
  out.argmax = CompositionVector::from_weights(nodes[arg]);

  std::vector<WeightedPoint> pts(nodes.size());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t p = 0; p < nodes.size(); ++p)
      pts[p] = {nodes[p][i], w[p]};
    out.lower95.push_back(weighted_quantile(pts, 0.025));
    out.upper95.push_back(weighted_quantile(pts, 0.975));
  }
  return out;
}

}  // namespace tagbias
