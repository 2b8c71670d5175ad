#include "tagbias/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace tagbias {

TagDataset::TagDataset(std::vector<GeneRecord> records)
    : records_(std::move(records)) {
  std::unordered_set<std::string> seen;
  seen.reserve(records_.size());
  counts_.reserve(records_.size());
  phi_.reserve(records_.size());
  for (const auto &r : records_) {
    if (!seen.insert(r.id).second)
      throw std::invalid_argument("duplicate category id: " + r.id);
    if (!(r.phi > 0.0 && r.phi <= 1.0))
      throw std::invalid_argument("phi out of (0,1] for category " + r.id);
    total_tags_ += r.tag_count;
    counts_.push_back(static_cast<double>(r.tag_count));
    phi_.push_back(r.phi);
  }
}

std::size_t
TagDataset::find(const std::string &id) const {
  const auto it = std::find_if(records_.begin(), records_.end(),
                               [&](const GeneRecord &r) { return r.id == id; });
  return static_cast<std::size_t>(it - records_.begin());
}

bool
operator==(const TagDataset &a, const TagDataset &b) {
  if (a.size() != b.size() || a.total_tags_ != b.total_tags_)
    return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto &x = a.records_[i];
    const auto &y = b.records_[i];
    if (x.id != y.id || x.tag_count != y.tag_count || x.phi != y.phi)
      return false;
  }
  return true;
}

bool
on_simplex(std::span<const double> v, double tol) {
  double total = 0.0;
  for (const double x : v) {
    if (!(x >= 0.0))
      return false;
    total += x;
  }
  return std::abs(total - 1.0) <= tol;
}

CompositionVector::CompositionVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (!on_simplex(values_))
    throw std::invalid_argument("composition is not on the simplex");
}

CompositionVector
CompositionVector::from_weights(std::vector<double> weights) {
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("weights must be finite and nonnegative");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("weights sum to zero");
  for (auto &w : weights)
    w /= total;
  CompositionVector out;
  out.values_ = std::move(weights);
  return out;
}

CompositionVector
CompositionVector::uniform(std::size_t k) {
  if (k == 0)
    throw std::invalid_argument("empty composition");
  return from_weights(std::vector<double>(k, 1.0));
}

void
Hyperparams::validate(std::size_t k) const {
  if (alpha.size() != k)
    throw std::invalid_argument("alpha length does not match category count");
  for (const double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("alpha entries must be positive");
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("gamma1, gamma2 and lambda must be positive");
  if (std::isnan(mu))
    throw std::invalid_argument("mu is NaN");
}

double
resolve_mu(const TagDataset &data, const Hyperparams &hyper) {
  if (hyper.mu > 0.0)
    return hyper.mu;
  if (data.total_tags() == 0)
    return 0.0;
  const auto m = corrected_mle(data);
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    s += m[i] * data.phi()[i];
  return static_cast<double>(data.total_tags()) * (1.0 - s) / s;
}

double
compute_phi(double p, std::uint32_t num_sites,
            std::span<const std::uint32_t> ambiguous) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("cleavage probability must lie in (0,1)");
  std::vector<bool> skip(num_sites + 1, false);
  for (const auto j : ambiguous) {
    if (j < 1 || j > num_sites)
      throw std::invalid_argument("ambiguous site index out of range");
    skip[j] = true;
  }
  double phi = 0.0;
  double reach = 1.0;  // (1-p)^(j-1)
  for (std::uint32_t j = 1; j <= num_sites; ++j) {
    if (!skip[j])
      phi += reach * p;
    reach *= 1.0 - p;
  }
  return phi;
}

double
compute_phi(const SiteSpec &spec) {
  return compute_phi(spec.p, spec.num_sites, spec.ambiguous);
}

CompositionVector
tag_frequency(const CompositionVector &m, std::span<const double> phi) {
  if (m.size() != phi.size())
    throw std::invalid_argument("composition and phi lengths differ");
  std::vector<double> w(m.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = m[i] * phi[i];
  return CompositionVector::from_weights(std::move(w));
}

double
log_multinomial_coefficient(const TagDataset &data) {
  double out = std::lgamma(static_cast<double>(data.total_tags()) + 1.0);
  for (const double t : data.counts())
    out -= std::lgamma(t + 1.0);
  return out;
}

namespace {

double
weighted_sum(std::span<const double> m, std::span<const double> phi) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    s += m[i] * phi[i];
  return s;
}

}  // namespace

double
log_likelihood(const TagDataset &data, const CompositionVector &m) {
  if (m.size() != data.size())
    throw std::invalid_argument("composition length does not match data");
  if (data.total_tags() == 0)
    return 0.0;
  const auto &t = data.counts();
  const auto &phi = data.phi();
  const double s = weighted_sum(m.span(), phi);
  if (!(s > 0.0))
    return neg_inf;
  double ll = log_multinomial_coefficient(data);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 0.0)
      continue;
    const double x = m[i] * phi[i];
    if (x == 0.0)
      return neg_inf;
    ll += t[i] * std::log(x);
  }
  return ll - static_cast<double>(data.total_tags()) * std::log(s);
}

double
log_posterior_kernel(const TagDataset &data, std::span<const double> m,
                     std::span<const double> alpha) {
  if (m.size() != data.size() || alpha.size() != data.size())
    throw std::invalid_argument("length mismatch in posterior kernel");
  const auto &t = data.counts();
  const auto &phi = data.phi();
  const double s = weighted_sum(m, phi);
  if (!(s > 0.0))
    return neg_inf;
  double out = -static_cast<double>(data.total_tags()) * std::log(s);
  bool pos_inf = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = alpha[i] + t[i] - 1.0;
    if (e == 0.0)
      continue;
    const double x = m[i] * phi[i];
    if (x == 0.0) {
      if (e > 0.0)
        return neg_inf;
      pos_inf = true;
      continue;
    }
    out += e * std::log(x);
  }
  return pos_inf ? std::numeric_limits<double>::infinity() : out;
}

double
log_posterior_kernel(const TagDataset &data, const CompositionVector &m,
                     std::span<const double> alpha) {
  return log_posterior_kernel(data, m.span(), alpha);
}

CompositionVector
naive_mle(const TagDataset &data) {
  if (data.total_tags() == 0)
    throw std::domain_error("naive MLE undefined for an empty sample");
  return CompositionVector::from_weights(data.counts());
}

CompositionVector
corrected_mle(const TagDataset &data) {
  if (data.total_tags() == 0)
    throw std::domain_error("corrected MLE undefined for an empty sample");
  const auto &t = data.counts();
  const auto &phi = data.phi();
  std::vector<double> w(t.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(phi[i] > 0.0))
      throw std::domain_error("phi must be positive");
    w[i] = t[i] / phi[i];
  }
  return CompositionVector::from_weights(std::move(w));
}

double
natural_population_estimate(const TagDataset &data) {
  const auto &t = data.counts();
  const auto &phi = data.phi();
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    total += t[i] / phi[i];
  return total;
}

}  // namespace tagbias
