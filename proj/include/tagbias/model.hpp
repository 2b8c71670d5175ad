#ifndef TAGBIAS_MODEL_HPP
#define TAGBIAS_MODEL_HPP

// Data model for biased categorical sampling: each category i is present
// in the population with proportion m_i but only yields an observable tag
// with probability phi_i. Observed counts t_i therefore follow a
// multinomial with frequencies theta_i = m_i phi_i / sum_j m_j phi_j.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tagbias {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Tolerance used for the simplex-sum invariant.
inline constexpr double simplex_tol = 1e-9;

struct SiteSpec {
  double p{};                       // per-site cleavage probability
  std::uint32_t num_sites{};
  std::vector<std::uint32_t> ambiguous;  // 1-based, site 1 is the 3'-most
};

struct GeneRecord {
  std::string id;
  std::uint64_t tag_count{};
  double phi{};
};

class TagDataset {
public:
  TagDataset() = default;
  explicit TagDataset(std::vector<GeneRecord> records);

  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }
  [[nodiscard]] const std::vector<GeneRecord> &records() const {
    return records_;
  }
  [[nodiscard]] const GeneRecord &operator[](std::size_t i) const {
    return records_[i];
  }
  [[nodiscard]] std::uint64_t total_tags() const { return total_tags_; }

  [[nodiscard]] const std::vector<double> &counts() const { return counts_; }
  [[nodiscard]] const std::vector<double> &phi() const { return phi_; }

  // index of the record with this id, or size() if absent
  [[nodiscard]] std::size_t find(const std::string &id) const;

  friend bool operator==(const TagDataset &a, const TagDataset &b);

private:
  std::vector<GeneRecord> records_;
  std::uint64_t total_tags_{};
  // dense copies for the numeric kernels
  std::vector<double> counts_;
  std::vector<double> phi_;
};

// A point on the probability simplex.
class CompositionVector {
public:
  CompositionVector() = default;
  // Throws std::invalid_argument unless entries are >= 0 and sum to 1.
  explicit CompositionVector(std::vector<double> values);

  // Normalizes nonnegative weights; throws if they sum to zero.
  static CompositionVector from_weights(std::vector<double> weights);
  static CompositionVector uniform(std::size_t k);

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] const std::vector<double> &values() const { return values_; }
  [[nodiscard]] std::span<const double> span() const { return values_; }

  friend bool operator==(const CompositionVector &,
                         const CompositionVector &) = default;

private:
  std::vector<double> values_;
};

[[nodiscard]] bool on_simplex(std::span<const double> v,
                              double tol = simplex_tol);

struct Hyperparams {
  std::vector<double> alpha;  // Dirichlet prior, one per category
  double gamma1{100.0};       // DPB gamma shape on N
  double gamma2{0.005};       // DPB gamma rate on N
  double lambda{20000.0};     // DMB Poisson mean of N
  double mu{0.0};             // MD Poisson mean of r; <= 0 means derive from data

  // Throws std::invalid_argument on nonpositive entries (mu excepted).
  void validate(std::size_t k) const;
};

[[nodiscard]] inline std::vector<double> broadcast_alpha(double a,
                                                       std::size_t k) {
  return std::vector<double>(k, a);
}

// Resolved MD prior mean: hyper.mu if positive, else the data-derived default
// T_tot (1 - s) / s with s = sum m_i phi_i at the corrected MLE.
[[nodiscard]] double resolve_mu(const TagDataset &data,
                                const Hyperparams &hyper);

// Tag formation probability: sum over non-ambiguous sites j of
// (1-p)^(j-1) p. Throws std::domain_error for p outside (0,1) and
// std::invalid_argument for ambiguous indices outside 1..num_sites.
[[nodiscard]] double compute_phi(double p, std::uint32_t num_sites,
                                 std::span<const std::uint32_t> ambiguous);
[[nodiscard]] double compute_phi(const SiteSpec &spec);

// theta_i = m_i phi_i / sum_j m_j phi_j
[[nodiscard]] CompositionVector tag_frequency(const CompositionVector &m,
                                              std::span<const double> phi);

[[nodiscard]] double log_multinomial_coefficient(const TagDataset &data);

// Bias-corrected multinomial log-likelihood. Returns neg_inf when a
// category with t_i > 0 has m_i phi_i = 0.
[[nodiscard]] double log_likelihood(const TagDataset &data,
                                    const CompositionVector &m);

// log of (sum m_i phi_i)^(-T_tot) prod (m_i phi_i)^(alpha_i + t_i - 1).
// Zero-exponent terms contribute 0 even at m_i = 0; a zero base with a
// positive exponent gives neg_inf, with a negative exponent +inf.
[[nodiscard]] double log_posterior_kernel(const TagDataset &data,
                                          std::span<const double> m,
                                          std::span<const double> alpha);
[[nodiscard]] double log_posterior_kernel(const TagDataset &data,
                                          const CompositionVector &m,
                                          std::span<const double> alpha);

// theta_hat_i = t_i / T_tot
[[nodiscard]] CompositionVector naive_mle(const TagDataset &data);

// m_hat_i proportional to theta_hat_i / phi_i
[[nodiscard]] CompositionVector corrected_mle(const TagDataset &data);

// sum_i t_i / phi_i
[[nodiscard]] double natural_population_estimate(const TagDataset &data);

}  // namespace tagbias

#endif
