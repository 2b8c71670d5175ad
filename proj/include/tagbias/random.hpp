#ifndef TAGBIAS_RANDOM_HPP
#define TAGBIAS_RANDOM_HPP

// Exact variate generators on top of the standard library engines. All
// draws go through std::mt19937_64 so a chain is a pure function of its
// seed.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tagbias {

// Uniform random bit generator: a 64-bit Mersenne Twister plus a gamma
// distribution object that persists across draws so the normal variates it
// generates in pairs are not thrown away.
class Rng {
public:
  using result_type = std::mt19937_64::result_type;

  Rng() = default;
  explicit Rng(std::seed_seq &seq) : engine_(seq) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double gamma(double shape) {
    return gamma_(engine_, std::gamma_distribution<double>::param_type(shape, 1.0));
  }

private:
  std::mt19937_64 engine_;
  std::gamma_distribution<double> gamma_;
};

// Independent stream for chain `chain` of a run seeded with `seed`.
[[nodiscard]] Rng make_rng(std::uint64_t seed, std::uint64_t chain = 0);

// Gamma with the given shape and unit rate.
[[nodiscard]] double draw_gamma(double shape, Rng &rng);

[[nodiscard]] std::uint64_t draw_poisson(double mean, Rng &rng);

[[nodiscard]] std::uint64_t draw_binomial(std::uint64_t n, double p, Rng &rng);

// Fills `out` with a Dirichlet(shape) draw. Shapes below one are drawn in
// log space when the unnormalized total would underflow.
void draw_dirichlet(std::span<const double> shape, std::span<double> out,
                    Rng &rng);

// Adds a Multinomial(n, weights / sum(weights)) draw into `counts`.
// Weights need not be normalized; returns false (and adds nothing) if they
// sum to zero while n > 0.
bool add_multinomial(std::uint64_t n, std::span<const double> weights,
                     std::span<std::uint64_t> counts, Rng &rng);

}  // namespace tagbias

#endif
