#ifndef TAGBIAS_SYNTHETIC_HPP
#define TAGBIAS_SYNTHETIC_HPP

// Forward simulation of the biased tagging process and quadrature oracles
// for small posteriors.

#include "tagbias/model.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace tagbias {

struct FixedPopulation {
  std::uint64_t N{};
};
struct PoissonPopulation {
  double lambda{};
};

struct SimSpec {
  CompositionVector m_true;
  std::vector<double> phi;  // in (0,1]
  std::variant<FixedPopulation, PoissonPopulation> population;
  std::uint64_t seed{};
  std::vector<std::string> ids;  // empty: "c1", "c2", ...

  void validate() const;
};

struct Simulation {
  TagDataset data;
  std::vector<std::uint64_t> g_true;
  std::uint64_t N_true{};
};

// N (fixed or Poisson), g ~ Mult(N, m_true), t_i ~ Bin(g_i, phi_i).
[[nodiscard]] Simulation simulate_dataset(const SimSpec &spec);

struct FixtureTargets {
  std::size_t categories{6096};
  std::uint64_t total_tags{12799};
  std::size_t zero_count{3560};
  std::uint64_t max_count{392};
  double phi_min{0.003};
  double relative_tolerance{0.05};
  double population_low{14000.0};
  double population_high{19000.0};
  int max_attempts{50};
};

struct FixtureStats {
  std::size_t categories{};
  std::uint64_t total_tags{};
  std::size_t zero_count{};
  std::uint64_t max_count{};
  double phi_min{};
  double phi_max{};
  double natural_population{};

  [[nodiscard]] std::string describe() const;
};

[[nodiscard]] FixtureStats fixture_stats(const TagDataset &data);

// Synthetic dataset shaped like a yeast log-phase SAGE library: 6096
// categories, ~12799 tags, ~3560 zero counts, largest count ~392 and tag
// formation probabilities from a geometric site model clamped to
// [0.003, 1]. Throws std::runtime_error with the achieved statistics if no
// attempt lands inside the tolerances.
[[nodiscard]] TagDataset
make_paper_scale_fixture(std::uint64_t seed, const FixtureTargets &targets = {});

struct OracleResult {
  CompositionVector mean;
  std::vector<double> lower95;
  std::vector<double> upper95;
  CompositionVector argmax;
  double resolution{};  // grid spacing in each coordinate
};

// Posterior of the bias-corrected model with a Dirichlet(alpha) prior by
// midpoint quadrature over the simplex: k = 2 uses `grid_points` cells on
// m_1, k = 3 a barycentric triangulation with `grid_points` divisions per
// edge. Kernel values are exponentiated after subtracting their maximum.
[[nodiscard]] OracleResult grid_oracle(const TagDataset &data,
                                       std::span<const double> alpha,
                                       std::size_t grid_points);

}  // namespace tagbias

#endif
