#ifndef TAGBIAS_GIBBS_HPP
#define TAGBIAS_GIBBS_HPP

// Gibbs samplers for the composition m under biased tagging.
//
//   DPB  t_i ~ Bin(g_i, phi_i), g_i ~ Pois(N m_i), m ~ Dir(alpha),
//        N ~ Gamma(gamma1, gamma2)
//   DMB  t_i ~ Bin(g_i, phi_i), g ~ Mult(N, m), m ~ Dir(alpha)
//   MD   untagged mass as an extra category with latent count r ~ Pois(mu)
//
// A step function maps (state, rng) to the next state; run_chain drives
// one of them with burn-in and thinning.

#include "tagbias/model.hpp"
#include "tagbias/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tagbias {

enum class Model { dpb, dmb, md };

[[nodiscard]] std::string_view to_string(Model model);
// Accepts "dpb", "dmb", "md" (case-insensitive).
[[nodiscard]] Model parse_model(std::string_view name);

struct DpbState {
  std::vector<double> m;
  std::vector<std::uint64_t> g;
  double N{};
};

struct DmbState {
  std::vector<double> m;
  std::vector<std::uint64_t> g;
  std::uint64_t N{};
};

struct MdState {
  std::vector<double> v;  // v_i = m_i phi_i
  double v0{};            // leftover 1 - sum v_i
  std::uint64_t r{};      // latent untagged count
};

// Reusable buffers so steps do not allocate.
struct StepScratch {
  std::vector<double> shape;
  std::vector<double> weights;
  std::vector<double> draw;
};

// Starting points near the posterior bulk: m = corrected MLE (uniform when
// T_tot = 0), g = t, N = round(sum t_i / phi_i).
[[nodiscard]] DpbState initial_dpb_state(const TagDataset &data);
[[nodiscard]] DmbState initial_dmb_state(const TagDataset &data);
[[nodiscard]] MdState initial_md_state(const TagDataset &data, double mu);

void dpb_step(DpbState &state, const TagDataset &data,
              const Hyperparams &hyper, Rng &rng, StepScratch &scratch);
void dmb_step(DmbState &state, const TagDataset &data,
              const Hyperparams &hyper, Rng &rng, StepScratch &scratch);
// `mu` is the resolved Poisson mean (see resolve_mu).
void md_step(MdState &state, const TagDataset &data, const Hyperparams &hyper,
             double mu, Rng &rng, StepScratch &scratch);

// m_i proportional to v_i / phi_i
[[nodiscard]] std::vector<double> md_composition(const MdState &state,
                                                 const TagDataset &data);

// Throws std::logic_error naming the violated invariant.
void check_state(const DpbState &s, const TagDataset &data);
void check_state(const DmbState &s, const TagDataset &data);
void check_state(const MdState &s, const TagDataset &data);

struct ChainConfig {
  Model model{Model::md};
  Hyperparams hyper;
  std::uint64_t iterations{500000};
  std::uint64_t burn_in{40000};
  std::uint64_t thin{100};
  std::uint64_t seed{1};
  std::vector<std::string> traced_categories;
  // Keep only the last `store_window` retained m vectors (0 keeps all).
  // Scalar traces are always kept in full.
  std::uint64_t store_window{0};
  // Check state invariants after every sweep instead of only at retained
  // sweeps.
  bool check_every_sweep{false};

  void validate(const TagDataset &data) const;
};

struct SampleStore {
  ChainConfig config;
  double mu{};  // resolved MD prior mean (0 for DPB/DMB)
  std::string trace_name;  // "N" for DPB/DMB, "r" for MD
  std::uint64_t retained_count{};
  // First retained index held in retained_m (nonzero when windowed).
  std::uint64_t first_stored{};
  std::vector<std::vector<double>> retained_m;
  std::vector<double> trace;
  // one series per traced category, in config.traced_categories order
  std::vector<std::vector<double>> trace_focal;
  std::uint64_t invariant_checks{};
  double wall_seconds{};
  double burn_in_seconds{};
  double sampling_seconds{};

  [[nodiscard]] double seconds_per_sweep() const;
};

[[nodiscard]] SampleStore run_chain(const TagDataset &data,
                                    const ChainConfig &config,
                                    std::uint64_t chain_index = 0);

// Independent chains on separate threads, chain c seeded by (seed, c).
[[nodiscard]] std::vector<SampleStore>
run_chains(const TagDataset &data, const ChainConfig &config,
           std::size_t n_chains);

}  // namespace tagbias

#endif
