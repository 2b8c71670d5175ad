#ifndef TAGBIAS_MODE_HPP
#define TAGBIAS_MODE_HPP

// Deterministic point estimators: Lindley-Smith conditional maximization
// for the DPB model, the analogous alternation for the missing-data model,
// and the reweighted missing-data posterior mean.

#include "tagbias/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tagbias {

enum class OptimizerStatus { converged, cycled, max_iter, failed };

[[nodiscard]] std::string to_string(OptimizerStatus status);

struct OptimizerResult {
  CompositionVector m;          // normalized estimate
  std::vector<double> m_raw;    // fixed point as iterated (DPB: need not sum to 1)
  std::vector<std::uint64_t> g; // DPB latent counts
  double N{};                   // DPB population size
  std::uint64_t r{};            // MD untagged count
  std::uint64_t iterations_used{};
  double final_residual{};      // L1 change of the last update
  OptimizerStatus status{OptimizerStatus::failed};
  std::string diagnostic;

  [[nodiscard]] bool ok() const {
    return status == OptimizerStatus::converged ||
           status == OptimizerStatus::cycled;
  }
};

// Algorithm:
//   m_i <- (g_i + alpha_i) / N
//   g_i <- t_i + floor(N m_i (1 - phi_i))
//   N   <- (sum g_i + gamma1) / (1 + gamma2)
// until sum |m_new - m_old| <= tol. Starts from m = corrected MLE,
// N = sum t_i / phi_i and g at its conditional maximizer given those.
// Integer g can cycle; cycles of period <= 4 end the search with the member
// of highest posterior kernel (status cycled).
[[nodiscard]] OptimizerResult
dpb_lindley_smith(const TagDataset &data, const Hyperparams &hyper,
                  double tol = 1e-5, std::uint64_t max_iter = 10000);

// Alternates r <- floor(v_0 mu) and
// v_i <- max(t_i + alpha_i - 1, 0) / (sum(alpha + t) + r - k)
// until the L1 change in (v_0, v) is <= tol; m_i is proportional to v_i/phi_i.
[[nodiscard]] OptimizerResult
md_mode_iteration(const TagDataset &data, std::span<const double> alpha,
                  double mu, double tol = 1e-10,
                  std::uint64_t max_iter = 10000);

// (w_i / phi_i) normalized, w_i = (alpha_i + t_i) / sum(alpha + t).
[[nodiscard]] CompositionVector md_exact_mean(const TagDataset &data,
                                              std::span<const double> alpha);

struct GammaSelection {
  double gamma1{};
  double gamma2{};
  double distance{};  // L1 between raw Lindley-Smith m and the target
  OptimizerResult result;
};

// Grid search over (gamma1, gamma2) for the pair whose raw Lindley-Smith
// fixed point is closest in L1 to `target` (usually the analytical mode,
// i.e. the corrected MLE for alpha = 1). Non-converging pairs are skipped;
// returns nullopt if none converge.
[[nodiscard]] std::optional<GammaSelection>
select_dpb_gammas(const TagDataset &data, std::span<const double> alpha,
                  const CompositionVector &target,
                  std::span<const double> gamma1_grid,
                  std::span<const double> gamma2_grid, double tol = 1e-5,
                  std::uint64_t max_iter = 10000);

}  // namespace tagbias

#endif
