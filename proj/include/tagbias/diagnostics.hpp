#ifndef TAGBIAS_DIAGNOSTICS_HPP
#define TAGBIAS_DIAGNOSTICS_HPP

#include "tagbias/gibbs.hpp"
#include "tagbias/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tagbias {

inline const std::vector<std::size_t> default_lags{10, 20, 40, 80};

// Sample autocorrelation: mean-centred lag-l autocovariance over the lag-0
// autocovariance (both divided by n). Throws std::invalid_argument if the
// series is too short and std::domain_error if it is constant.
[[nodiscard]] std::map<std::size_t, double>
autocorrelation(std::span<const double> series,
                std::span<const std::size_t> lags = default_lags);

// Quantile by linear interpolation between order statistics at position
// (n - 1) q of the sorted sample (Hyndman-Fan type 7).
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double q);
[[nodiscard]] double quantile(std::vector<double> values, double q);

struct SummaryRow {
  std::size_t rank{};  // 1 = largest tag count
  std::size_t index{}; // position in the dataset
  std::string id;
  std::uint64_t tag_count{};
  double mean{};
  double lower95{};
  double upper95{};
  double naive_mle{};
  double corrected_mle{};
  std::optional<double> mode;
};

struct PosteriorSummary {
  std::vector<SummaryRow> rows;
  std::size_t samples_used{};
  std::vector<std::string> warnings;
};

struct SummaryOptions {
  std::size_t top_n{20};
  std::size_t window{1000};  // final W retained samples; 0 uses all stored
  std::optional<CompositionVector> mode;
};

// Per-category posterior mean and 2.5/97.5% quantiles from the stored
// retained draws, alongside the naive and corrected MLEs, ordered by
// descending tag count (ties by dataset order).
[[nodiscard]] PosteriorSummary summarize(const SampleStore &store,
                                         const TagDataset &data,
                                         const SummaryOptions &options = {});

}  // namespace tagbias

#endif
