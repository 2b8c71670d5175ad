#include "tagbias/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tagbias {

std::map<std::size_t, double>
autocorrelation(std::span<const double> series,
                std::span<const std::size_t> lags) {
  const std::size_t max_lag =
      lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end());
  const std::size_t n = series.size();
  if (n <= max_lag + 2)
    throw std::invalid_argument("series too short for the requested lags");

  const double mean =
      std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = series[i] - mean;
    c0 += centred[i] * centred[i];
  }
  if (!(c0 > 0.0))
    throw std::domain_error("zero-variance series has no autocorrelation");

  std::map<std::size_t, double> out;
  for (const std::size_t lag : lags) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      c += centred[i] * centred[i + lag];
    out[lag] = c / c0;
  }
  return out;
}

double
quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile level outside [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double
quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

PosteriorSummary
summarize(const SampleStore &store, const TagDataset &data,
          const SummaryOptions &options) {
  if (store.retained_m.empty())
    throw std::invalid_argument("sample store holds no compositions");
  const std::size_t k = data.size();
  PosteriorSummary summary;

  const std::size_t stored = store.retained_m.size();
  const std::size_t used =
      options.window == 0 ? stored : std::min(options.window, stored);
  const std::size_t first = stored - used;
  summary.samples_used = used;
  if (options.window > stored)
    summary.warnings.push_back("window " + std::to_string(options.window) +
                               " exceeds the " + std::to_string(stored) +
                               " stored samples; using all of them");

  std::size_t top_n = options.top_n;
  if (top_n > k) {
    summary.warnings.push_back("top_n " + std::to_string(top_n) +
                               " clamped to " + std::to_string(k));
    top_n = k;
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].tag_count > data[b].tag_count;
  });
  order.resize(top_n);

  const bool have_tags = data.total_tags() > 0;
  const auto naive = have_tags ? naive_mle(data) : CompositionVector{};
  const auto corrected = have_tags ? corrected_mle(data) : CompositionVector{};

  std::vector<double> column(used);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t i = order[rank];
    if (store.retained_m[first].size() != k)
      throw std::invalid_argument("sample width does not match the dataset");
    double total = 0.0;
    for (std::size_t s = 0; s < used; ++s) {
      column[s] = store.retained_m[first + s][i];
      total += column[s];
    }
    SummaryRow row;
    row.rank = rank + 1;
    row.index = i;
    row.id = data[i].id;
    row.tag_count = data[i].tag_count;
    row.mean = total / static_cast<double>(used);
    std::sort(column.begin(), column.end());
    row.lower95 = quantile_sorted(column, 0.025);
    row.upper95 = quantile_sorted(column, 0.975);
    // the mean of a sample lies within its range but not always inside the
    // central 95%; flag rather than fail
    const double slack = 1e-12 * std::abs(row.mean);
    if (!(row.lower95 - slack <= row.mean && row.mean <= row.upper95 + slack))
      summary.warnings.push_back("posterior mean outside 95% bounds for " +
                                 row.id);
    row.naive_mle = have_tags ? naive[i] : 0.0;
    row.corrected_mle = have_tags ? corrected[i] : 0.0;
    if (options.mode)
      row.mode = (*options.mode)[i];
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

}  // namespace tagbias
