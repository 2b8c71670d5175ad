#ifndef TAGBIAS_TEST_SUPPORT_HPP
#define TAGBIAS_TEST_SUPPORT_HPP

// Helpers shared by the unit and acceptance suites.

#include "tagbias/model.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagbias::test {

inline TagDataset
make_data(const std::vector<std::uint64_t> &counts,
          const std::vector<double> &phi) {
  std::vector<GeneRecord> recs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    recs[i] = {"c" + std::to_string(i + 1), counts[i], phi[i]};
  return TagDataset(std::move(recs));
}

inline double
mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double
sd_of(std::span<const double> x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (const double v : x)
    ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Monte-Carlo standard error of the mean by non-overlapping batch means
// (sqrt(n) batches), which stays valid for autocorrelated chains.
inline double
batch_means_se(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t len = n / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b)
    means[b] = mean_of(x.subspan(b * len, len));
  return sd_of(means) / std::sqrt(static_cast<double>(batches));
}

inline std::vector<double>
column(const std::vector<std::vector<double>> &rows, std::size_t i) {
  std::vector<double> out(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s)
    out[s] = rows[s][i];
  return out;
}

}  // namespace tagbias::test

#endif
