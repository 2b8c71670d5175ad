#ifndef TAGBIAS_IO_HPP
#define TAGBIAS_IO_HPP

// File formats.
//
// Dataset TSV (UTF-8, '#' starts a comment line). The first non-comment
// line is a header naming one of two layouts:
//
//   id<TAB>count<TAB>phi
//   id<TAB>count<TAB>p<TAB>sites<TAB>ambiguous
//
// `ambiguous` is a comma-separated list of 1-based site indices and may be
// empty. In the second layout phi is computed from the site model.
//
// Sample archive TSV: '#key<TAB>value' header lines (format version, JSON
// config echo, resolved mu, trace name, counts, timings), then a column
// header and one row per retained sample holding the scalar trace, the
// traced categories and, optionally, the full composition ("NA" where a
// windowed store no longer holds it).

#include "tagbias/diagnostics.hpp"
#include "tagbias/gibbs.hpp"
#include "tagbias/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace tagbias {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct IngestResult {
  TagDataset data;
  std::vector<std::string> warnings;
};

// Rows with phi = 0 and no tags are dropped with a warning; phi = 0 with
// tags is an error. Errors carry "<source>:<line>: ".
[[nodiscard]] IngestResult parse_dataset(std::istream &in,
                                         const std::string &source = "<input>");
[[nodiscard]] IngestResult ingest(const std::filesystem::path &path);

void write_dataset(std::ostream &out, const TagDataset &data);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path &path,
                       const std::string &content);

[[nodiscard]] std::string sha256_hex(const std::string &bytes);
[[nodiscard]] std::string sha256_file(const std::filesystem::path &path);

[[nodiscard]] nlohmann::json config_to_json(const ChainConfig &config);
[[nodiscard]] ChainConfig config_from_json(const nlohmann::json &j);

void write_archive(std::ostream &out, const SampleStore &store,
                   const TagDataset &data, bool store_full);

struct Archive {
  SampleStore store;
  std::vector<std::string> traced_ids;
  // m columns ids when the archive carries full compositions
  std::vector<std::string> composition_ids;
};

[[nodiscard]] Archive read_archive(std::istream &in,
                                   const std::string &source = "<archive>");

inline constexpr int report_schema_version = 1;

struct RunReport {
  std::string command;
  nlohmann::json config;
  std::string input_path;
  std::string input_sha256;
  std::uint64_t seed{};
  std::string trace_name;
  // series name -> lag -> autocorrelation
  std::map<std::string, std::map<std::size_t, double>> autocorrelation;
  // phase name -> seconds
  std::map<std::string, double> timings;
  PosteriorSummary summary;
};

[[nodiscard]] nlohmann::json report_to_json(const RunReport &report);

// Tidy plot data: rank,id,naive_mle,corrected_mle,post_mean,post_mode,
// lower95,upper95 (empty cells where a column does not apply).
[[nodiscard]] std::string plot_csv(const PosteriorSummary &summary,
                                   bool have_interval = true,
                                   bool have_mean = true);

}  // namespace tagbias

#endif
