#include "tagbias/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace tagbias {

namespace {

std::vector<std::string>
split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string
trim(std::string s) {
  const auto first = s.find_first_not_of(" \r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
bool
parse_number(const std::string &s, T &value) {
  const auto *begin = s.data();
  const auto *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

bool
parse_double(const std::string &s, double &value) {
  if (s.empty())
    return false;
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  is >> value;
  return !is.fail() && is.eof();
}

std::string
format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

IngestResult
parse_dataset(std::istream &in, const std::string &source) {
  enum class Layout { none, phi, sites };
  Layout layout = Layout::none;
  IngestResult result;
  std::vector<GeneRecord> records;
  std::string line;
  std::size_t line_no = 0;

  const auto fail = [&](const std::string &msg) {
    throw FormatError(source + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (trim(line).empty() || line.front() == '#')
      continue;
    auto fields = split(line, '\t');
    for (auto &f : fields)
      f = trim(f);

    if (layout == Layout::none) {
      if (fields == std::vector<std::string>{"id", "count", "phi"})
        layout = Layout::phi;
      else if (fields == std::vector<std::string>{"id", "count", "p", "sites",
                                                  "ambiguous"})
        layout = Layout::sites;
      else
        fail("expected header 'id\\tcount\\tphi' or "
             "'id\\tcount\\tp\\tsites\\tambiguous'");
      continue;
    }

    GeneRecord rec;
    if (layout == Layout::sites && fields.size() == 4)
      fields.emplace_back();  // empty ambiguous list
    const std::size_t expected = layout == Layout::phi ? 3 : 5;
    if (fields.size() != expected)
      fail("expected " + std::to_string(expected) + " fields, found " +
           std::to_string(fields.size()));
    rec.id = fields[0];
    if (rec.id.empty())
      fail("empty id");
    if (!parse_number(fields[1], rec.tag_count))
      fail("count is not a nonnegative integer: '" + fields[1] + "'");

    if (layout == Layout::phi) {
      if (!parse_double(fields[2], rec.phi))
        fail("phi is not a number: '" + fields[2] + "'");
    }
    else {
      SiteSpec spec;
      if (!parse_double(fields[2], spec.p))
        fail("p is not a number: '" + fields[2] + "'");
      if (!parse_number(fields[3], spec.num_sites))
        fail("sites is not a nonnegative integer: '" + fields[3] + "'");
      if (!fields[4].empty())
        for (const auto &tok : split(fields[4], ',')) {
          std::uint32_t j{};
          if (!parse_number(trim(tok), j))
            fail("bad ambiguous site index: '" + tok + "'");
          spec.ambiguous.push_back(j);
        }
      try {
        rec.phi = compute_phi(spec);
      }
      catch (const std::exception &e) {
        fail(e.what());
      }
    }

    if (!(rec.phi >= 0.0 && rec.phi <= 1.0))
      fail("phi outside [0,1] for " + rec.id);
    if (rec.phi == 0.0) {
      if (rec.tag_count > 0)
        fail("category " + rec.id + " has tags but tag formation probability 0");
      result.warnings.push_back(source + ":" + std::to_string(line_no) +
                                ": dropped unobservable category " + rec.id);
      continue;
    }
    records.push_back(std::move(rec));
  }
  if (layout == Layout::none)
    throw FormatError(source + ": missing header line");
  try {
    result.data = TagDataset(std::move(records));
  }
  catch (const std::invalid_argument &e) {
    throw FormatError(source + ": " + e.what());
  }
  return result;
}

IngestResult
ingest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open " + path.string());
  return parse_dataset(in, path.string());
}

void
write_dataset(std::ostream &out, const TagDataset &data) {
  out << "id\tcount\tphi\n";
  for (const auto &r : data.records())
    out << r.id << '\t' << r.tag_count << '\t' << format_double(r.phi) << '\n';
}

void
write_file_atomic(const std::filesystem::path &path, const std::string &content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string
sha256_hex(const std::string &bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0')
       << static_cast<int>(digest[i]);
  return os.str();
}

std::string
sha256_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

nlohmann::json
config_to_json(const ChainConfig &c) {
  nlohmann::json j;
  j["model"] = std::string(to_string(c.model));
  j["alpha"] = c.hyper.alpha;
  j["gamma1"] = c.hyper.gamma1;
  j["gamma2"] = c.hyper.gamma2;
  j["lambda"] = c.hyper.lambda;
  j["mu"] = c.hyper.mu;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["seed"] = c.seed;
  j["traced_categories"] = c.traced_categories;
  j["store_window"] = c.store_window;
  j["check_every_sweep"] = c.check_every_sweep;
  return j;
}

ChainConfig
config_from_json(const nlohmann::json &j) {
  ChainConfig c;
  c.model = parse_model(j.at("model").get<std::string>());
  c.hyper.alpha = j.at("alpha").get<std::vector<double>>();
  c.hyper.gamma1 = j.at("gamma1").get<double>();
  c.hyper.gamma2 = j.at("gamma2").get<double>();
  c.hyper.lambda = j.at("lambda").get<double>();
  c.hyper.mu = j.at("mu").get<double>();
  c.iterations = j.at("iterations").get<std::uint64_t>();
  c.burn_in = j.at("burn_in").get<std::uint64_t>();
  c.thin = j.at("thin").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.traced_categories = j.at("traced_categories").get<std::vector<std::string>>();
  c.store_window = j.value("store_window", std::uint64_t{0});
  c.check_every_sweep = j.value("check_every_sweep", false);
  return c;
}

void
write_archive(std::ostream &out, const SampleStore &store,
              const TagDataset &data, bool store_full) {
  out << "#tagbias-samples\t1\n";
  out << "#config\t" << config_to_json(store.config).dump() << '\n';
  out << "#mu\t" << format_double(store.mu) << '\n';
  out << "#trace_name\t" << store.trace_name << '\n';
  out << "#retained_count\t" << store.retained_count << '\n';
  out << "#first_stored\t" << store.first_stored << '\n';
  out << "#invariant_checks\t" << store.invariant_checks << '\n';
  out << "#wall_seconds\t" << format_double(store.wall_seconds) << '\n';
  out << "#burn_in_seconds\t" << format_double(store.burn_in_seconds) << '\n';
  out << "#sampling_seconds\t" << format_double(store.sampling_seconds) << '\n';

  out << "sample\t" << store.trace_name;
  for (const auto &id : store.config.traced_categories)
    out << "\ttrace:" << id;
  if (store_full)
    for (const auto &r : data.records())
      out << "\tm:" << r.id;
  out << '\n';

  for (std::uint64_t s = 0; s < store.retained_count; ++s) {
    out << (s + 1) << '\t' << format_double(store.trace[s]);
    for (const auto &series : store.trace_focal)
      out << '\t' << format_double(series[s]);
    if (store_full) {
      if (s >= store.first_stored) {
        for (const double x : store.retained_m[s - store.first_stored])
          out << '\t' << format_double(x);
      }
      else {
        for (std::size_t i = 0; i < data.size(); ++i)
          out << "\tNA";
      }
    }
    out << '\n';
  }
}

Archive
read_archive(std::istream &in, const std::string &source) {
  Archive a;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string &msg) {
    throw FormatError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  std::map<std::string, std::string> meta;
  bool have_header = false;
  std::size_t n_focal = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    if (line.front() == '#') {
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        fail("malformed metadata line");
      meta[line.substr(1, tab - 1)] = line.substr(tab + 1);
      continue;
    }
    const auto fields = split(line, '\t');
    if (!have_header) {
      if (meta["tagbias-samples"] != "1")
        fail("not a version 1 sample archive");
      try {
        a.store.config = config_from_json(nlohmann::json::parse(meta.at("config")));
        a.store.mu = std::stod(meta.at("mu"));
        a.store.trace_name = meta.at("trace_name");
        a.store.wall_seconds = std::stod(meta.at("wall_seconds"));
        a.store.burn_in_seconds = std::stod(meta.at("burn_in_seconds"));
        a.store.sampling_seconds = std::stod(meta.at("sampling_seconds"));
        a.store.invariant_checks = std::stoull(meta.at("invariant_checks"));
      }
      catch (const std::exception &e) {
        fail(std::string("bad archive metadata: ") + e.what());
      }
      if (fields.size() < 2 || fields[0] != "sample")
        fail("missing column header");
      for (std::size_t c = 2; c < fields.size(); ++c) {
        if (fields[c].rfind("trace:", 0) == 0)
          a.traced_ids.push_back(fields[c].substr(6));
        else if (fields[c].rfind("m:", 0) == 0)
          a.composition_ids.push_back(fields[c].substr(2));
        else
          fail("unknown column " + fields[c]);
      }
      n_focal = a.traced_ids.size();
      a.store.trace_focal.assign(n_focal, {});
      have_header = true;
      continue;
    }
    if (fields.size() != 2 + n_focal + a.composition_ids.size())
      fail("wrong number of columns");
    double x{};
    if (!parse_double(fields[1], x))
      fail("bad trace value");
    a.store.trace.push_back(x);
    for (std::size_t j = 0; j < n_focal; ++j) {
      if (!parse_double(fields[2 + j], x))
        fail("bad traced value");
      a.store.trace_focal[j].push_back(x);
    }
    if (!a.composition_ids.empty() && fields[2 + n_focal] != "NA") {
      std::vector<double> m(a.composition_ids.size());
      for (std::size_t i = 0; i < m.size(); ++i)
        if (!parse_double(fields[2 + n_focal + i], m[i]))
          fail("bad composition value");
      if (a.store.retained_m.empty())
        a.store.first_stored = a.store.trace.size() - 1;
      a.store.retained_m.push_back(std::move(m));
    }
  }
  if (!have_header)
    throw FormatError(source + ": empty archive");
  a.store.retained_count = a.store.trace.size();
  if (a.store.retained_m.empty())
    a.store.first_stored = a.store.retained_count;
  return a;
}

nlohmann::json
report_to_json(const RunReport &report) {
  using nlohmann::json;
  json j;
  j["schema"] = "tagbias.report";
  j["version"] = report_schema_version;
  j["command"] = report.command;
  j["config"] = report.config;
  j["provenance"] = {{"input", report.input_path},
                     {"sha256", report.input_sha256},
                     {"seed", report.seed}};
  json timings = json::object();
  for (const auto &[phase, secs] : report.timings)
    timings[phase] = secs;
  j["timings"] = timings;

  json acf = json::object();
  for (const auto &[series, table] : report.autocorrelation) {
    json rows = json::array();
    for (const auto &[lag, value] : table)
      rows.push_back({{"lag", lag}, {"acf", value}});
    acf[series] = rows;
  }
  j["diagnostics"] = {{"trace", report.trace_name}, {"autocorrelation", acf}};

  json rows = json::array();
  for (const auto &r : report.summary.rows) {
    json row = {{"rank", r.rank},
                {"id", r.id},
                {"tag_count", r.tag_count},
                {"naive_mle", r.naive_mle},
                {"corrected_mle", r.corrected_mle},
                {"post_mean", r.mean},
                {"lower95", r.lower95},
                {"upper95", r.upper95}};
    row["post_mode"] = r.mode ? json(*r.mode) : json(nullptr);
    rows.push_back(std::move(row));
  }
  j["summary"] = {{"samples_used", report.summary.samples_used},
                  {"warnings", report.summary.warnings},
                  {"rows", rows}};
  return j;
}

std::string
plot_csv(const PosteriorSummary &summary, bool have_interval, bool have_mean) {
  std::ostringstream os;
  os << "rank,id,naive_mle,corrected_mle,post_mean,post_mode,lower95,upper95\n";
  for (const auto &r : summary.rows) {
    os << r.rank << ',' << r.id << ',' << format_double(r.naive_mle) << ','
       << format_double(r.corrected_mle) << ',';
    if (have_mean)
      os << format_double(r.mean);
    os << ',';
    if (r.mode)
      os << format_double(*r.mode);
    os << ',';
    if (have_interval)
      os << format_double(r.lower95) << ',' << format_double(r.upper95);
    else
      os << ',';
    os << '\n';
  }
  return os.str();
}

}  // namespace tagbias
