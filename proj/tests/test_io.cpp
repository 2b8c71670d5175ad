#include "support.hpp"

#include "tagbias/io.hpp"
#include "tagbias/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tagbias;
using namespace tagbias::test;
namespace fs = std::filesystem;

namespace {

IngestResult
parse(const std::string &text) {
  std::istringstream in(text);
  return parse_dataset(in, "mem");
}

fs::path
scratch_dir() {
  auto dir = fs::temp_directory_path() / "tagbias_io_test";
  fs::create_directories(dir);
  return dir;
}

std::string
slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("phi layout") {
  const auto res = parse("# library A\n"
                         "id\tcount\tphi\n"
                         "g1\t5\t0.5\n"
                         "g2\t0\t1\n"
                         "g3\t12\t0.25\r\n");
  REQUIRE(res.data.size() == 3);
  CHECK(res.data.total_tags() == 17);
  CHECK(res.data[2].id == "g3");
  CHECK(res.data[2].phi == 0.25);
  CHECK(res.warnings.empty());
}

TEST_CASE("site layout computes phi") {
  // p = 0.1, 3 sites, site 2 ambiguous: 0.1 + 0.9^2 * 0.1 = 0.181
  const auto res = parse("id\tcount\tp\tsites\tambiguous\n"
                         "g1\t4\t0.1\t3\t2\n"
                         "g2\t1\t0.5\t1\t\n"
                         "g3\t1\t0.5\t2\n");
  REQUIRE(res.data.size() == 3);
  CHECK(res.data[0].phi == doctest::Approx(0.181).epsilon(1e-14));
  CHECK(res.data[1].phi == 0.5);
  CHECK(res.data[2].phi == doctest::Approx(0.75));
}

TEST_CASE("unobservable categories") {
  const auto dropped = parse("id\tcount\tphi\ng1\t0\t0\ng2\t3\t0.5\n");
  CHECK(dropped.data.size() == 1);
  REQUIRE(dropped.warnings.size() == 1);
  CHECK(dropped.warnings[0].find("g1") != std::string::npos);

  try {
    (void)parse("id\tcount\tphi\ng1\t5\t0\n");
    FAIL("expected a format error");
  }
  catch (const FormatError &e) {
    CHECK(std::string(e.what()).rfind("mem:2:", 0) == 0);
  }

  // every site ambiguous gives phi = 0 with tags
  CHECK_THROWS_AS((void)parse("id\tcount\tp\tsites\tambiguous\n"
                              "g1\t2\t0.3\t2\t1,2\n"),
                  FormatError);
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS((void)parse(""), FormatError);
  CHECK_THROWS_AS((void)parse("name\tn\n"), FormatError);
  CHECK_THROWS_AS((void)parse("id\tcount\tphi\ng1\t-2\t0.5\n"), FormatError);
  CHECK_THROWS_AS((void)parse("id\tcount\tphi\ng1\t2\tx\n"), FormatError);
  CHECK_THROWS_AS((void)parse("id\tcount\tphi\ng1\t2\n"), FormatError);
  CHECK_THROWS_AS((void)parse("id\tcount\tphi\ng1\t2\t1.5\n"), FormatError);
  CHECK_THROWS_AS((void)parse("id\tcount\tphi\ng1\t2\t.5\ng1\t1\t.5\n"),
                  FormatError);
  CHECK_THROWS_AS((void)parse("id\tcount\tp\tsites\tambiguous\n"
                              "g1\t2\t0.3\t2\t5\n"),
                  FormatError);
  CHECK_THROWS_AS((void)ingest("/nonexistent/file.tsv"), FormatError);
}

TEST_CASE("simulate, write, ingest round trip") {
  SimSpec spec;
  spec.m_true = CompositionVector({0.1, 0.2, 0.3, 0.4});
  spec.phi = {0.123456789012345, 1.0, 0.3, 1.0 / 3.0};
  spec.population = FixedPopulation{500};
  spec.seed = 9;
  const auto sim = simulate_dataset(spec);

  const auto path = scratch_dir() / "roundtrip.tsv";
  std::ostringstream os;
  write_dataset(os, sim.data);
  write_file_atomic(path, os.str());
  const auto back = ingest(path);
  CHECK(back.data == sim.data);
  CHECK(slurp(path) == os.str());
  CHECK(sha256_file(path) == sha256_hex(os.str()));
}

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config JSON round trip") {
  ChainConfig c;
  c.model = Model::dpb;
  c.hyper.alpha = {0.5, 0.25};
  c.hyper.gamma1 = 3.0;
  c.hyper.mu = 12.5;
  c.iterations = 999;
  c.burn_in = 9;
  c.thin = 3;
  c.seed = 18446744073709551615ULL;
  c.traced_categories = {"a"};
  c.store_window = 4;
  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.seed == c.seed);
  CHECK(back.model == Model::dpb);
}

TEST_CASE("sample archive round trip") {
  const auto data = make_data({3, 1, 0}, {1.0, 0.5, 0.25});
  ChainConfig c;
  c.model = Model::md;
  c.hyper.alpha = broadcast_alpha(1.0, 3);
  c.iterations = 300;
  c.burn_in = 100;
  c.thin = 10;
  c.traced_categories = {"c1", "c3"};
  c.store_window = 5;
  const auto store = run_chain(data, c);

  for (const bool full : {false, true}) {
    CAPTURE(full);
    std::stringstream ss;
    write_archive(ss, store, data, full);
    const auto arc = read_archive(ss);
    CHECK(arc.traced_ids == std::vector<std::string>{"c1", "c3"});
    CHECK(arc.store.trace_name == "r");
    CHECK(arc.store.mu == store.mu);
    CHECK(arc.store.retained_count == 20);
    CHECK(arc.store.trace == store.trace);
    CHECK(arc.store.trace_focal == store.trace_focal);
    CHECK(config_to_json(arc.store.config) == config_to_json(c));
    if (full) {
      CHECK(arc.composition_ids == std::vector<std::string>{"c1", "c2", "c3"});
      CHECK(arc.store.first_stored == 15);
      CHECK(arc.store.retained_m == store.retained_m);
    }
    else {
      CHECK(arc.composition_ids.empty());
      CHECK(arc.store.retained_m.empty());
    }
  }

  std::istringstream bad("#tagbias-samples\t7\n");
  CHECK_THROWS_AS((void)read_archive(bad), FormatError);
}

TEST_CASE("report JSON matches the frozen schema") {
  RunReport r;
  r.command = "sample";
  ChainConfig c;
  c.hyper.alpha = {1.0, 1.0};
  c.iterations = 10;
  c.burn_in = 2;
  c.thin = 1;
  r.config = config_to_json(c);
  r.input_path = "lib.tsv";
  r.input_sha256 = sha256_hex("id\tcount\tphi\n");
  r.seed = 1;
  r.trace_name = "r";
  r.autocorrelation["r"] = {{10, 0.5}, {20, 0.25}};
  r.timings = {{"burn_in", 0.5}, {"sampling", 1.5}, {"total", 2.0}};
  SummaryRow row;
  row.rank = 1;
  row.index = 0;
  row.id = "g1";
  row.tag_count = 3;
  row.mean = 0.625;
  row.lower95 = 0.25;
  row.upper95 = 0.875;
  row.naive_mle = 0.75;
  row.corrected_mle = 0.5;
  r.summary.rows.push_back(row);
  row.rank = 2;
  row.id = "g2";
  row.mode = 0.125;
  r.summary.rows.push_back(row);
  r.summary.samples_used = 8;
  r.summary.warnings = {"top_n 20 clamped to 2"};

  const auto produced = report_to_json(r);
  std::ifstream in(fs::path(TAGBIAS_GOLDEN_DIR) / "report_v1.json");
  REQUIRE(in);
  const auto golden = nlohmann::json::parse(in);
  CHECK(produced == golden);
  CHECK(produced.at("version") == report_schema_version);
}

TEST_CASE("plot csv") {
  PosteriorSummary s;
  SummaryRow row;
  row.rank = 1;
  row.id = "g1";
  row.naive_mle = 0.5;
  row.corrected_mle = 0.25;
  row.mean = 0.375;
  row.lower95 = 0.125;
  row.upper95 = 0.625;
  s.rows.push_back(row);
  CHECK(plot_csv(s) ==
        "rank,id,naive_mle,corrected_mle,post_mean,post_mode,lower95,upper95\n"
        "1,g1,0.5,0.25,0.375,,0.125,0.625\n");
  s.rows[0].mode = 0.5;
  CHECK(plot_csv(s, false, false) ==
        "rank,id,naive_mle,corrected_mle,post_mean,post_mode,lower95,upper95\n"
        "1,g1,0.5,0.25,,0.5,,\n");
}
