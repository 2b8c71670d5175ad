// tagbias: composition estimates for categories observed through a known,
// category-dependent tagging probability.
//
//   tagbias estimate --data d.tsv --out est
//   tagbias sample   --data d.tsv --model md --alpha 1/k --out run
//   tagbias diagnose --archive run.samples.tsv --lags 10,20,40,80
//   tagbias simulate --paper-scale --seed 7 --out fixture.tsv

#include "tagbias/diagnostics.hpp"
#include "tagbias/gibbs.hpp"
#include "tagbias/io.hpp"
#include "tagbias/mode.hpp"
#include "tagbias/model.hpp"
#include "tagbias/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tagbias;

namespace {

std::vector<double>
parse_alpha(const std::string &spec, std::size_t k) {
  if (spec == "1/k")
    return broadcast_alpha(1.0 / static_cast<double>(k), k);
  if (!spec.empty() && spec.front() == '@') {
    std::ifstream in(spec.substr(1));
    if (!in)
      throw std::runtime_error("cannot open alpha file " + spec.substr(1));
    std::vector<double> alpha;
    double x{};
    while (in >> x)
      alpha.push_back(x);
    if (alpha.size() != k)
      throw std::runtime_error("alpha file has " + std::to_string(alpha.size()) +
                               " values for " + std::to_string(k) +
                               " categories");
    return alpha;
  }
  std::size_t used = 0;
  const double a = std::stod(spec, &used);
  if (used != spec.size())
    throw std::runtime_error("bad --alpha value: " + spec);
  return broadcast_alpha(a, k);
}

std::vector<std::size_t>
parse_lags(const std::string &s) {
  std::vector<std::size_t> lags;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const long v = std::stol(tok);
    if (v <= 0)
      throw std::runtime_error("lags must be positive");
    lags.push_back(static_cast<std::size_t>(v));
  }
  return lags;
}

std::vector<std::string>
parse_ids(const std::string &s) {
  std::vector<std::string> ids;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty())
      ids.push_back(tok);
  return ids;
}

IngestResult
load(const std::string &path) {
  auto res = ingest(path);
  for (const auto &w : res.warnings)
    std::cerr << "warning: " << w << '\n';
  return res;
}

void
print_rows(const PosteriorSummary &summary) {
  std::printf("%5s  %-14s %7s %12s %12s %12s %12s %12s %12s\n", "rank", "id",
              "count", "naive", "corrected", "mean", "mode", "lower95",
              "upper95");
  for (const auto &r : summary.rows) {
    std::printf("%5zu  %-14s %7llu %12.6g %12.6g %12.6g ", r.rank, r.id.c_str(),
                static_cast<unsigned long long>(r.tag_count), r.naive_mle,
                r.corrected_mle, r.mean);
    if (r.mode)
      std::printf("%12.6g ", *r.mode);
    else
      std::printf("%12s ", "-");
    std::printf("%12.6g %12.6g\n", r.lower95, r.upper95);
  }
}

struct CommonOptions {
  std::string data;
  std::string alpha{"1"};
  double gamma1{100.0};
  double gamma2{0.005};
  double lambda{20000.0};
  double mu{0.0};
  std::size_t top_n{20};
  std::string out;
};

void
add_hyper_options(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--data", o.data, "dataset TSV")->required();
  cmd->add_option("--alpha", o.alpha,
                  "Dirichlet prior: a number, 1/k, or @file (one value per line)")
      ->capture_default_str();
  cmd->add_option("--gamma1", o.gamma1, "DPB gamma shape on N")
      ->capture_default_str();
  cmd->add_option("--gamma2", o.gamma2, "DPB gamma rate on N (scale 1/gamma2)")
      ->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "DMB Poisson mean of N (recorded only)")
      ->capture_default_str();
  cmd->add_option("--mu", o.mu,
                  "MD Poisson mean of the untagged count; 0 derives "
                  "T_tot (1 - s) / s from the corrected MLE")
      ->capture_default_str();
  cmd->add_option("--top-n", o.top_n, "categories reported, by tag count")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "output path prefix")->required();
}

Hyperparams
make_hyper(const CommonOptions &o, std::size_t k) {
  Hyperparams h;
  h.alpha = parse_alpha(o.alpha, k);
  h.gamma1 = o.gamma1;
  h.gamma2 = o.gamma2;
  h.lambda = o.lambda;
  h.mu = o.mu;
  h.validate(k);
  return h;
}

void
print_repro(const std::string &line) {
  std::cout << "# reproduce: " << line << '\n';
}

int
cmd_estimate(const CommonOptions &o, bool modes, const std::string &mode_from,
             double tol, std::uint64_t max_iter) {
  const auto loaded = load(o.data);
  const auto &data = loaded.data;
  const auto hyper = make_hyper(o, data.size());
  int status = 0;

  const auto t0 = std::chrono::steady_clock::now();
  const auto naive = naive_mle(data);
  const auto corrected = corrected_mle(data);
  const auto mean = md_exact_mean(data, hyper.alpha);

  nlohmann::json estimators;
  std::optional<CompositionVector> mode;
  if (modes) {
    const double mu = resolve_mu(data, hyper);
    const auto md = md_mode_iteration(data, hyper.alpha, mu, 1e-10, max_iter);
    const auto ls = dpb_lindley_smith(data, hyper, tol, max_iter);
    estimators["md_mode"] = {{"status", to_string(md.status)},
                             {"iterations", md.iterations_used},
                             {"residual", md.final_residual},
                             {"r", md.r},
                             {"mu", mu},
                             {"diagnostic", md.diagnostic}};
    estimators["dpb_mode"] = {{"status", to_string(ls.status)},
                              {"iterations", ls.iterations_used},
                              {"residual", ls.final_residual},
                              {"N", ls.N},
                              {"diagnostic", ls.diagnostic}};
    const auto &chosen = mode_from == "dpb" ? ls : md;
    if (!md.ok() || !ls.ok()) {
      std::cerr << "error: mode search did not converge (md: "
                << to_string(md.status) << ", dpb: " << to_string(ls.status)
                << ")\n";
      status = 2;
    }
    if (chosen.ok() || chosen.status == OptimizerStatus::max_iter)
      mode = chosen.m;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // rows ordered by tag count, as in the sampled summaries
  PosteriorSummary summary;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return data[a].tag_count > data[b].tag_count;
  });
  order.resize(std::min(o.top_n, data.size()));
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto i = order[rank];
    SummaryRow row;
    row.rank = rank + 1;
    row.index = i;
    row.id = data[i].id;
    row.tag_count = data[i].tag_count;
    row.naive_mle = naive[i];
    row.corrected_mle = corrected[i];
    row.mean = mean[i];
    row.lower95 = row.upper95 = std::numeric_limits<double>::quiet_NaN();
    if (mode)
      row.mode = (*mode)[i];
    summary.rows.push_back(std::move(row));
  }

  RunReport report;
  report.command = "estimate";
  report.config = {{"alpha", hyper.alpha.front()},
                   {"alpha_spec", o.alpha},
                   {"gamma1", hyper.gamma1},
                   {"gamma2", hyper.gamma2},
                   {"mu", hyper.mu},
                   {"modes", modes},
                   {"mode_from", mode_from},
                   {"tol", tol},
                   {"max_iter", max_iter}};
  report.input_path = o.data;
  report.input_sha256 = sha256_file(o.data);
  report.timings["estimate_seconds"] = elapsed;
  report.summary = summary;
  auto j = report_to_json(report);
  j["estimators"] = estimators;
  j["natural_population_estimate"] = natural_population_estimate(data);
  for (auto &row : j["summary"]["rows"]) {
    row["lower95"] = nullptr;
    row["upper95"] = nullptr;
  }

  write_file_atomic(o.out + ".csv", plot_csv(summary, false, true));
  write_file_atomic(o.out + ".json", j.dump(2) + "\n");
  print_rows(summary);
  print_repro("tagbias estimate --data " + o.data + " --alpha " + o.alpha +
              (modes ? " --modes --mode-from " + mode_from : "") + " --out " +
              o.out);
  return status;
}

struct SampleOptions {
  std::string model{"md"};
  std::uint64_t iterations{500000};
  std::uint64_t burn_in{40000};
  std::uint64_t thin{100};
  std::uint64_t seed{1};
  std::string trace;
  std::size_t window{1000};
  bool store_full{false};
  bool modes{false};
  std::string lags{"10,20,40,80"};
};

int
cmd_sample(const CommonOptions &o, const SampleOptions &s) {
  const auto loaded = load(o.data);
  const auto &data = loaded.data;

  ChainConfig config;
  config.model = parse_model(s.model);
  config.hyper = make_hyper(o, data.size());
  config.iterations = s.iterations;
  config.burn_in = s.burn_in;
  config.thin = s.thin;
  config.seed = s.seed;
  config.traced_categories = parse_ids(s.trace);
  config.store_window = s.store_full ? 0 : s.window;

  const auto store = run_chain(data, config);

  SummaryOptions opts;
  opts.top_n = o.top_n;
  opts.window = s.window;
  int status = 0;
  if (s.modes) {
    const auto md = md_mode_iteration(data, config.hyper.alpha,
                                      resolve_mu(data, config.hyper));
    if (!md.ok()) {
      std::cerr << "error: mode iteration " << to_string(md.status) << ": "
                << md.diagnostic << '\n';
      status = 2;
    }
    else {
      opts.mode = md.m;
    }
  }
  const auto summary = summarize(store, data, opts);
  for (const auto &w : summary.warnings)
    std::cerr << "warning: " << w << '\n';

  RunReport report;
  report.command = "sample";
  report.config = config_to_json(config);
  report.config["resolved_mu"] = store.mu;
  report.config["window"] = s.window;
  report.input_path = o.data;
  report.input_sha256 = sha256_file(o.data);
  report.seed = config.seed;
  report.trace_name = store.trace_name;
  const auto lags = parse_lags(s.lags);
  const auto add_acf = [&](const std::string &name,
                           const std::vector<double> &series) {
    try {
      report.autocorrelation[name] = autocorrelation(series, lags);
    }
    catch (const std::exception &e) {
      std::cerr << "warning: no autocorrelation for " << name << ": "
                << e.what() << '\n';
    }
  };
  add_acf(store.trace_name, store.trace);
  for (std::size_t j = 0; j < config.traced_categories.size(); ++j)
    add_acf(config.traced_categories[j], store.trace_focal[j]);
  report.timings["burn_in_seconds"] = store.burn_in_seconds;
  report.timings["sampling_seconds"] = store.sampling_seconds;
  report.timings["total_seconds"] = store.wall_seconds;
  report.timings["seconds_per_sweep"] = store.seconds_per_sweep();
  report.summary = summary;

  std::ostringstream archive;
  write_archive(archive, store, data, s.store_full);
  write_file_atomic(o.out + ".samples.tsv", archive.str());
  write_file_atomic(o.out + ".report.json",
                    report_to_json(report).dump(2) + "\n");
  write_file_atomic(o.out + ".plot.csv", plot_csv(summary));

  print_rows(summary);
  std::printf("timing: burn-in %.3fs, sampling %.3fs, %.3g s/sweep\n",
              store.burn_in_seconds, store.sampling_seconds,
              store.seconds_per_sweep());
  print_repro("tagbias sample --data " + o.data + " --model " + s.model +
              " --alpha " + o.alpha + " --gamma1 " + std::to_string(o.gamma1) +
              " --gamma2 " + std::to_string(o.gamma2) + " --mu " +
              std::to_string(o.mu) + " --iterations " +
              std::to_string(s.iterations) + " --burn-in " +
              std::to_string(s.burn_in) + " --thin " + std::to_string(s.thin) +
              " --seed " + std::to_string(s.seed) +
              (s.trace.empty() ? "" : " --trace " + s.trace) + " --out " + o.out);
  return status;
}

int
cmd_diagnose(const std::string &path, const std::string &lag_spec,
             const std::string &out) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  const auto archive = read_archive(in, path);
  const auto lags = parse_lags(lag_spec);

  std::vector<std::string> names{archive.store.trace_name};
  std::vector<const std::vector<double> *> series{&archive.store.trace};
  for (std::size_t j = 0; j < archive.traced_ids.size(); ++j) {
    names.push_back(archive.traced_ids[j]);
    series.push_back(&archive.store.trace_focal[j]);
  }
  std::vector<std::map<std::size_t, double>> tables;
  for (const auto *s : series)
    tables.push_back(autocorrelation(*s, lags));

  std::printf("%6s", "lag");
  for (const auto &n : names)
    std::printf(" %14s", n.c_str());
  std::printf("\n");
  for (const auto lag : lags) {
    std::printf("%6zu", lag);
    for (const auto &t : tables)
      std::printf(" %14.4f", t.at(lag));
    std::printf("\n");
  }

  if (!out.empty()) {
    nlohmann::json j;
    j["schema"] = "tagbias.diagnose";
    j["version"] = report_schema_version;
    j["archive"] = path;
    j["config"] = config_to_json(archive.store.config);
    j["retained"] = archive.store.retained_count;
    for (std::size_t s = 0; s < names.size(); ++s) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto &[lag, v] : tables[s])
        rows.push_back({{"lag", lag}, {"acf", v}});
      j["autocorrelation"][names[s]] = rows;
    }
    write_file_atomic(out, j.dump(2) + "\n");
  }
  print_repro("tagbias diagnose --archive " + path + " --lags " + lag_spec);
  return 0;
}

struct SimulateOptions {
  bool paper_scale{false};
  std::uint64_t seed{1};
  std::size_t k{0};
  std::uint64_t population{0};
  double phi_min{0.1};
  double phi_max{1.0};
  double concentration{1.0};
  std::string out;
};

int
cmd_simulate(const SimulateOptions &o) {
  TagDataset data;
  if (o.paper_scale) {
    data = make_paper_scale_fixture(o.seed);
  }
  else {
    if (o.k == 0 || o.population == 0)
      throw std::runtime_error("--k and --population are required without "
                               "--paper-scale");
    auto rng = make_rng(o.seed, 1);
    std::uniform_real_distribution<double> unif(o.phi_min, o.phi_max);
    SimSpec spec;
    spec.phi.resize(o.k);
    for (auto &p : spec.phi)
      p = unif(rng);
    std::vector<double> m(o.k);
    draw_dirichlet(std::vector<double>(o.k, o.concentration), m, rng);
    spec.m_true = CompositionVector::from_weights(std::move(m));
    spec.population = FixedPopulation{o.population};
    spec.seed = o.seed;
    data = simulate_dataset(spec).data;
  }
  std::ostringstream os;
  os << "# " << fixture_stats(data).describe() << '\n';
  write_dataset(os, data);
  write_file_atomic(o.out, os.str());
  std::cout << fixture_stats(data).describe() << '\n';
  if (o.paper_scale)
    print_repro("tagbias simulate --paper-scale --seed " +
                std::to_string(o.seed) + " --out " + o.out);
  else
    print_repro("tagbias simulate --k " + std::to_string(o.k) +
                " --population " + std::to_string(o.population) +
                " --seed " + std::to_string(o.seed) + " --out " + o.out);
  return 0;
}

}  // namespace

int
main(int argc, char **argv) {
  CLI::App app{"Composition inference under known category-dependent "
               "sampling bias"};
  app.require_subcommand(1);

  CommonOptions est_opts;
  bool est_modes = false;
  std::string mode_from{"md"};
  double tol = 1e-5;
  std::uint64_t max_iter = 10000;
  auto *est = app.add_subcommand("estimate",
                                 "corrected/naive MLE, reweighted mean, modes");
  add_hyper_options(est, est_opts);
  est->add_flag("--modes", est_modes, "also compute DPB and MD posterior modes");
  est->add_option("--mode-from", mode_from, "mode column source")
      ->check(CLI::IsMember({"md", "dpb"}))
      ->capture_default_str();
  est->add_option("--tol", tol, "Lindley-Smith L1 tolerance")
      ->capture_default_str();
  est->add_option("--max-iter", max_iter, "iteration cap for mode searches")
      ->capture_default_str();

  CommonOptions smp_opts;
  SampleOptions smp;
  auto *sample = app.add_subcommand(
      "sample", "run a Gibbs chain (desk-scale default: 5e5 sweeps, "
                "burn-in 4e4, thin 100; the published runs used "
                "--iterations 5000000 --burn-in 400000)");
  add_hyper_options(sample, smp_opts);
  sample->add_option("--model", smp.model, "dpb, dmb or md")
      ->check(CLI::IsMember({"dpb", "dmb", "md"}))
      ->capture_default_str();
  sample->add_option("--iterations", smp.iterations, "total sweeps")
      ->capture_default_str();
  sample->add_option("--burn-in", smp.burn_in, "discarded sweeps")
      ->capture_default_str();
  sample->add_option("--thin", smp.thin, "keep every n-th sweep")
      ->capture_default_str();
  sample->add_option("--seed", smp.seed, "random seed")->capture_default_str();
  sample->add_option("--trace", smp.trace, "comma-separated ids to trace");
  sample->add_option("--window", smp.window,
                     "summaries use the final W retained samples")
      ->capture_default_str();
  sample->add_flag("--store-full", smp.store_full,
                   "write every retained composition to the archive");
  sample->add_flag("--modes", smp.modes, "attach the MD posterior mode");
  sample->add_option("--lags", smp.lags, "autocorrelation lags")
      ->capture_default_str();

  std::string archive_path, lags{"10,20,40,80"}, diag_out;
  auto *diag = app.add_subcommand("diagnose", "autocorrelation of a stored chain");
  diag->add_option("--archive", archive_path, "sample archive TSV")->required();
  diag->add_option("--lags", lags, "comma-separated lags")->capture_default_str();
  diag->add_option("--out", diag_out, "optional JSON output");

  SimulateOptions sim;
  auto *simulate = app.add_subcommand("simulate", "write a synthetic dataset");
  simulate->add_flag("--paper-scale", sim.paper_scale,
                     "6096-category fixture matching the yeast library");
  simulate->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  simulate->add_option("--k", sim.k, "number of categories");
  simulate->add_option("--population", sim.population, "population size N");
  simulate->add_option("--phi-min", sim.phi_min)->capture_default_str();
  simulate->add_option("--phi-max", sim.phi_max)->capture_default_str();
  simulate->add_option("--concentration", sim.concentration,
                       "Dirichlet concentration of the true composition")
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "output TSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est)
      return cmd_estimate(est_opts, est_modes, mode_from, tol, max_iter);
    if (*sample)
      return cmd_sample(smp_opts, smp);
    if (*diag)
      return cmd_diagnose(archive_path, lags, diag_out);
    if (*simulate)
      return cmd_simulate(sim);
  }
  catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
