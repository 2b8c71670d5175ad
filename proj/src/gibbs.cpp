#include "tagbias/gibbs.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace tagbias {

std::string_view
to_string(Model model) {
  switch (model) {
  case Model::dpb:
    return "dpb";
  case Model::dmb:
    return "dmb";
  case Model::md:
    return "md";
  }
  return "?";
}

Model
parse_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "dpb")
    return Model::dpb;
  if (lower == "dmb")
    return Model::dmb;
  if (lower == "md")
    return Model::md;
  throw std::invalid_argument("unknown model: " + std::string(name));
}

namespace {

std::vector<double>
starting_composition(const TagDataset &data) {
  if (data.total_tags() == 0)
    return CompositionVector::uniform(data.size()).values();
  return corrected_mle(data).values();
}

std::vector<std::uint64_t>
observed_counts(const TagDataset &data) {
  std::vector<std::uint64_t> g(data.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = data[i].tag_count;
  return g;
}

}  // namespace

DpbState
initial_dpb_state(const TagDataset &data) {
  DpbState s;
  s.m = starting_composition(data);
  s.g = observed_counts(data);
  s.N = std::max(1.0, std::round(natural_population_estimate(data)));
  return s;
}

DmbState
initial_dmb_state(const TagDataset &data) {
  DmbState s;
  s.m = starting_composition(data);
  s.g = observed_counts(data);
  // sum g = N must hold from the start; N is redrawn on the first sweep
  s.N = data.total_tags();
  return s;
}

MdState
initial_md_state(const TagDataset &data, double mu) {
  MdState s;
  const auto m = starting_composition(data);
  s.v.resize(m.size());
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    s.v[i] = m[i] * data.phi()[i];
    total += s.v[i];
  }
  s.v0 = std::max(0.0, 1.0 - total);
  s.r = static_cast<std::uint64_t>(std::llround(mu * s.v0));
  return s;
}

void
dpb_step(DpbState &state, const TagDataset &data, const Hyperparams &hyper,
         Rng &rng, StepScratch &scratch) {
  const auto &t = data.counts();
  const auto &phi = data.phi();
  const std::size_t k = t.size();

  // m | g: independent Gamma(g_i + alpha_i, rate N) normalized, i.e.
  // Dirichlet(g + alpha); the common rate cancels
  scratch.shape.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    scratch.shape[i] = static_cast<double>(state.g[i]) + hyper.alpha[i];
  state.m.resize(k);
  draw_dirichlet(scratch.shape, state.m, rng);

  // g | m, N: observed tags plus untagged copies
  std::uint64_t g_total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    state.g[i] = data[i].tag_count +
                 draw_poisson(state.N * state.m[i] * (1.0 - phi[i]), rng);
    g_total += state.g[i];
  }

  // N | g
  state.N = draw_gamma(static_cast<double>(g_total) + hyper.gamma1, rng) /
            (1.0 + hyper.gamma2);
}

void
dmb_step(DmbState &state, const TagDataset &data, const Hyperparams &hyper,
         Rng &rng, StepScratch &scratch) {
  const auto &phi = data.phi();
  const std::size_t k = phi.size();
  const std::uint64_t total_tags = data.total_tags();

  scratch.shape.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    scratch.shape[i] = static_cast<double>(state.g[i]) + hyper.alpha[i];
  state.m.resize(k);
  draw_dirichlet(scratch.shape, state.m, rng);

  const double x =
      draw_gamma(static_cast<double>(total_tags) + hyper.gamma1, rng) /
      (1.0 + hyper.gamma2);
  state.N = std::max(static_cast<std::uint64_t>(std::ceil(x)), total_tags);

  scratch.weights.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    scratch.weights[i] = state.m[i] * (1.0 - phi[i]);
    state.g[i] = data[i].tag_count;
  }
  // no untagged mass anywhere: the population is exactly what was tagged
  if (!add_multinomial(state.N - total_tags, scratch.weights, state.g, rng))
    state.N = total_tags;
}

void
md_step(MdState &state, const TagDataset &data, const Hyperparams &hyper,
        double mu, Rng &rng, StepScratch &scratch) {
  const auto &t = data.counts();
  const std::size_t k = t.size();

  state.r = draw_poisson(state.v0 * mu, rng);

  scratch.shape.resize(k + 1);
  scratch.draw.resize(k + 1);
  scratch.shape[0] = static_cast<double>(state.r) + 1.0;
  for (std::size_t i = 0; i < k; ++i)
    scratch.shape[i + 1] = hyper.alpha[i] + t[i];
  draw_dirichlet(scratch.shape, scratch.draw, rng);

  state.v0 = scratch.draw[0];
  state.v.assign(scratch.draw.begin() + 1, scratch.draw.end());
}

std::vector<double>
md_composition(const MdState &state, const TagDataset &data) {
  const auto &phi = data.phi();
  std::vector<double> m(state.v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = state.v[i] / phi[i];
    total += m[i];
  }
  for (auto &x : m)
    x /= total;
  return m;
}

namespace {

void
check_latent_counts(const std::vector<std::uint64_t> &g,
                    const TagDataset &data) {
  if (g.size() != data.size())
    throw std::logic_error("latent count vector has the wrong length");
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] < data[i].tag_count)
      throw std::logic_error("latent count below observed count for " +
                             data[i].id);
}

}  // namespace

void
check_state(const DpbState &s, const TagDataset &data) {
  if (!on_simplex(s.m))
    throw std::logic_error("DPB composition left the simplex");
  check_latent_counts(s.g, data);
  if (!(s.N > 0.0) || !std::isfinite(s.N))
    throw std::logic_error("DPB population size is not positive");
}

void
check_state(const DmbState &s, const TagDataset &data) {
  if (!on_simplex(s.m))
    throw std::logic_error("DMB composition left the simplex");
  check_latent_counts(s.g, data);
  const auto total = std::accumulate(s.g.begin(), s.g.end(), std::uint64_t{0});
  if (total != s.N)
    throw std::logic_error("DMB latent counts do not sum to N");
  if (s.N < data.total_tags())
    throw std::logic_error("DMB population below observed total");
}

void
check_state(const MdState &s, const TagDataset &data) {
  if (s.v.size() != data.size())
    throw std::logic_error("MD coordinate vector has the wrong length");
  double total = s.v0;
  if (!(s.v0 >= 0.0))
    throw std::logic_error("MD leftover mass is negative");
  for (const double x : s.v) {
    if (!(x >= 0.0))
      throw std::logic_error("MD coordinate is negative");
    total += x;
  }
  if (std::abs(total - 1.0) > simplex_tol)
    throw std::logic_error("MD coordinates do not sum to one");
}

void
ChainConfig::validate(const TagDataset &data) const {
  if (data.empty())
    throw std::invalid_argument("dataset has no categories");
  hyper.validate(data.size());
  if (iterations == 0)
    throw std::invalid_argument("iterations must be positive");
  if (burn_in >= iterations)
    throw std::invalid_argument("burn-in must be smaller than iterations");
  if (thin == 0)
    throw std::invalid_argument("thin must be at least 1");
  for (const auto &id : traced_categories)
    if (data.find(id) == data.size())
      throw std::invalid_argument("traced category not in dataset: " + id);
}

double
SampleStore::seconds_per_sweep() const {
  return config.iterations == 0
             ? 0.0
             : wall_seconds / static_cast<double>(config.iterations);
}

namespace {

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shared burn-in/thinning loop. `step` advances the state; `view` exposes
// the current composition and scalar trace value.
template <class State, class Step, class View>
void
drive(State &state, const TagDataset &data, const ChainConfig &config,
      SampleStore &store, Step step, View view) {
  std::vector<std::size_t> focal;
  for (const auto &id : config.traced_categories)
    focal.push_back(data.find(id));
  store.trace_focal.assign(focal.size(), {});

  const std::uint64_t n_keep = (config.iterations - config.burn_in) / config.thin;
  const std::uint64_t window =
      config.store_window == 0 ? n_keep : std::min(config.store_window, n_keep);
  store.retained_m.reserve(window);
  store.trace.reserve(n_keep);
  store.first_stored = n_keep - window;

  std::size_t ring_head = 0;  // oldest slot once the window is full
  const auto start = Clock::now();
  auto phase = start;
  for (std::uint64_t it = 1; it <= config.iterations; ++it) {
    step(state);
    if (config.check_every_sweep) {
      check_state(state, data);
      ++store.invariant_checks;
    }
    if (it == config.burn_in) {
      store.burn_in_seconds = seconds_since(phase);
      phase = Clock::now();
    }
    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0)
      continue;

    if (!config.check_every_sweep) {
      check_state(state, data);
      ++store.invariant_checks;
    }
    auto [m, scalar] = view(state);
    if (!on_simplex(m))
      throw std::logic_error("retained composition left the simplex");
    store.trace.push_back(scalar);
    for (std::size_t j = 0; j < focal.size(); ++j)
      store.trace_focal[j].push_back(m[focal[j]]);
    if (store.retained_m.size() < window) {
      store.retained_m.push_back(std::move(m));
    }
    else if (window > 0) {
      store.retained_m[ring_head] = std::move(m);
      ring_head = (ring_head + 1) % window;
    }
    ++store.retained_count;
  }
  std::rotate(store.retained_m.begin(),
              store.retained_m.begin() + static_cast<std::ptrdiff_t>(ring_head),
              store.retained_m.end());
  store.sampling_seconds = seconds_since(phase);
  store.wall_seconds = seconds_since(start);
  if (config.burn_in == 0)
    store.burn_in_seconds = 0.0;
}

}  // namespace

SampleStore
run_chain(const TagDataset &data, const ChainConfig &config,
          std::uint64_t chain_index) {
  config.validate(data);
  SampleStore store;
  store.config = config;
  auto rng = make_rng(config.seed, chain_index);
  StepScratch scratch;
  const auto &hyper = config.hyper;

  switch (config.model) {
  case Model::dpb: {
    store.trace_name = "N";
    auto state = initial_dpb_state(data);
    drive(
        state, data, config, store,
        [&](DpbState &s) { dpb_step(s, data, hyper, rng, scratch); },
        [](const DpbState &s) { return std::pair{s.m, s.N}; });
    break;
  }
  case Model::dmb: {
    store.trace_name = "N";
    auto state = initial_dmb_state(data);
    drive(
        state, data, config, store,
        [&](DmbState &s) { dmb_step(s, data, hyper, rng, scratch); },
        [](const DmbState &s) {
          return std::pair{s.m, static_cast<double>(s.N)};
        });
    break;
  }
  case Model::md: {
    store.trace_name = "r";
    store.mu = resolve_mu(data, hyper);
    auto state = initial_md_state(data, store.mu);
    const double mu = store.mu;
    drive(
        state, data, config, store,
        [&](MdState &s) { md_step(s, data, hyper, mu, rng, scratch); },
        [&](const MdState &s) {
          return std::pair{md_composition(s, data), static_cast<double>(s.r)};
        });
    break;
  }
  }
  return store;
}

std::vector<SampleStore>
run_chains(const TagDataset &data, const ChainConfig &config,
           std::size_t n_chains) {
  config.validate(data);
  std::vector<SampleStore> out(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  std::vector<std::thread> workers;
  workers.reserve(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c)
    workers.emplace_back([&, c] {
      try {
        out[c] = run_chain(data, config, c);
      }
      catch (...) {
        errors[c] = std::current_exception();
      }
    });
  for (auto &w : workers)
    w.join();
  for (const auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return out;
}

}  // namespace tagbias
