#include "support.hpp"

#include "tagbias/gibbs.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace tagbias;
using namespace tagbias::test;

namespace {

Hyperparams
flat(std::size_t k) {
  Hyperparams h;
  h.alpha = broadcast_alpha(1.0, k);
  return h;
}

}  // namespace

TEST_CASE("model names") {
  CHECK(parse_model("DPB") == Model::dpb);
  CHECK(parse_model("dmb") == Model::dmb);
  CHECK(to_string(parse_model("md")) == "md");
  CHECK_THROWS_AS((void)parse_model("hmc"), std::invalid_argument);
}

TEST_CASE("DPB with phi = 1 never adds untagged copies") {
  const auto data = make_data({4, 0, 9}, {1.0, 1.0, 1.0});
  auto h = flat(3);
  auto s = initial_dpb_state(data);
  auto rng = make_rng(7);
  StepScratch scratch;
  for (int it = 0; it < 500; ++it) {
    dpb_step(s, data, h, rng, scratch);
    CHECK(s.g == std::vector<std::uint64_t>{4, 0, 9});
    check_state(s, data);
  }
}

TEST_CASE("DPB latent count conditional mean") {
  // g = t + Pois(N m (1 - phi)): with N = 100, m = 0.1, phi = 0.7, t = 3 the
  // mean is 3 + 3 = 6. The other m entries come from the Dirichlet draw, so
  // the check fixes the conditional by resetting state every sweep.
  const auto data = make_data({3, 5}, {0.7, 0.7});
  auto h = flat(2);
  auto rng = make_rng(8);
  const int reps = 100000;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r)
    sum += static_cast<double>(3 + draw_poisson(100.0 * 0.1 * (1 - 0.7), rng));
  CHECK(std::abs(sum / reps - 6.0) < 4 * std::sqrt(3.0 / reps));

  // Through the step: m is drawn first from Dir(g + alpha) with g = (3, 5);
  // E[m_1] = 4/10, so E[g_1] = 3 + N * 0.4 * 0.3 with N fixed before the
  // g update.
  StepScratch scratch;
  double g1 = 0.0;
  for (int r = 0; r < reps; ++r) {
    DpbState s{{0.5, 0.5}, {3, 5}, 100.0};
    dpb_step(s, data, h, rng, scratch);
    g1 += static_cast<double>(s.g[0]);
  }
  CHECK(g1 / reps == doctest::Approx(3.0 + 100.0 * 0.4 * 0.3).epsilon(0.01));
}

TEST_CASE("DMB keeps the population consistent") {
  const auto data = make_data({6, 0, 2, 11}, {0.2, 0.9, 0.5, 1.0});
  auto h = flat(4);
  auto s = initial_dmb_state(data);
  CHECK(s.N == data.total_tags());
  check_state(s, data);
  auto rng = make_rng(9);
  StepScratch scratch;
  for (int it = 0; it < 2000; ++it) {
    dmb_step(s, data, h, rng, scratch);
    check_state(s, data);
  }
}

TEST_CASE("DMB with no untagged mass collapses N to T") {
  const auto data = make_data({6, 4}, {1.0, 1.0});
  auto h = flat(2);
  auto s = initial_dmb_state(data);
  auto rng = make_rng(10);
  StepScratch scratch;
  for (int it = 0; it < 100; ++it) {
    dmb_step(s, data, h, rng, scratch);
    CHECK(s.N == 10);
    CHECK(s.g == std::vector<std::uint64_t>{6, 4});
  }
}

TEST_CASE("MD step conditionals") {
  const auto data = make_data({3, 1}, {1.0, 0.5});
  auto h = flat(2);
  auto rng = make_rng(11);
  StepScratch scratch;

  SUBCASE("no leftover mass means no untagged draws") {
    MdState s{{0.5, 0.5}, 0.0, 17};
    md_step(s, data, h, 50.0, rng, scratch);
    CHECK(s.r == 0);
    check_state(s, data);
  }
  SUBCASE("r is Poisson(v0 mu)") {
    const int reps = 50000;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      MdState s{{0.3, 0.3}, 0.4, 0};
      md_step(s, data, h, 500.0, rng, scratch);
      sum += static_cast<double>(s.r);
    }
    CHECK(std::abs(sum / reps - 200.0) < 4 * std::sqrt(200.0 / reps));
  }
  SUBCASE("v given r is Dirichlet(r + 1, alpha + t)") {
    // with mu = 0, r = 0 always and (v0, v) ~ Dir(1, 4, 2)
    const int reps = 100000;
    std::vector<double> v0(reps), v1(reps);
    MdState s = initial_md_state(data, 0.0);
    for (int r = 0; r < reps; ++r) {
      md_step(s, data, h, 0.0, rng, scratch);
      v0[r] = s.v0;
      v1[r] = s.v[0];
    }
    CHECK(mean_of(v0) == doctest::Approx(1.0 / 7.0).epsilon(0.01));
    CHECK(mean_of(v1) == doctest::Approx(4.0 / 7.0).epsilon(0.01));
  }
}

TEST_CASE("md_composition reweights by phi") {
  const auto data = make_data({3, 1}, {1.0, 0.5});
  const MdState s{{0.4, 0.2}, 0.4, 3};
  const auto m = md_composition(s, data);
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(0.5));
}

TEST_CASE("invariant checks reject broken states") {
  const auto data = make_data({3, 1}, {1.0, 0.5});
  CHECK_THROWS_AS(check_state(DpbState{{0.7, 0.7}, {3, 1}, 5.0}, data),
                  std::logic_error);
  CHECK_THROWS_AS(check_state(DpbState{{0.5, 0.5}, {2, 1}, 5.0}, data),
                  std::logic_error);
  CHECK_THROWS_AS(check_state(DmbState{{0.5, 0.5}, {3, 2}, 4}, data),
                  std::logic_error);
  CHECK_THROWS_AS(check_state(MdState{{0.5, 0.6}, 0.0, 0}, data),
                  std::logic_error);
}

TEST_CASE("chain configuration") {
  const auto data = make_data({3, 1, 0}, {1.0, 0.5, 0.25});
  ChainConfig c;
  c.hyper = flat(3);
  c.iterations = 1000;
  c.burn_in = 100;
  c.thin = 10;
  CHECK_NOTHROW(c.validate(data));
  auto bad = c;
  bad.burn_in = 1000;
  CHECK_THROWS_AS(bad.validate(data), std::invalid_argument);
  bad = c;
  bad.thin = 0;
  CHECK_THROWS_AS(bad.validate(data), std::invalid_argument);
  bad = c;
  bad.traced_categories = {"nope"};
  CHECK_THROWS_AS(bad.validate(data), std::invalid_argument);
}

TEST_CASE("run_chain bookkeeping and reproducibility") {
  const auto data = make_data({3, 1, 0}, {1.0, 0.5, 0.25});
  for (const auto model : {Model::dpb, Model::dmb, Model::md}) {
    CAPTURE(to_string(model));
    ChainConfig c;
    c.model = model;
    c.hyper = flat(3);
    c.iterations = 2050;
    c.burn_in = 50;
    c.thin = 20;
    c.seed = 123;
    c.traced_categories = {"c2"};
    c.check_every_sweep = true;
    const auto a = run_chain(data, c);
    const auto b = run_chain(data, c);
    CHECK(a.retained_count == 100);
    CHECK(a.retained_m.size() == 100);
    CHECK(a.trace.size() == 100);
    CHECK(a.trace_focal.size() == 1);
    CHECK(a.trace_focal[0].size() == 100);
    CHECK(a.invariant_checks == 2050);
    CHECK(a.trace_name == (model == Model::md ? "r" : "N"));
    CHECK(a.retained_m == b.retained_m);
    CHECK(a.trace == b.trace);
    for (std::size_t s = 0; s < 100; ++s)
      CHECK(a.trace_focal[0][s] == a.retained_m[s][1]);

    auto other = c;
    other.seed = 124;
    CHECK(run_chain(data, other).retained_m != a.retained_m);

    auto windowed = c;
    windowed.store_window = 30;
    windowed.check_every_sweep = false;
    const auto w = run_chain(data, windowed);
    CHECK(w.retained_count == 100);
    CHECK(w.first_stored == 70);
    CHECK(w.retained_m.size() == 30);
    CHECK(w.invariant_checks == 100);
    for (std::size_t s = 0; s < 30; ++s)
      CHECK(w.retained_m[s] == a.retained_m[70 + s]);
  }
}

TEST_CASE("parallel chains are independent streams") {
  const auto data = make_data({3, 1, 0}, {1.0, 0.5, 0.25});
  ChainConfig c;
  c.model = Model::md;
  c.hyper = flat(3);
  c.iterations = 600;
  c.burn_in = 100;
  c.thin = 5;
  const auto chains = run_chains(data, c, 3);
  REQUIRE(chains.size() == 3);
  CHECK(chains[0].retained_m == run_chain(data, c, 0).retained_m);
  CHECK(chains[1].retained_m == run_chain(data, c, 1).retained_m);
  CHECK(chains[0].retained_m != chains[1].retained_m);
}

TEST_CASE("zero-tag dataset stays near the prior") {
  // T = 0: the MD chain samples Dir(r + 1, alpha) and m is the reweighted
  // prior; with equal phi the mean is uniform.
  const auto data = make_data({0, 0, 0}, {0.5, 0.5, 0.5});
  ChainConfig c;
  c.model = Model::md;
  c.hyper = flat(3);
  c.hyper.mu = 10.0;
  c.iterations = 60000;
  c.burn_in = 1000;
  c.thin = 1;
  const auto store = run_chain(data, c);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(mean_of(column(store.retained_m, i)) ==
          doctest::Approx(1.0 / 3.0).epsilon(0.03));
}
