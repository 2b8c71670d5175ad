#include "support.hpp"

#include "tagbias/mode.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tagbias;
using namespace tagbias::test;

TEST_CASE("Lindley-Smith with phi = 1 stops at the observed counts") {
  const auto data = make_data({5, 3, 2}, {1.0, 1.0, 1.0});
  Hyperparams h;
  h.alpha = broadcast_alpha(1.0, 3);
  const auto res = dpb_lindley_smith(data, h);
  REQUIRE(res.ok());
  CHECK(res.g == std::vector<std::uint64_t>{5, 3, 2});
  CHECK(res.N == doctest::Approx(110.0 / 1.005));
  // m_i = (t_i + 1) / N, normalized to (6, 4, 3) / 13
  CHECK(res.m[0] == doctest::Approx(6.0 / 13.0));
  CHECK(res.m[2] == doctest::Approx(3.0 / 13.0));
}

TEST_CASE("Lindley-Smith small example against a hand iteration") {
  // Hand iteration from m = (1/3, 1/3, 1/3), N = 6:
  //   g = (2, 1 + floor(1), 1 + floor(1)) = (2, 2, 2)
  //   m = (3, 3, 3) / 6, g unchanged, N = 106 / 1.005
  //   m = 3 * 1.005 / 106, g unchanged, residual 0 on the next update.
  const auto data = make_data({2, 1, 1}, {1.0, 0.5, 0.5});
  Hyperparams h;
  h.alpha = broadcast_alpha(1.0, 3);
  const auto res = dpb_lindley_smith(data, h);
  REQUIRE(res.status == OptimizerStatus::converged);
  CHECK(res.iterations_used == 3);
  CHECK(res.g == std::vector<std::uint64_t>{2, 2, 2});
  CHECK(res.N == doctest::Approx(106.0 / 1.005).epsilon(1e-14));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(res.m_raw[i] == doctest::Approx(0.028443396226415094).epsilon(1e-12));
    CHECK(res.m[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("Lindley-Smith reports non-convergence") {
  const auto data = make_data({40, 7, 0, 3}, {0.3, 0.8, 0.1, 0.05});
  Hyperparams h;
  h.alpha = broadcast_alpha(1.0, 4);
  const auto res = dpb_lindley_smith(data, h, 1e-5, 1);
  CHECK(res.status == OptimizerStatus::max_iter);
  CHECK_FALSE(res.ok());
  CHECK_FALSE(res.diagnostic.empty());
  CHECK_THROWS_AS((void)dpb_lindley_smith(data, h, 0.0), std::invalid_argument);
}

TEST_CASE("Lindley-Smith fixed point satisfies its own update") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::poisson_distribution<int> pois(4.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::uint64_t> t(12);
    std::vector<double> phi(12);
    for (std::size_t i = 0; i < 12; ++i) {
      t[i] = static_cast<std::uint64_t>(pois(gen));
      phi[i] = unif(gen);
    }
    t[0] += 1;
    const auto data = make_data(t, phi);
    Hyperparams h;
    h.alpha = broadcast_alpha(1.0, 12);
    const auto res = dpb_lindley_smith(data, h);
    REQUIRE(res.ok());
    CHECK(on_simplex(res.m.span()));
    if (res.status != OptimizerStatus::converged)
      continue;
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(res.g[i] >= t[i]);
  }
}

TEST_CASE("MD mode with a flat prior is the corrected MLE") {
  const auto data = make_data({12, 0, 5, 1, 30}, {0.4, 0.9, 0.05, 1.0, 0.6});
  const auto alpha = broadcast_alpha(1.0, 5);
  for (const double mu : {0.0, 10.0, 1000.0}) {
    const auto res = md_mode_iteration(data, alpha, mu);
    REQUIRE(res.status == OptimizerStatus::converged);
    const auto mle = corrected_mle(data);
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(std::abs(res.m[i] - mle[i]) <= 1e-12);
  }
}

TEST_CASE("MD mode clamps categories whose mode sits on the boundary") {
  // alpha = 1/k: zero-count categories have t + alpha - 1 < 0 and get m = 0;
  // the others are proportional to (t_i - 1 + 1/k) / phi_i.
  const auto data = make_data({4, 0, 2}, {0.5, 0.5, 0.25});
  const auto alpha = broadcast_alpha(1.0 / 3.0, 3);
  const auto res = md_mode_iteration(data, alpha, 50.0);
  REQUIRE(res.status == OptimizerStatus::converged);
  CHECK(res.m[1] == 0.0);
  const double a = (4 - 1 + 1.0 / 3.0) / 0.5;
  const double c = (2 - 1 + 1.0 / 3.0) / 0.25;
  CHECK(res.m[0] == doctest::Approx(a / (a + c)).epsilon(1e-12));
  CHECK(res.m[2] == doctest::Approx(c / (a + c)).epsilon(1e-12));
}

TEST_CASE("MD mode failures are reported") {
  SUBCASE("every coordinate at the boundary") {
    const auto data = make_data({0, 0, 0}, {0.5, 0.5, 0.5});
    const auto res = md_mode_iteration(data, broadcast_alpha(0.5, 3), 10.0);
    CHECK(res.status == OptimizerStatus::failed);
    CHECK_FALSE(res.diagnostic.empty());
  }
  SUBCASE("nonpositive denominator") {
    // sum(alpha + t) - k = 1.3 - 3 < 0 with r = 0
    const auto data = make_data({1, 0, 0}, {1.0, 1.0, 1.0});
    const auto res = md_mode_iteration(data, broadcast_alpha(0.1, 3), 0.0);
    CHECK(res.status == OptimizerStatus::failed);
    CHECK(res.diagnostic.find("denominator") != std::string::npos);
  }
}

TEST_CASE("reweighted MD posterior mean") {
  const auto data = make_data({3, 1}, {1.0, 0.5});
  const auto mean = md_exact_mean(data, broadcast_alpha(1.0, 2));
  // w = (4, 2) / 6, divided by phi gives (4, 4) / 6
  CHECK(mean[0] == doctest::Approx(0.5));
  CHECK(mean[1] == doctest::Approx(0.5));

  // vanishing prior recovers the corrected MLE
  const auto data2 = make_data({2, 1, 0}, {0.2, 0.5, 0.9});
  const auto near = md_exact_mean(data2, broadcast_alpha(1e-12, 3));
  const auto mle = corrected_mle(data2);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(near[i] == doctest::Approx(mle[i]).epsilon(1e-9));

  CHECK_THROWS_AS((void)md_exact_mean(data, broadcast_alpha(1.0, 3)),
                  std::invalid_argument);
}

TEST_CASE("estimators are invariant to a common rescaling of phi") {
  const std::vector<std::uint64_t> t{7, 2, 0, 4};
  const std::vector<double> phi{0.8, 0.4, 0.6, 0.2};
  std::vector<double> half(phi);
  for (auto &p : half)
    p /= 2;
  const auto a = make_data(t, phi);
  const auto b = make_data(t, half);
  const auto alpha = broadcast_alpha(0.7, 4);
  const auto ma = md_exact_mean(a, alpha);
  const auto mb = md_exact_mean(b, alpha);
  const auto ra = md_mode_iteration(a, broadcast_alpha(1.0, 4), 0.0);
  const auto rb = md_mode_iteration(b, broadcast_alpha(1.0, 4), 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ma[i] == doctest::Approx(mb[i]).epsilon(1e-12));
    CHECK(ra.m[i] == doctest::Approx(rb.m[i]).epsilon(1e-12));
  }
}

TEST_CASE("gamma grid search") {
  const auto data = make_data({9, 4, 0, 2}, {0.3, 0.9, 0.5, 0.1});
  const auto alpha = broadcast_alpha(0.25, 4);
  const std::vector<double> g1{1.0, 10.0, 100.0};
  const std::vector<double> g2{0.001, 0.005, 0.1};
  Hyperparams h;
  h.alpha = alpha;
  h.gamma1 = 10.0;
  h.gamma2 = 0.1;
  const auto direct = dpb_lindley_smith(data, h);
  REQUIRE(direct.ok());
  const auto target = CompositionVector::from_weights(direct.m_raw);
  const auto sel = select_dpb_gammas(data, alpha, target, g1, g2);
  REQUIRE(sel.has_value());
  double d = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    d += std::abs(direct.m_raw[i] - target[i]);
  CHECK(sel->distance <= d + 1e-15);
  CHECK(sel->distance >= 0.0);
}
