#include <doctest.h>

#include <array>
#include <cmath>

#include "helpers.hpp"
#include "modelscope/error.hpp"
#include "modelscope/stepwise.hpp"

using namespace modelscope;
using namespace testing;

TEST_CASE("backward AIC on artificialeg drops only x8") {
  const auto d = artificial();
  const auto s = step(d, Direction::Backward, 2.0);
  CHECK(d.formula(s.model) == "y~x1+x2+x3+x4+x5+x6+x7+x9");
  const auto f = fit(d, s.model);
  const auto rows = coef_table(d, f);
  CHECK(round2(row(rows, "x1").estimate) == doctest::Approx(0.80));
  CHECK(round2(row(rows, "x1").std_error) == doctest::Approx(0.19));
  CHECK(round2(row(rows, "x1").statistic) == doctest::Approx(4.13));
  CHECK(round2(row(rows, "x6").statistic) == doctest::Approx(-5.19));
  CHECK(round2(row(rows, "(Intercept)").estimate) == doctest::Approx(-0.11));
  CHECK(std::abs(f.loglik + 100.63) < 0.01);
}

TEST_CASE("forward BIC on birthwt") {
  const auto d = birthwt();
  const auto s = step(d, Direction::Forward, std::log(static_cast<double>(d.n())));
  CHECK(s.path.front() == ModelId::null());
  CHECK(s.path.size() >= 2);
  CHECK(s.path[1] == d.model_of({"ptdTRUE"}));
}

TEST_CASE("path GIC decreases strictly") {
  for (auto kind : {FamilyKind::Gaussian, FamilyKind::Binomial, FamilyKind::Poisson}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto d = random_of(kind, 150, 7, seed);
      for (auto dir : {Direction::Forward, Direction::Backward}) {
        for (double lambda : {2.0, std::log(150.0)}) {
          const auto s = step(d, dir, lambda);
          REQUIRE(s.path.size() == s.gic.size());
          CHECK(s.path.back() == s.model);
          for (std::size_t i = 1; i < s.gic.size(); ++i) {
            CHECK(s.gic[i] < s.gic[i - 1]);
            CHECK(std::abs(s.path[i].size() - s.path[i - 1].size()) == 1);
          }
          // No single move from the final model improves the criterion.
          const auto f = fit(d, s.model);
          const double here = gic(f.q_hat, s.model.dimension(), lambda);
          CHECK(here == doctest::Approx(s.gic.back()).epsilon(1e-12));
          for (int j = 0; j < d.p(); ++j) {
            const bool fw = dir == Direction::Forward;
            if (s.model.contains(j) == fw) continue;
            const ModelId m = fw ? s.model.with(j) : s.model.without(j);
            CHECK(gic(fit(d, m).q_hat, m.dimension(), lambda) >= here - 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("huge penalty keeps the null model, zero penalty the full model") {
  const auto d = random_gaussian(100, 6, 3);
  CHECK(step(d, Direction::Forward, 1e9).model == ModelId::null());
  CHECK(step(d, Direction::Backward, 1e9).model == ModelId::null());
  CHECK(step(d, Direction::Backward, 0.0).model == ModelId::full(6));
  CHECK_THROWS_AS((void)step(d, Direction::Forward, -1.0), Error);
}

TEST_CASE("screening bounds") {
  const std::array<int, 4> a{3, 5, 5, 7};
  const auto r = screen_bounds(a, 12);
  CHECK(r.lower == 1);
  CHECK(r.upper == 9);
  const std::array<int, 4> b{0, 1, 1, 10};
  const auto r2 = screen_bounds(b, 10);
  CHECK(r2.lower == 0);
  CHECK(r2.upper == 10);
  CHECK_THROWS_AS((void)screen_bounds(std::span<const int>{}, 3), Error);
}

TEST_CASE("screening runs four searches") {
  const auto d = artificial();
  const auto r = screen_sizes(d);
  CHECK(r.sizes[2] == 8);  // backward AIC
  const auto expected = screen_bounds(r.sizes, d.p());
  CHECK(r.lower == expected.lower);
  CHECK(r.upper == expected.upper);
  CHECK(r.lower <= r.upper);
}
