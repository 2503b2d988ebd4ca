#include <doctest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "modelscope/error.hpp"
#include "modelscope/fence.hpp"

using namespace modelscope;
using namespace testing;

namespace {

SizeBestTable all_models(const Dataset& d, const Eigen::VectorXd* y = nullptr) {
  const Dataset use = y ? d.with_response(*y) : d;
  SearchOptions o;
  o.nbest = kAllModels;
  o.strategy = SearchStrategy::Exhaustive;
  return best_subsets(use, o);
}

// Fence choice by direct scan of every model of every size.
std::pair<ModelId, int> scan_fence(const SizeBestTable& t, double q_full, double c) {
  for (int k = 0; k <= t.p; ++k) {
    std::vector<SizeEntry> in;
    for (const auto& e : t.by_size[k])
      if (e.q_hat - q_full <= c) in.push_back(e);
    if (in.empty()) continue;
    auto best = *std::min_element(in.begin(), in.end(), [](const SizeEntry& a, const SizeEntry& b) {
      return a.q_hat != b.q_hat ? a.q_hat < b.q_hat : a.model.mask < b.model.mask;
    });
    return {best.model, static_cast<int>(in.size())};
  }
  return {ModelId::full(t.p), 1};
}

}  // namespace

TEST_CASE("fence choice equals a direct scan") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = random_gaussian(80, 6, seed);
    const auto t = all_models(d);
    const double q_full = fit(d, ModelId::full(6)).q_hat;
    const double q_null = fit(d, ModelId::null()).q_hat;
    for (int i = 0; i <= 40; ++i) {
      const double c = (q_null - q_full) * 1.1 * i / 40.0;
      const auto got = models_within_fence(t, q_full, c);
      const auto [model, m] = scan_fence(t, q_full, c);
      CHECK(got.best.model == model);
      CHECK(static_cast<int>(got.candidates.size()) == m);
      CHECK(got.size == model.size());
    }
    CHECK(models_within_fence(t, q_full, 1e12).best.model == ModelId::null());
    CHECK(models_within_fence(t, q_full, 0.0).best.model == ModelId::full(6));
  }
}

TEST_CASE("fence falls back to the full model") {
  SizeBestTable t;
  t.p = 3;
  t.by_size = {{{ModelId{0}, 50.0}}, {{ModelId{1}, 40.0}}, {}, {}};
  const auto f = models_within_fence(t, 30.0, 5.0);
  CHECK(f.best.model == ModelId::full(3));
  CHECK(f.best.q_hat == 30.0);
  CHECK(f.size == 3);
}

TEST_CASE("pstar tallies") {
  const std::vector<FenceSelection> sel = {
      {ModelId{0b001}, 1}, {ModelId{0b001}, 2}, {ModelId{0b011}, 1}, {ModelId{0b011}, 1}, {ModelId{0b100}, 1}};
  const auto t = pstar(sel, BestOnly::True, std::nullopt);
  // tie at 2 between {0} and {0,1}: the simpler wins
  CHECK(t.argmax == std::optional<ModelId>(ModelId{0b001}));
  CHECK(t.p_star == doctest::Approx(0.4));
  const auto f = pstar(sel, BestOnly::False, std::nullopt);
  CHECK(f.argmax == std::optional<ModelId>(ModelId{0b011}));
  CHECK(f.p_star == doctest::Approx(0.4));
  // RV is column 2: selections containing it are dropped from the tally but not from B
  const auto r = pstar(sel, BestOnly::True, 2);
  CHECK(r.p_star == doctest::Approx(0.4));
  const std::vector<FenceSelection> rv_only = {{ModelId{0b100}, 1}, {ModelId{0b110}, 1}};
  const auto none = pstar(rv_only, BestOnly::True, 2);
  CHECK_FALSE(none.argmax.has_value());
  CHECK(none.p_star == 0.0);
}

TEST_CASE("pstar with unit multiplicities is mode independent") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<FenceSelection> sel(30);
    for (auto& s : sel) s = {ModelId{rng() % 8}, 1};
    const auto a = pstar(sel, BestOnly::True, std::nullopt);
    const auto b = pstar(sel, BestOnly::False, std::nullopt);
    CHECK(a.p_star == b.p_star);
    CHECK(a.argmax == b.argmax);
    for (auto& s : sel) s.m = 1 + static_cast<int>(rng() % 3);
    CHECK(pstar(sel, BestOnly::False, std::nullopt).p_star <= pstar(sel, BestOnly::True, std::nullopt).p_star);
  }
}

TEST_CASE("first peak") {
  const std::vector<double> c = {0, 1, 2, 3, 4, 5, 6};
  CHECK(first_peak(c, std::vector<double>{0.2, 0.5, 0.9, 0.6, 0.4, 0.8, 0.3}) == std::optional<double>(2.0));
  // plateau peak: midpoint of the run
  CHECK(first_peak(c, std::vector<double>{0.2, 0.5, 0.9, 0.9, 0.9, 0.4, 0.3}) == std::optional<double>(3.0));
  // a small blip is skipped in favour of the real peak
  CHECK(first_peak(c, std::vector<double>{0.3, 0.35, 0.33, 0.6, 0.9, 0.5, 0.2}) == std::optional<double>(4.0));
  // monotone curves have no peak
  CHECK_FALSE(first_peak(c, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}).has_value());
  CHECK_FALSE(first_peak(c, std::vector<double>{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3}).has_value());
  // rising into a flat stretch that then falls: fallback plateau start
  CHECK(first_peak(c, std::vector<double>{0.1, 0.5, 0.5, 0.55, 0.55, 0.5, 0.0}).has_value());
  CHECK_THROWS_AS((void)first_peak(std::vector<double>{0, 1}, std::vector<double>{0, 1}), Error);
  CHECK_THROWS_AS((void)first_peak(c, std::vector<double>{0, 1}), Error);
}

TEST_CASE("parametric draws are reproducible") {
  const auto d = random_gaussian(50, 3, 6);
  const auto f = fit(d, ModelId::full(3));
  const auto a = parametric_draw(d, f.fitted, 1.5, 9, 4, 0);
  CHECK(a == parametric_draw(d, f.fitted, 1.5, 9, 4, 0));
  CHECK(a != parametric_draw(d, f.fitted, 1.5, 9, 5, 0));
  CHECK(a != parametric_draw(d, f.fitted, 1.5, 9, 4, 1));
  const auto b = random_binomial(200, 3, 6);
  const auto fb = fit(b, ModelId::full(3));
  const auto yb = parametric_draw(b, fb.fitted, 0.0, 9, 0, 0);
  for (int i = 0; i < b.n(); ++i) CHECK((yb[i] == 0.0 || yb[i] == 1.0));
}

TEST_CASE("adaptive fence equals a brute-force fence") {
  for (auto kind : {FamilyKind::Gaussian, FamilyKind::Poisson}) {
    for (int p = 3; p <= 7; p += 2) {
      const auto base = random_of(kind, 100, p, 40 + p);
      const auto d = add_redundant_variable(base, 3);
      AfOptions o;
      o.B = 20;
      o.n_c = 15;
      o.seed = 77;
      o.initial_stepwise = false;
      o.cores = 2;
      const auto r = run_af(d, o);

      // oracle: exact fits of every model on the same draws
      const int pp = d.p();
      const auto full = fit(d, ModelId::full(pp));
      const double sigma =
          d.family().is_gaussian() ? std::sqrt(full.rss / (full.n_effective - full.dimension())) : 0.0;
      for (int b = 0; b < o.B; ++b) {
        const Eigen::VectorXd y = parametric_draw(d, full.fitted, sigma, o.seed, b, 0);
        const auto t = all_models(d, &y);
        const double q_full = fit(d.with_response(y), ModelId::full(pp)).q_hat;
        for (std::size_t i = 0; i < r.c_grid.size(); ++i) {
          const auto [model, m] = scan_fence(t, q_full, kFenceLossScale * r.c_grid[i]);
          INFO("family " << static_cast<int>(kind) << " p " << p << " b " << b << " c " << r.c_grid[i]);
          CHECK(r.selections[b][i].model == model);
          CHECK(r.selections[b][i].m == m);
        }
      }
      for (std::size_t i = 0; i < r.c_grid.size(); ++i)
        CHECK(r.curve(BestOnly::False)[i].p_star <= r.curve(BestOnly::True)[i].p_star);
    }
  }
}

TEST_CASE("adaptive fence is independent of the worker count") {
  const auto d = add_redundant_variable(random_gaussian(90, 6, 2), 1);
  AfOptions o;
  o.B = 25;
  o.n_c = 20;
  o.seed = 5;
  o.cores = 1;
  const auto a = run_af(d, o);
  o.cores = 4;
  const auto b = run_af(d, o);
  CHECK(a.c_grid == b.c_grid);
  for (int mode = 0; mode < 2; ++mode) {
    CHECK(a.c_star[mode] == b.c_star[mode]);
    for (std::size_t i = 0; i < a.c_grid.size(); ++i) {
      CHECK(a.curves[mode][i].p_star == b.curves[mode][i].p_star);
      CHECK(a.curves[mode][i].argmax == b.curves[mode][i].argmax);
    }
  }
}

TEST_CASE("adaptive fence argument checks") {
  const auto d = random_gaussian(60, 4, 1);
  AfOptions o;
  o.B = 5;
  CHECK_THROWS_AS((void)run_af(d, o), Error);  // no RV column
  const auto r = add_redundant_variable(d, 1);
  o.n_c = 1;
  CHECK_THROWS_AS((void)run_af(r, o), Error);
  o.n_c = 10;
  o.c_max = -1.0;
  CHECK_THROWS_AS((void)run_af(r, o), Error);
}

TEST_CASE("default c grid spans the loss gap") {
  const auto d = add_redundant_variable(random_gaussian(80, 5, 3), 2);
  AfOptions o;
  o.B = 5;
  o.n_c = 11;
  o.initial_stepwise = false;
  const auto r = run_af(d, o);
  const double gap = fit(d, ModelId::null()).q_hat - r.q_full;
  CHECK(r.c_grid.front() == 0.0);
  CHECK(r.c_grid.back() == doctest::Approx(1.2 * gap / kFenceLossScale));
  // at the largest c every replicate picks the null model
  CHECK(r.curve(BestOnly::True).back().argmax == std::optional<ModelId>(ModelId::null()));
}
