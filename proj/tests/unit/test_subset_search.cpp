#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "modelscope/error.hpp"
#include "modelscope/subset_search.hpp"

using namespace modelscope;
using namespace testing;

namespace {

// Independent oracle: fit every model, keep the top n per size.
std::vector<std::vector<SizeEntry>> brute_force(const Dataset& d, int nbest, const Eigen::VectorXd* w = nullptr) {
  std::vector<std::vector<SizeEntry>> out(d.p() + 1);
  FitOptions fo;
  fo.standard_errors = false;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d.p()); ++mask) {
    const ModelId m{mask};
    out[m.size()].push_back({m, fit(d, m, w, fo).q_hat});
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end(), [](const SizeEntry& a, const SizeEntry& b) {
      return a.q_hat != b.q_hat ? a.q_hat < b.q_hat : a.model.mask < b.model.mask;
    });
    if (nbest != kAllModels && static_cast<int>(v.size()) > nbest) v.resize(nbest);
  }
  return out;
}

void check_equal(const SizeBestTable& t, const std::vector<std::vector<SizeEntry>>& oracle) {
  REQUIRE(t.by_size.size() == oracle.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    REQUIRE(t.by_size[k].size() == oracle[k].size());
    for (std::size_t i = 0; i < oracle[k].size(); ++i) {
      CHECK(t.by_size[k][i].model == oracle[k][i].model);
      CHECK(t.by_size[k][i].q_hat == oracle[k][i].q_hat);
    }
  }
}

}  // namespace

TEST_CASE("branch and bound equals enumeration on random data") {
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 4 + rep % 9;
    const auto d = random_gaussian(100, p, 1000 + rep);
    const int nbest = 1 + rep % 5;
    INFO("rep " << rep << " p " << p << " nbest " << nbest);
    SearchOptions o;
    o.nbest = nbest;
    o.strategy = SearchStrategy::BranchAndBound;
    const auto t = best_subsets(d, o);
    CHECK(t.method == SearchMethod::BranchAndBound);
    check_equal(t, brute_force(d, nbest));
  }
}

TEST_CASE("branch and bound under likelihood weights") {
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> expo(1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = random_gaussian(60, 7, 50 + rep);
    Eigen::VectorXd w(d.n());
    for (int i = 0; i < d.n(); ++i) w[i] = expo(rng);
    SearchOptions o;
    o.nbest = 3;
    check_equal(best_subsets(d, o, &w), brute_force(d, 3, &w));
  }
}

TEST_CASE("keeping every model lists the whole space") {
  const auto d = random_gaussian(50, 6, 4);
  SearchOptions o;
  o.nbest = kAllModels;
  const auto t = best_subsets(d, o);
  std::size_t total = 0;
  for (const auto& v : t.by_size) total += v.size();
  CHECK(total == 64);
  check_equal(t, brute_force(d, kAllModels));
}

TEST_CASE("pruning skips part of the tree") {
  const auto d = random_gaussian(200, 14, 77, 0.5);
  SearchOptions o;
  o.nbest = 1;
  const auto t = best_subsets(d, o);
  CHECK(t.nodes_evaluated > 0);
  CHECK(t.nodes_evaluated < (std::int64_t{1} << 14));
}

TEST_CASE("size range restriction") {
  const auto d = random_gaussian(80, 8, 9);
  SearchOptions o;
  o.nbest = 2;
  o.min_size = 2;
  o.max_size = 5;
  const auto t = best_subsets(d, o);
  const auto all = brute_force(d, 2);
  for (int k = 0; k <= 8; ++k) {
    if (k < 2 || k > 5) {
      CHECK(t.by_size[k].empty());
    } else {
      REQUIRE(t.by_size[k].size() == 2);
      CHECK(t.by_size[k][0].model == all[k][0].model);
      CHECK(t.by_size[k][1].model == all[k][1].model);
    }
  }
}

TEST_CASE("models within thresholds") {
  for (auto kind : {FamilyKind::Gaussian, FamilyKind::Binomial, FamilyKind::Poisson}) {
    const auto d = random_of(kind, 120, 6, 21);
    const auto all = brute_force(d, kAllModels);
    std::vector<double> thr(d.p() + 1);
    // Midway between two losses; a threshold equal to a loss is a round-off tie.
    for (int k = 0; k <= d.p(); ++k) {
      const auto& v = all[k];
      const std::size_t i = v.size() / 2;
      thr[k] = i + 1 < v.size() ? 0.5 * (v[i].q_hat + v[i + 1].q_hat) : v[i].q_hat + 1.0;
    }
    const auto t = models_within(d, thr, SearchOptions{});
    for (int k = 0; k <= d.p(); ++k) {
      std::vector<ModelId> expected;
      for (const auto& e : all[k])
        if (e.q_hat <= thr[k]) expected.push_back(e.model);
      std::vector<ModelId> got;
      for (const auto& e : t.by_size[k]) got.push_back(e.model);
      INFO("family " << static_cast<int>(kind) << " size " << k << " got " << got.size() << " expected "
                     << expected.size());
      CHECK(got == expected);
    }
  }
}

TEST_CASE("exhaustive GLM search equals enumeration") {
  for (auto kind : {FamilyKind::Binomial, FamilyKind::Poisson}) {
    const auto d = random_of(kind, 150, 6, 5);
    SearchOptions o;
    o.nbest = 2;
    const auto t = best_subsets(d, o);
    CHECK(t.method == SearchMethod::Exhaustive);
    check_equal(t, brute_force(d, 2));
  }
}

TEST_CASE("surrogate route above the threshold") {
  const auto d = random_binomial(300, 8, 12);
  SearchOptions o;
  o.nbest = 1;
  o.exhaustive_threshold = 4;
  const auto t = best_subsets(d, o);
  CHECK(t.method == SearchMethod::Surrogate);
  const auto exact = brute_force(d, 1);
  // The reported losses are exact refits, never better than the true optimum.
  for (int k = 0; k <= d.p(); ++k) {
    REQUIRE(t.best(k) != nullptr);
    CHECK(t.best(k)->q_hat >= exact[k][0].q_hat - 1e-9);
  }
  CHECK(t.best(0)->model == ModelId::null());
  CHECK(t.best(d.p())->model == ModelId::full(d.p()));
}

TEST_CASE("strategy checks") {
  const auto b = random_binomial(100, 4, 1);
  SearchOptions o;
  o.strategy = SearchStrategy::BranchAndBound;
  CHECK_THROWS_AS((void)best_subsets(b, o), Error);
  o.strategy = SearchStrategy::Surrogate;
  CHECK_THROWS_AS((void)best_subsets(random_gaussian(100, 4, 1), o), Error);
}

TEST_CASE("rank within size") {
  SizeBestTable t;
  t.p = 3;
  t.by_size = {{{ModelId{0}, 100.0}}, {{ModelId{1}, 90.0}}, {{ModelId{3}, 87.0}}, {{ModelId{7}, 86.5}}};
  CHECK(rank_within_size(t, 0.0) == ModelId{7});
  CHECK(rank_within_size(t, 2.0) == ModelId{3});
  CHECK(rank_within_size(t, 5.0) == ModelId{1});
  CHECK(rank_within_size(t, 20.0) == ModelId{0});
  // equal GIC: the smaller size wins
  CHECK(rank_within_size(t, 10.0) == ModelId{0});
  SizeBestTable empty;
  empty.by_size.assign(3, {});
  CHECK_THROWS_AS((void)rank_within_size(empty, 2.0), Error);
}

TEST_CASE("rank within size is monotone in the penalty") {
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = random_gaussian(80, 8, 300 + rep);
    const auto t = best_subsets(d, SearchOptions{});
    int prev = d.p() + 1;
    for (double lambda = 0.0; lambda <= 30.0; lambda += 0.5) {
      const int size = rank_within_size(t, lambda).size();
      CHECK(size <= prev);
      prev = size;
    }
    CHECK(rank_within_size(t, 0.0) == ModelId::full(d.p()));
  }
}

TEST_CASE("artificialeg best size-one model") {
  const auto d = artificial();
  const auto t = best_subsets(d, SearchOptions{});
  REQUIRE(t.best(1) != nullptr);
  CHECK(t.best(1)->model == d.model_of({"x8"}));
  CHECK(std::abs(-0.5 * t.best(1)->q_hat + 105.72) < 0.01);
}
