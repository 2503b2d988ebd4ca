#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "modelscope/error.hpp"
#include "modelscope/vis.hpp"

using namespace modelscope;
using namespace testing;

namespace {

VisOptions opts(int B, std::uint64_t seed, int cores = 1) {
  VisOptions o;
  o.B = B;
  o.seed = seed;
  o.cores = cores;
  return o;
}

}  // namespace

TEST_CASE("exponential weights") {
  const auto a = bootstrap_weights(20000, 3, 0);
  CHECK(a.minCoeff() > 0.0);
  CHECK(std::abs(a.mean() - 1.0) < 0.03);
  const double var = (a.array() - a.mean()).square().mean();
  CHECK(std::abs(var - 1.0) < 0.06);
  CHECK(bootstrap_weights(50, 3, 7) == bootstrap_weights(50, 3, 7));
  CHECK(bootstrap_weights(50, 3, 7) != bootstrap_weights(50, 3, 8));
  CHECK(bootstrap_weights(50, 3, 7) != bootstrap_weights(50, 4, 7));
}

TEST_CASE("results do not depend on the worker count") {
  const auto d = random_gaussian(80, 7, 5);
  const auto a = run_vis(d, opts(40, 11, 1));
  for (int cores : {2, 3, 8}) {
    const auto b = run_vis(d, opts(40, 11, cores));
    REQUIRE(a.per_replicate.size() == b.per_replicate.size());
    for (std::size_t r = 0; r < a.per_replicate.size(); ++r)
      for (std::size_t k = 0; k < a.per_replicate[r].size(); ++k) {
        CHECK(a.per_replicate[r][k].model == b.per_replicate[r][k].model);
        CHECK(a.per_replicate[r][k].q_hat == b.per_replicate[r][k].q_hat);
      }
    CHECK(a.inclusion == b.inclusion);
  }
}

TEST_CASE("unit weights reproduce the unweighted search") {
  const auto d = random_gaussian(70, 6, 2);
  VisOptions o = opts(5, 1);
  o.unit_weights = true;
  const auto v = run_vis(d, o);
  const auto t = best_subsets(v.data, SearchOptions{});
  for (const auto& row : v.per_replicate)
    for (int k = 0; k <= v.data.p(); ++k) CHECK(row[k].model == t.best(k)->model);
  for (int k = 0; k <= v.data.p(); ++k) {
    REQUIRE(v.stability[k].size() == 1);
    CHECK(v.stability[k][0].probability == 1.0);
  }
}

TEST_CASE("stability frequencies") {
  const auto d = random_gaussian(60, 6, 9);
  const auto v = run_vis(d, opts(60, 4));
  CHECK(v.data.p() == 7);
  CHECK(v.data.rv_index() == std::optional<int>(6));
  for (int k = 0; k <= v.data.p(); ++k) {
    double total = 0.0;
    for (const auto& e : v.stability[k]) {
      CHECK(e.model.size() == k);
      total += e.probability;
    }
    CHECK(total == doctest::Approx(1.0));
  }
  // the null and full models are the only candidates of their sizes
  CHECK(v.stability_of(ModelId::null()) == 1.0);
  CHECK(v.stability_of(ModelId::full(v.data.p())) == 1.0);
}

TEST_CASE("inclusion curves match a direct count") {
  const auto d = random_gaussian(60, 5, 13);
  const auto v = run_vis(d, opts(30, 8));
  const int p = v.data.p();
  for (std::size_t i = 0; i < v.lambda_grid.size(); i += 7) {
    const double lambda = v.lambda_grid[i];
    Eigen::VectorXd count = Eigen::VectorXd::Zero(p);
    for (const auto& row : v.per_replicate) {
      // smallest-size minimizer of q + lambda * (k + 1)
      int best_k = 0;
      for (int k = 1; k <= p; ++k)
        if (row[k].q_hat + lambda * (k + 1) < row[best_k].q_hat + lambda * (best_k + 1)) best_k = k;
      for (int j = 0; j < p; ++j)
        if (row[best_k].model.contains(j)) count[j] += 1.0;
    }
    count /= v.replicates_used();
    CHECK((v.inclusion.col(static_cast<Eigen::Index>(i)) - count).cwiseAbs().maxCoeff() < 1e-15);
  }
  // at zero penalty the full model always wins
  CHECK(v.inclusion.col(0).minCoeff() == 1.0);
  CHECK(v.lambda_grid.back() == doctest::Approx(2.0 * std::log(60.0)));
  CHECK(v.lambda_grid.size() == 101);
  for (std::size_t a = 1; a < v.legend_order.size(); ++a)
    CHECK(v.inclusion.row(v.legend_order[a - 1]).mean() >= v.inclusion.row(v.legend_order[a]).mean());
}

TEST_CASE("stability table and lvk") {
  const auto d = artificial();
  auto o = opts(30, 2);
  o.nbest = 3;
  const auto v = run_vis(d, o);
  const auto rows = stability_table(v, 0.3);
  for (const auto& r : rows) {
    CHECK(r.probability >= 0.3);
    CHECK(r.dimension == r.model.size() + 1);
    CHECK(r.loglik == doctest::Approx(fit(v.data, r.model).loglik).epsilon(1e-10));
  }
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0].formula == "y~1");
  CHECK(std::abs(rows[0].loglik + 135.33) < 0.01);
  const auto pts = lvk(v, "x8");
  for (const auto& pt : pts) CHECK(pt.highlighted == pt.model.contains(v.data.index_of("x8")));
  CHECK(pts.size() == 2 + 3 * 9);  // nine predictors plus RV: null, full, and 3 per size 1..9
  CHECK_THROWS_AS((void)lvk(v, "nope"), Error);
}

TEST_CASE("argument checks") {
  const auto d = random_gaussian(40, 3, 1);
  auto o = opts(0, 1);
  CHECK_THROWS_AS((void)run_vis(d, o), Error);
  o = opts(5, 1);
  o.nbest = -1;
  CHECK_THROWS_AS((void)run_vis(d, o), Error);
}
