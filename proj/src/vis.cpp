#include "modelscope/vis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"
#include "modelscope/parallel.hpp"
#include "modelscope/rng.hpp"

namespace modelscope {

Eigen::VectorXd bootstrap_weights(int n, std::uint64_t seed, int b) {
  auto engine = stream(seed, purpose::kVisWeights, static_cast<std::uint64_t>(b));
  std::exponential_distribution<double> exp1(1.0);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = exp1(engine);
  return w;
}

double VisResult::stability_of(ModelId m) const {
  const int k = m.size();
  if (k >= static_cast<int>(stability.size())) return 0.0;
  for (const auto& e : stability[k])
    if (e.model == m) return e.probability;
  return 0.0;
}

VipResult vip(const VisResult& v, double lambda_max, int points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "lambda grid needs at least two points");
  const int p = v.data.p();
  if (lambda_max < 0) lambda_max = 2.0 * std::log(static_cast<double>(v.data.n()));
  VipResult out;
  out.lambda_grid.resize(points);
  for (int i = 0; i < points; ++i) out.lambda_grid[i] = lambda_max * i / (points - 1);
  out.inclusion = Eigen::MatrixXd::Zero(p, points);
  int used = 0;
  for (const auto& row : v.per_replicate) {
    if (row.empty()) continue;
    ++used;
    SizeBestTable t;
    t.p = p;
    t.by_size.resize(p + 1);
    for (int k = 0; k <= p; ++k) t.by_size[k] = {row[k]};
    for (int i = 0; i < points; ++i) {
      const ModelId m = rank_within_size(t, out.lambda_grid[i]);
      for (int j = 0; j < p; ++j)
        if (m.contains(j)) out.inclusion(j, i) += 1.0;
    }
  }
  if (used > 0) out.inclusion /= used;
  out.legend_order.resize(p);
  std::iota(out.legend_order.begin(), out.legend_order.end(), 0);
  const Eigen::VectorXd mean = out.inclusion.rowwise().mean();
  std::stable_sort(out.legend_order.begin(), out.legend_order.end(),
                   [&](int a, int b) { return mean[a] > mean[b]; });
  return out;
}

VisResult run_vis(const Dataset& input, const VisOptions& options) {
  if (options.B < 1) throw Error(ErrorCode::InvalidArgument, "B must be at least 1");
  if (options.nbest < 0) throw Error(ErrorCode::InvalidArgument, "nbest must be positive or all");
  VisResult v{options.redundant ? add_redundant_variable(input, options.seed) : input};
  const Dataset& d = v.data;
  const int p = d.p();
  v.B = options.B;
  v.seed = options.seed;
  v.nbest = options.nbest;

  SearchOptions original_search = options.search;
  original_search.nbest = options.nbest;
  v.original = best_subsets(d, original_search);

  SearchOptions replicate_search = options.search;
  replicate_search.nbest = 1;
  replicate_search.min_size = 0;
  replicate_search.max_size = -1;
  v.per_replicate.assign(options.B, {});
  parallel_for(options.B, options.cores, [&](int b) {
    const Eigen::VectorXd w =
        options.unit_weights ? Eigen::VectorXd::Ones(d.n()) : bootstrap_weights(d.n(), options.seed, b);
    try {
      const auto t = best_subsets(d, replicate_search, &w);
      std::vector<SizeEntry> row(p + 1);
      for (int k = 0; k <= p; ++k) {
        const SizeEntry* e = t.best(k);
        if (!e) throw Error(ErrorCode::RankDeficient, "no model of size " + std::to_string(k));
        row[k] = *e;
      }
      v.per_replicate[b] = std::move(row);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
    }
  });
  v.skipped_replicates = static_cast<int>(std::count_if(
      v.per_replicate.begin(), v.per_replicate.end(), [](const auto& r) { return r.empty(); }));
  if (v.skipped_replicates * 10 > options.B)
    throw Error(ErrorCode::TooManySkipped, std::to_string(v.skipped_replicates) + " of " +
                                                std::to_string(options.B) + " replicates failed");

  const int used = v.replicates_used();
  v.stability.assign(p + 1, {});
  for (int k = 0; k <= p; ++k) {
    std::map<ModelId, int> counts;
    for (const auto& row : v.per_replicate)
      if (!row.empty()) ++counts[row[k].model];
    for (const auto& [m, c] : counts)
      v.stability[k].push_back({m, static_cast<double>(c) / used});
    std::sort(v.stability[k].begin(), v.stability[k].end(),
              [](const StabilityEntry& a, const StabilityEntry& b) {
                return a.probability != b.probability ? a.probability > b.probability
                                                      : a.model.mask < b.model.mask;
              });
  }

  FitOptions fo;
  fo.standard_errors = false;
  for (const auto& size : v.original.by_size)
    for (const auto& e : size) v.original_loglik[e.model] = -0.5 * e.q_hat;
  for (const auto& size : v.stability)
    for (const auto& e : size)
      if (!v.original_loglik.contains(e.model))
        v.original_loglik[e.model] = fit(d, e.model, nullptr, fo).loglik;

  auto vr = vip(v, options.lambda_max, options.lambda_points);
  v.lambda_grid = std::move(vr.lambda_grid);
  v.inclusion = std::move(vr.inclusion);
  v.legend_order = std::move(vr.legend_order);
  return v;
}

std::vector<StabilityRow> stability_table(const VisResult& v, double min_prob) {
  std::vector<StabilityRow> rows;
  for (int k = 0; k < static_cast<int>(v.stability.size()); ++k) {
    for (const auto& e : v.stability[k]) {
      if (e.probability < min_prob) continue;
      StabilityRow r;
      r.dimension = k + 1;
      r.model = e.model;
      r.formula = v.data.formula(e.model);
      r.probability = e.probability;
      r.loglik = v.original_loglik.at(e.model);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::vector<LvkPoint> lvk(const VisResult& v, const std::string& highlight) {
  const int j = v.data.index_of(highlight);
  std::vector<LvkPoint> out;
  for (int k = 0; k < static_cast<int>(v.original.by_size.size()); ++k)
    for (const auto& e : v.original.by_size[k])
      out.push_back({k + 1, e.q_hat, e.model.contains(j), e.model});
  return out;
}

}  // namespace modelscope
