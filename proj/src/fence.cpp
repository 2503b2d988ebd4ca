#include "modelscope/fence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"
#include "modelscope/parallel.hpp"
#include "modelscope/rng.hpp"

namespace modelscope {

namespace {

constexpr double kPlateauTol = 1e-12;
constexpr double kMinProminence = 0.1;

}  // namespace

FenceChoice models_within_fence(const SizeBestTable& table, double q_full, double c) {
  for (int k = 0; k < static_cast<int>(table.by_size.size()); ++k) {
    const auto& models = table.by_size[k];
    std::size_t inside = 0;
    while (inside < models.size() && models[inside].q_hat - q_full <= c) ++inside;
    if (inside == 0) continue;
    FenceChoice out;
    out.size = k;
    out.candidates.assign(models.begin(), models.begin() + static_cast<std::ptrdiff_t>(inside));
    out.best = out.candidates.front();
    return out;
  }
  FenceChoice out;
  out.size = table.p;
  out.best = {ModelId::full(table.p), q_full};
  out.candidates = {out.best};
  return out;
}

PStar pstar(std::span<const FenceSelection> selections, BestOnly mode, std::optional<int> rv_index) {
  PStar out;
  if (selections.empty()) return out;
  std::map<ModelId, double> tally;
  for (const auto& s : selections) {
    if (rv_index && s.model.contains(*rv_index)) continue;
    tally[s.model] += mode == BestOnly::True ? 1.0 : 1.0 / s.m;
  }
  double best = -1.0;
  for (const auto& [m, w] : tally) {
    if (w > best || (w == best && simpler(m, *out.argmax))) {
      best = w;
      out.argmax = m;
    }
  }
  out.p_star = out.argmax ? best / static_cast<double>(selections.size()) : 0.0;
  return out;
}

std::optional<double> first_peak(std::span<const double> c, std::span<const double> p_star) {
  if (c.size() != p_star.size()) throw Error(ErrorCode::InvalidArgument, "grid and curve lengths differ");
  if (c.size() < 3) throw Error(ErrorCode::InvalidArgument, "peak detection needs at least 3 points");
  struct Plateau {
    double value, c_start, c_mid;
    std::size_t length;
  };
  std::vector<Plateau> runs;
  for (std::size_t i = 0; i < c.size();) {
    std::size_t j = i;
    while (j + 1 < c.size() && std::abs(p_star[j + 1] - p_star[i]) <= kPlateauTol) ++j;
    runs.push_back({p_star[i], c[i], 0.5 * (c[i] + c[j]), j - i + 1});
    i = j + 1;
  }
  // Topographic prominence: drop to the lower of the two bases, each base being
  // the lowest point before the curve climbs strictly higher (or ends).
  auto prominence = [&](std::size_t r) {
    double left = runs[r].value, right = runs[r].value;
    for (std::size_t i = r; i-- > 0 && runs[i].value <= runs[r].value;) left = std::min(left, runs[i].value);
    for (std::size_t i = r + 1; i < runs.size() && runs[i].value <= runs[r].value; ++i)
      right = std::min(right, runs[i].value);
    return runs[r].value - std::max(left, right);
  };
  for (std::size_t r = 1; r + 1 < runs.size(); ++r)
    if (runs[r].value > runs[r - 1].value && runs[r].value > runs[r + 1].value &&
        prominence(r) >= kMinProminence)
      return runs[r].c_mid;
  // No strict interior maximum: take the first interior plateau that is at
  // least as high as everything before it.
  double highest = runs.front().value;
  for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
    if (runs[r].length >= 2 && runs[r].value >= highest) return runs[r].c_start;
    highest = std::max(highest, runs[r].value);
  }
  return std::nullopt;
}

Eigen::VectorXd parametric_draw(const Dataset& d, const Eigen::VectorXd& mean, double sigma,
                                std::uint64_t seed, int b, int attempt) {
  auto engine = stream(seed, purpose::kFence + (static_cast<std::uint32_t>(attempt) << 16),
                       static_cast<std::uint64_t>(b));
  const int n = d.n();
  Eigen::VectorXd y(n);
  switch (d.family().kind()) {
    case FamilyKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int i = 0; i < n; ++i) {
        const double scale = d.case_weights() ? sigma / std::sqrt((*d.case_weights())[i]) : sigma;
        y[i] = mean[i] + scale * normal(engine);
      }
      break;
    }
    case FamilyKind::Binomial:
      for (int i = 0; i < n; ++i) y[i] = std::bernoulli_distribution(mean[i])(engine) ? 1.0 : 0.0;
      break;
    case FamilyKind::Poisson:
      for (int i = 0; i < n; ++i)
        y[i] = static_cast<double>(std::poisson_distribution<long long>(mean[i])(engine));
      break;
  }
  return y;
}

double default_c_max(const Dataset& d, int lo, int hi, const SearchOptions& search) {
  SearchOptions so = search;
  so.nbest = 1;
  so.min_size = lo;
  so.max_size = hi;
  FitOptions fo;
  fo.standard_errors = false;
  const double q_full = fit(d, ModelId::full(d.p()), nullptr, fo).q_hat;
  const auto table = best_subsets(d, so);
  double gap = 0.0;
  for (int k = lo; k <= hi; ++k)
    if (const auto* e = table.best(k)) gap = std::max(gap, e->q_hat - q_full);
  if (!(gap > 0.0)) gap = fit(d, ModelId::null(), nullptr, fo).q_hat - q_full;
  return 1.2 * gap / kFenceLossScale;
}

AfResult run_af(const Dataset& d, const AfOptions& options) {
  if (!d.rv_index())
    throw Error(ErrorCode::InvalidArgument, "the adaptive fence needs a redundant variable column");
  if (options.B < 1) throw Error(ErrorCode::InvalidArgument, "B must be at least 1");
  if (options.n_c < 2) throw Error(ErrorCode::InvalidArgument, "n_c must be at least 2");
  if (options.c_max && !(*options.c_max > 0.0))
    throw Error(ErrorCode::InvalidArgument, "c_max must be positive");

  const int p = d.p();
  AfResult r{d};
  r.B = options.B;
  r.seed = options.seed;

  FitOptions fo;
  fo.standard_errors = false;
  const auto full = fit(d, ModelId::full(p), nullptr, fo);
  r.q_full = full.q_hat;

  int lo = 0, hi = p;
  if (options.initial_stepwise) {
    r.screening = screen_sizes(d);
    lo = r.screening->lower;
    hi = r.screening->upper;
  }
  const double c_max = options.c_max ? *options.c_max : default_c_max(d, lo, hi, options.search);
  r.c_grid.resize(options.n_c);
  for (int i = 0; i < options.n_c; ++i) r.c_grid[i] = c_max * i / (options.n_c - 1);

  double sigma = 0.0;
  if (d.family().is_gaussian()) sigma = std::sqrt(full.rss / (full.n_effective - full.dimension()));

  SearchOptions best_search = options.search;
  best_search.nbest = 1;
  best_search.min_size = lo;
  best_search.max_size = hi;
  best_search.refit_reported = false;
  SearchOptions within_search = best_search;

  const int max_redraws = options.B / 10 + 1;
  std::vector<int> redraws(options.B, 0);
  r.selections.assign(options.B, {});
  parallel_for(options.B, options.cores, [&](int b) {
    std::optional<Dataset> star;
    FitResult star_full;
    for (int attempt = 0;; ++attempt) {
      if (attempt > max_redraws)
        throw Error(ErrorCode::TooManySkipped, "replicate " + std::to_string(b) +
                                                   " kept producing separated responses");
      star.emplace(d.with_response(parametric_draw(d, full.fitted, sigma, options.seed, b, attempt)));
      try {
        star_full = fit(*star, ModelId::full(p), nullptr, fo);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) throw;
        ++redraws[b];
        continue;
      }
      if (star_full.status != FitStatus::Separation) break;
      ++redraws[b];
    }
    const double q_full = star_full.q_hat;
    const auto bests = best_subsets(*star, best_search);
    std::vector<double> limits(p + 1, -std::numeric_limits<double>::infinity());
    double smaller_best = std::numeric_limits<double>::infinity();
    for (int k = lo; k <= hi; ++k) {
      limits[k] = std::min(q_full + kFenceLossScale * c_max, smaller_best);
      if (const auto* e = bests.best(k)) smaller_best = std::min(smaller_best, e->q_hat);
    }
    const auto within = models_within(*star, limits, within_search);
    auto& sel = r.selections[b];
    sel.reserve(r.c_grid.size());
    for (double c : r.c_grid) {
      const auto choice = models_within_fence(within, q_full, kFenceLossScale * c);
      sel.push_back({choice.best.model, static_cast<int>(choice.candidates.size())});
    }
  });
  for (int v : redraws) r.skipped_replicates += v;
  if (r.skipped_replicates * 10 > options.B)
    throw Error(ErrorCode::TooManySkipped, std::to_string(r.skipped_replicates) +
                                               " separated bootstrap responses exceed 10% of B");

  std::vector<FenceSelection> column(options.B);
  for (int mode = 0; mode < 2; ++mode) {
    auto& curve = r.curves[mode];
    curve.resize(r.c_grid.size());
    for (std::size_t i = 0; i < r.c_grid.size(); ++i) {
      for (int b = 0; b < options.B; ++b) column[b] = r.selections[b][i];
      const auto ps = pstar(column, static_cast<BestOnly>(mode), d.rv_index());
      curve[i] = {ps.p_star, ps.argmax};
    }
    if (r.c_grid.size() >= 3) {
      std::vector<double> values(curve.size());
      for (std::size_t i = 0; i < curve.size(); ++i) values[i] = curve[i].p_star;
      r.c_star[mode] = first_peak(r.c_grid, values);
    }
  }
  return r;
}

}  // namespace modelscope
