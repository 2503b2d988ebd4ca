#include "modelscope/stepwise.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"

namespace modelscope {

namespace {

std::optional<double> gic_of(const Dataset& d, ModelId m, double lambda) {
  FitOptions fo;
  fo.standard_errors = false;
  try {
    return gic(fit(d, m, nullptr, fo).q_hat, m.dimension(), lambda);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient) return std::nullopt;
    throw;
  }
}

}  // namespace

StepResult step(const Dataset& d, Direction direction, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be non-negative");
  const bool forward = direction == Direction::Forward;
  ModelId current = forward ? ModelId::null() : ModelId::full(d.p());
  auto start = gic_of(d, current, lambda);
  if (!start) throw Error(ErrorCode::RankDeficient, "starting model is rank deficient");
  StepResult out;
  out.path.push_back(current);
  out.gic.push_back(*start);
  double current_gic = *start;
  for (;;) {
    std::optional<ModelId> best;
    double best_gic = current_gic;
    for (int j = 0; j < d.p(); ++j) {
      if (current.contains(j) == forward) continue;
      const ModelId cand = forward ? current.with(j) : current.without(j);
      const auto g = gic_of(d, cand, lambda);
      if (!g) continue;
      if (*g < best_gic - 1e-12 || (best && *g == best_gic && simpler(cand, *best))) {
        best = cand;
        best_gic = *g;
      }
    }
    if (!best) break;
    current = *best;
    current_gic = best_gic;
    out.path.push_back(current);
    out.gic.push_back(current_gic);
  }
  out.model = current;
  return out;
}

ScreenResult screen_bounds(std::span<const int> sizes, int p) {
  if (sizes.empty()) throw Error(ErrorCode::InvalidArgument, "no stepwise sizes given");
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  ScreenResult r;
  r.lower = std::clamp(*lo - 2, 0, p);
  r.upper = std::clamp(*hi + 2, 0, p);
  return r;
}

ScreenResult screen_sizes(const Dataset& d) {
  const double aic = 2.0;
  const double bic = std::log(static_cast<double>(d.n()));
  std::array<int, 4> sizes{
      step(d, Direction::Forward, aic).model.size(), step(d, Direction::Forward, bic).model.size(),
      step(d, Direction::Backward, aic).model.size(), step(d, Direction::Backward, bic).model.size()};
  ScreenResult r = screen_bounds(sizes, d.p());
  r.sizes = sizes;
  return r;
}

}  // namespace modelscope
