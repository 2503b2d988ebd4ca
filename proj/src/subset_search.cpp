#include "modelscope/subset_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"

namespace modelscope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack on bound comparisons so round-off in the downdates can never
// prune a subtree that holds a qualifying model.
constexpr double kBoundSlack = 1e-9;

using RssList = std::vector<std::pair<ModelId, double>>;

bool entry_less(const std::pair<ModelId, double>& a, const std::pair<ModelId, double>& b) {
  if (a.second != b.second) return a.second < b.second;
  return a.first.mask < b.first.mask;
}

struct TopPolicy {
  int nbest;
  int lo, hi;
  std::vector<RssList> heaps;  // max-heaps under entry_less when nbest > 0

  TopPolicy(int p, int n, int l, int h) : nbest(n), lo(l), hi(h), heaps(p + 1) {}

  double threshold(int k) const {
    if (nbest == kAllModels) return kInf;
    const auto& h = heaps[k];
    return static_cast<int>(h.size()) < nbest ? kInf : h.front().second;
  }
  void record(ModelId m, double rss) {
    const int k = m.size();
    if (k < lo || k > hi) return;
    auto& h = heaps[k];
    const std::pair<ModelId, double> e{m, rss};
    if (nbest == kAllModels) {
      h.push_back(e);
      return;
    }
    if (static_cast<int>(h.size()) < nbest) {
      h.push_back(e);
      std::push_heap(h.begin(), h.end(), entry_less);
    } else if (entry_less(e, h.front())) {
      std::pop_heap(h.begin(), h.end(), entry_less);
      h.back() = e;
      std::push_heap(h.begin(), h.end(), entry_less);
    }
  }
  bool prunable(double rss, int kmin, int kmax) const {
    for (int k = std::max(kmin, lo); k <= std::min(kmax, hi); ++k)
      if (!(rss > threshold(k) * (1.0 + kBoundSlack))) return false;
    return true;
  }
  std::vector<RssList> take() {
    for (auto& h : heaps) std::sort(h.begin(), h.end(), entry_less);
    return std::move(heaps);
  }
};

struct BelowPolicy {
  const std::vector<double>& limits;
  int lo, hi;
  std::vector<RssList> found;

  BelowPolicy(int p, const std::vector<double>& lim, int l, int h)
      : limits(lim), lo(l), hi(h), found(p + 1) {}

  void record(ModelId m, double rss) {
    const int k = m.size();
    if (k < lo || k > hi) return;
    if (rss <= limits[k]) found[k].push_back({m, rss});
  }
  bool prunable(double rss, int kmin, int kmax) const {
    for (int k = std::max(kmin, lo); k <= std::min(kmax, hi); ++k)
      if (!(rss > limits[k] * (1.0 + kBoundSlack))) return false;
    return true;
  }
  std::vector<RssList> take() {
    for (auto& f : found) std::sort(f.begin(), f.end(), entry_less);
    return std::move(found);
  }
};

struct Frame {
  ModelId mask;
  std::vector<int> vars;  // variables in the model, ascending
  Eigen::MatrixXd inv;    // inverse standardized Gram over `vars`
  Eigen::VectorXd beta;
  double rss = 0.0;
};

void downdate(const Frame& parent, int pos, Frame& child) {
  const Eigen::Index k = static_cast<Eigen::Index>(parent.vars.size());
  const double pivot = parent.inv(pos, pos);
  child.vars.clear();
  for (Eigen::Index i = 0; i < k; ++i)
    if (i != pos) child.vars.push_back(parent.vars[i]);
  child.inv.resize(k - 1, k - 1);
  child.beta.resize(k - 1);
  const double bq = parent.beta[pos] / pivot;
  for (Eigen::Index i = 0, ci = 0; i < k; ++i) {
    if (i == pos) continue;
    const double mi = parent.inv(i, pos) / pivot;
    child.beta[ci] = parent.beta[i] - parent.inv(i, pos) * bq;
    for (Eigen::Index j = 0, cj = 0; j < k; ++j) {
      if (j == pos) continue;
      child.inv(ci, cj) = parent.inv(i, j) - mi * parent.inv(pos, j);
      ++cj;
    }
    ++ci;
  }
  child.mask = parent.mask.without(parent.vars[pos]);
}

template <class Policy>
struct Walker {
  Policy& policy;
  int lo, hi;
  std::vector<Frame>& frames;
  std::int64_t nodes = 0;

  void expand(int depth, const std::vector<int>& deletable) {
    const Frame& f = frames[depth];
    const int k = static_cast<int>(f.vars.size());
    struct Child {
      double rss;
      int var;
      int pos;
    };
    std::vector<Child> children;
    children.reserve(deletable.size());
    for (int v : deletable) {
      const int pos = static_cast<int>(std::find(f.vars.begin(), f.vars.end(), v) - f.vars.begin());
      const double rss = std::max(f.rss, f.rss + f.beta[pos] * f.beta[pos] / f.inv(pos, pos));
      children.push_back({rss, v, pos});
    }
    // Cheapest deletions first: the first child owns the largest subtree and
    // fills the per-size bounds early.
    std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
      return a.rss != b.rss ? a.rss < b.rss : a.var < b.var;
    });
    std::vector<int> rest;
    for (std::size_t i = 0; i < children.size(); ++i) {
      const Child& c = children[i];
      const ModelId child_mask = f.mask.without(c.var);
      ++nodes;
      policy.record(child_mask, c.rss);
      const int remaining = static_cast<int>(children.size() - i - 1);
      if (remaining == 0) continue;
      const int kmin = k - 1 - remaining;
      const int kmax = k - 2;
      // An empty size range is prunable too.
      if (policy.prunable(c.rss, kmin, kmax)) continue;
      rest.clear();
      for (std::size_t j = i + 1; j < children.size(); ++j) rest.push_back(children[j].var);
      Frame& child = frames[depth + 1];
      downdate(f, c.pos, child);
      child.rss = c.rss;
      expand(depth + 1, rest);
    }
  }
};

int effective_hi(const SearchOptions& o, int p) {
  return o.max_size < 0 ? p : std::min(o.max_size, p);
}

template <class Visit>
void for_each_model(int p, int lo, int hi, Visit&& visit) {
  for (int k = lo; k <= hi; ++k) {
    if (k == 0) {
      visit(ModelId::null());
      continue;
    }
    // Gosper's hack over all k-subsets of p bits.
    std::uint64_t m = (std::uint64_t{1} << k) - 1;
    const std::uint64_t limit = std::uint64_t{1} << p;
    while (m < limit) {
      visit(ModelId{m});
      const std::uint64_t c = m & (~m + 1);
      const std::uint64_t r = m + c;
      m = (((r ^ m) >> 2) / c) | r;
    }
  }
}

void sort_sizes(SizeBestTable& t) {
  for (auto& v : t.by_size)
    std::sort(v.begin(), v.end(), [](const SizeEntry& a, const SizeEntry& b) {
      return a.q_hat != b.q_hat ? a.q_hat < b.q_hat : a.model.mask < b.model.mask;
    });
}

// Exact enumeration with one fit per model.
SizeBestTable exhaustive(const Dataset& d, int nbest, int lo, int hi, const Eigen::VectorXd* weights,
                         const std::vector<double>* thresholds) {
  SizeBestTable t;
  t.p = d.p();
  t.nbest = nbest;
  t.method = SearchMethod::Exhaustive;
  t.by_size.assign(d.p() + 1, {});
  FitOptions fo;
  fo.standard_errors = false;
  for_each_model(d.p(), lo, hi, [&](ModelId m) {
    ++t.nodes_evaluated;
    try {
      const auto f = fit(d, m, weights, fo);
      if (f.status == FitStatus::NonConvergence) ++t.non_converged;
      if (thresholds && !(f.q_hat <= (*thresholds)[m.size()])) return;
      t.by_size[m.size()].push_back({m, f.q_hat});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
      ++t.skipped;
    }
  });
  sort_sizes(t);
  if (nbest != kAllModels)
    for (auto& v : t.by_size)
      if (static_cast<int>(v.size()) > nbest) v.resize(nbest);
  return t;
}

SizeBestTable from_rss(const Dataset& d, const GaussianSubsetEngine& engine,
                       std::vector<RssList> lists, SearchMethod method, int nbest, bool refit,
                       const Eigen::VectorXd* weights) {
  SizeBestTable t;
  t.p = d.p();
  t.nbest = nbest;
  t.method = method;
  t.by_size.assign(d.p() + 1, {});
  FitOptions fo;
  fo.standard_errors = false;
  for (int k = 0; k <= d.p(); ++k) {
    for (const auto& [m, rss] : lists[k]) {
      const double q = refit ? fit(d, m, weights, fo).q_hat : gaussian_q_hat(rss, engine.weight_sum());
      t.by_size[k].push_back({m, q});
    }
  }
  sort_sizes(t);
  return t;
}

// GLM search through the weighted least-squares surrogate of the weighted
// full fit; candidates are refit exactly and re-ranked.
SizeBestTable surrogate_search(const Dataset& d, int nbest, int lo, int hi,
                               const Eigen::VectorXd* weights, const std::vector<double>* thresholds) {
  FitOptions fo;
  fo.standard_errors = false;
  const auto full = fit(d, ModelId::full(d.p()), weights, fo);
  const Eigen::Index n = d.n();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = full.linear_predictor[i] + full.working_residuals[i];
  GaussianSubsetEngine engine(d.x(), z, full.working_weights);
  std::int64_t nodes = 0;
  std::vector<RssList> lists;
  if (thresholds) {
    // deviance(a) ~ deviance(full) + RSS_v(a) - RSS_v(full); widen the
    // translated limit so near-boundary models are refit rather than missed.
    const double rss_full = engine.best_rss(1, d.p(), d.p()).at(d.p()).front().second;
    std::vector<double> limits(d.p() + 1);
    for (int k = 0; k <= d.p(); ++k)
      limits[k] = rss_full + 1.5 * std::max(0.0, (*thresholds)[k] - full.q_hat) + 2.0;
    lists = engine.rss_below(limits, lo, hi, &nodes);
  } else {
    const int keep = std::max(3 * nbest, 10);
    lists = engine.best_rss(keep, lo, hi, &nodes);
  }
  SizeBestTable t;
  t.p = d.p();
  t.nbest = nbest;
  t.method = SearchMethod::Surrogate;
  t.by_size.assign(d.p() + 1, {});
  t.nodes_evaluated = nodes;
  for (int k = 0; k <= d.p(); ++k) {
    for (const auto& entry : lists[k]) {
      const ModelId m = entry.first;
      try {
        const auto f = fit(d, m, weights, fo);
        if (f.status == FitStatus::NonConvergence) ++t.non_converged;
        if (thresholds && !(f.q_hat <= (*thresholds)[k])) continue;
        t.by_size[k].push_back({m, f.q_hat});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) throw;
        ++t.skipped;
      }
    }
  }
  sort_sizes(t);
  if (!thresholds)
    for (auto& v : t.by_size)
      if (static_cast<int>(v.size()) > nbest) v.resize(nbest);
  return t;
}

enum class Route { Exhaustive, BranchAndBound, Surrogate };

Route choose_route(const Dataset& d, const SearchOptions& o) {
  switch (o.strategy) {
    case SearchStrategy::Exhaustive: return Route::Exhaustive;
    case SearchStrategy::BranchAndBound:
      if (!d.family().is_gaussian())
        throw Error(ErrorCode::InvalidArgument, "branch-and-bound search needs a gaussian model");
      return Route::BranchAndBound;
    case SearchStrategy::Surrogate:
      if (d.family().kind() != FamilyKind::Binomial)
        throw Error(ErrorCode::InvalidArgument, "surrogate search needs a binomial model");
      return Route::Surrogate;
    case SearchStrategy::Auto: break;
  }
  if (d.family().is_gaussian()) return Route::BranchAndBound;
  if (d.p() <= o.exhaustive_threshold || o.nbest == kAllModels ||
      d.family().kind() != FamilyKind::Binomial)
    return Route::Exhaustive;
  return Route::Surrogate;
}

}  // namespace

const char* to_string(SearchMethod m) {
  switch (m) {
    case SearchMethod::Exhaustive: return "exhaustive";
    case SearchMethod::BranchAndBound: return "branch_and_bound";
    case SearchMethod::Surrogate: return "surrogate";
  }
  return "exhaustive";
}

GaussianSubsetEngine::GaussianSubsetEngine(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& w)
    : p_(static_cast<int>(x.cols())) {
  weight_sum_ = w.sum();
  const Eigen::VectorXd xbar = (x.transpose() * w) / weight_sum_;
  const double ybar = w.dot(y) / weight_sum_;
  const Eigen::MatrixXd xc = x.rowwise() - xbar.transpose();
  const Eigen::VectorXd yc = y.array() - ybar;
  const Eigen::MatrixXd xw = w.asDiagonal() * xc;
  gram_ = xc.transpose() * xw;
  cross_ = xw.transpose() * yc;
  syy_ = (w.array() * yc.array().square()).sum();
  for (int j = 0; j < p_; ++j) {
    if (!(gram_(j, j) > 0.0))
      throw Error(ErrorCode::RankDeficient, "column " + std::to_string(j + 1) + " is constant under the weights");
  }
  const Eigen::VectorXd scale = gram_.diagonal().cwiseSqrt().cwiseInverse();
  gram_ = scale.asDiagonal() * gram_ * scale.asDiagonal();
  cross_ = cross_.cwiseProduct(scale);
}

template <class Policy>
void GaussianSubsetEngine::traverse(Policy& policy, int lo, int hi, std::int64_t* nodes) const {
  std::vector<Frame> frames(p_ + 1);
  Frame& root = frames[0];
  root.mask = ModelId::full(p_);
  root.vars.resize(p_);
  for (int j = 0; j < p_; ++j) root.vars[j] = j;
  if (p_ > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-12))
      throw Error(ErrorCode::RankDeficient, "full model is rank deficient under the weights");
    root.inv = ldlt.solve(Eigen::MatrixXd::Identity(p_, p_));
    root.inv = 0.5 * (root.inv + root.inv.transpose()).eval();
    root.beta = root.inv * cross_;
    root.rss = std::max(0.0, syy_ - cross_.dot(root.beta));
  } else {
    root.rss = syy_;
  }
  Walker<Policy> walker{policy, lo, hi, frames};
  ++walker.nodes;
  policy.record(root.mask, root.rss);
  if (p_ > 0 && !policy.prunable(root.rss, 0, p_ - 1)) walker.expand(0, root.vars);
  if (nodes) *nodes += walker.nodes;
}

std::vector<RssList> GaussianSubsetEngine::best_rss(int nbest, int lo, int hi,
                                                    std::int64_t* nodes) const {
  TopPolicy policy(p_, nbest, lo, hi);
  traverse(policy, lo, hi, nodes);
  return policy.take();
}

std::vector<RssList> GaussianSubsetEngine::rss_below(const std::vector<double>& limits, int lo,
                                                     int hi, std::int64_t* nodes) const {
  BelowPolicy policy(p_, limits, lo, hi);
  traverse(policy, lo, hi, nodes);
  return policy.take();
}

SizeBestTable best_subsets(const Dataset& d, const SearchOptions& options,
                           const Eigen::VectorXd* weights) {
  if (options.nbest < 0) throw Error(ErrorCode::InvalidArgument, "nbest must be positive or all");
  const int lo = std::max(0, options.min_size);
  const int hi = effective_hi(options, d.p());
  switch (choose_route(d, options)) {
    case Route::Exhaustive: return exhaustive(d, options.nbest, lo, hi, weights, nullptr);
    case Route::Surrogate: return surrogate_search(d, options.nbest, lo, hi, weights, nullptr);
    case Route::BranchAndBound: break;
  }
  const Eigen::VectorXd w = d.combined_weights(weights);
  GaussianSubsetEngine engine(d.x(), d.y(), w);
  std::int64_t nodes = 0;
  auto lists = engine.best_rss(options.nbest, lo, hi, &nodes);
  auto t = from_rss(d, engine, std::move(lists), SearchMethod::BranchAndBound, options.nbest,
                    options.refit_reported, weights);
  t.nodes_evaluated = nodes;
  return t;
}

SizeBestTable models_within(const Dataset& d, const std::vector<double>& thresholds,
                            const SearchOptions& options, const Eigen::VectorXd* weights) {
  if (static_cast<int>(thresholds.size()) != d.p() + 1)
    throw Error(ErrorCode::InvalidArgument, "need one threshold per model size");
  const int lo = std::max(0, options.min_size);
  const int hi = effective_hi(options, d.p());
  switch (choose_route(d, options)) {
    case Route::Exhaustive: return exhaustive(d, kAllModels, lo, hi, weights, &thresholds);
    case Route::Surrogate: return surrogate_search(d, kAllModels, lo, hi, weights, &thresholds);
    case Route::BranchAndBound: break;
  }
  const Eigen::VectorXd w = d.combined_weights(weights);
  GaussianSubsetEngine engine(d.x(), d.y(), w);
  std::vector<double> limits(d.p() + 1);
  for (int k = 0; k <= d.p(); ++k)
    limits[k] = std::isfinite(thresholds[k]) ? gaussian_rss_for(thresholds[k], engine.weight_sum())
                                             : thresholds[k];
  std::int64_t nodes = 0;
  auto lists = engine.rss_below(limits, lo, hi, &nodes);
  auto t = from_rss(d, engine, std::move(lists), SearchMethod::BranchAndBound, kAllModels, false,
                    weights);
  // The RSS->q map is monotone but round-off can push a boundary model over.
  for (int k = 0; k <= d.p(); ++k)
    std::erase_if(t.by_size[k], [&](const SizeEntry& e) { return !(e.q_hat <= thresholds[k]); });
  t.nodes_evaluated = nodes;
  return t;
}

ModelId rank_within_size(const SizeBestTable& table, double lambda) {
  ModelId best;
  double best_gic = kInf;
  bool found = false;
  for (int k = 0; k < static_cast<int>(table.by_size.size()); ++k) {
    const SizeEntry* e = table.best(k);
    if (!e) continue;
    const double g = gic(e->q_hat, k + 1, lambda);
    if (!found || g < best_gic) {
      best = e->model;
      best_gic = g;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::InvalidArgument, "empty model table");
  return best;
}

}  // namespace modelscope
