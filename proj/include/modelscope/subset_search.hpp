#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/model_id.hpp"

namespace modelscope {

enum class SearchMethod { Exhaustive, BranchAndBound, Surrogate };

const char* to_string(SearchMethod m);

struct SizeEntry {
  ModelId model;
  double q_hat = 0.0;
};

/// Per model size k (number of candidate variables, 0..p) the best models by
/// q_hat, ascending. Sizes outside the searched range are left empty.
struct SizeBestTable {
  int p = 0;
  int nbest = 1;  // 0 means every model was kept
  SearchMethod method = SearchMethod::Exhaustive;
  std::vector<std::vector<SizeEntry>> by_size;
  int skipped = 0;               // rank-deficient submodels
  int non_converged = 0;         // GLM fits that hit the iteration cap
  std::int64_t nodes_evaluated = 0;

  const SizeEntry* best(int k) const {
    return k >= 0 && k < static_cast<int>(by_size.size()) && !by_size[k].empty() ? &by_size[k].front()
                                                                                  : nullptr;
  }
};

inline constexpr int kAllModels = 0;

enum class SearchStrategy { Auto, Exhaustive, BranchAndBound, Surrogate };

struct SearchOptions {
  int nbest = 1;  // kAllModels for every model
  int min_size = 0;
  int max_size = -1;  // -1: p
  SearchStrategy strategy = SearchStrategy::Auto;
  /// GLMs with at most this many candidates are enumerated with exact fits.
  int exhaustive_threshold = 15;
  /// Recompute the reported q_hat of kept gaussian models with a QR fit.
  bool refit_reported = true;
};

/// Best `nbest` models of every size under the (optional) likelihood weights.
SizeBestTable best_subsets(const Dataset& d, const SearchOptions& options,
                           const Eigen::VectorXd* weights = nullptr);

/// Every model of size k with q_hat <= thresholds[k], ascending per size.
/// Used by the fence, which needs exact counts of in-fence models.
SizeBestTable models_within(const Dataset& d, const std::vector<double>& thresholds,
                            const SearchOptions& options, const Eigen::VectorXd* weights = nullptr);

/// GIC minimizer over sizes, using only the best model per size. Ties go to
/// the smaller size.
ModelId rank_within_size(const SizeBestTable& table, double lambda);

/// Branch-and-bound over the deletion tree of a gaussian regression with an
/// intercept always included. Works on the centred, standardized weighted
/// cross-product matrix; a child's RSS follows from its parent's inverse in
/// O(1), so only expanded nodes pay O(k^2).
class GaussianSubsetEngine {
 public:
  GaussianSubsetEngine(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

  int p() const { return p_; }
  double weight_sum() const { return weight_sum_; }
  double total_ss() const { return syy_; }

  /// Per-size top-n by RSS (n == 0 keeps all) restricted to sizes [lo, hi].
  std::vector<std::vector<std::pair<ModelId, double>>> best_rss(int nbest, int lo, int hi,
                                                                std::int64_t* nodes = nullptr) const;
  /// Every model of size k in [lo, hi] with RSS <= limits[k].
  std::vector<std::vector<std::pair<ModelId, double>>> rss_below(const std::vector<double>& limits,
                                                                 int lo, int hi,
                                                                 std::int64_t* nodes = nullptr) const;

 private:
  template <class Policy>
  void traverse(Policy& policy, int lo, int hi, std::int64_t* nodes) const;

  int p_ = 0;
  double weight_sum_ = 0.0;
  double syy_ = 0.0;
  Eigen::MatrixXd gram_;   // standardized, p x p
  Eigen::VectorXd cross_;  // standardized X'Wy
};

}  // namespace modelscope
