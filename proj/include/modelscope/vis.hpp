#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/subset_search.hpp"

namespace modelscope {

struct VisOptions {
  int B = 150;
  int nbest = 5;  // kAllModels keeps every model in the original table
  bool redundant = true;
  std::uint64_t seed = 0;
  int cores = 0;  // 0: all hardware threads but one
  double lambda_max = -1.0;  // < 0: 2 log n
  int lambda_points = 101;
  SearchOptions search;  // strategy and GLM threshold; nbest is ignored
  /// Test hook: every replicate gets unit weights.
  bool unit_weights = false;
};

struct StabilityEntry {
  ModelId model;
  double probability = 0.0;
};

struct VisResult {
  Dataset data;  // includes the RV column when it was added
  int B = 0;
  std::uint64_t seed = 0;
  int nbest = 5;
  int skipped_replicates = 0;
  /// per_replicate[b][k]: best size-k model under w_b; empty row if skipped.
  std::vector<std::vector<SizeEntry>> per_replicate;
  SizeBestTable original;
  /// stability[k]: selection frequency of each size-k model, descending.
  std::vector<std::vector<StabilityEntry>> stability;
  /// Log-likelihood on the original (unweighted) data of every model that
  /// appears in `stability` or `original`.
  std::map<ModelId, double> original_loglik;
  std::vector<double> lambda_grid;
  Eigen::MatrixXd inclusion;     // p x |grid|
  std::vector<int> legend_order;  // variables by descending mean inclusion

  int replicates_used() const { return B - skipped_replicates; }
  double stability_of(ModelId m) const;
};

/// Exp(1) weights of replicate b.
Eigen::VectorXd bootstrap_weights(int n, std::uint64_t seed, int b);

VisResult run_vis(const Dataset& d, const VisOptions& options);

struct VipResult {
  std::vector<double> lambda_grid;
  Eigen::MatrixXd inclusion;
  std::vector<int> legend_order;
};

/// Inclusion probabilities over a grid from per-replicate size-wise bests.
VipResult vip(const VisResult& v, double lambda_max = -1.0, int points = 101);

struct StabilityRow {
  int dimension = 0;  // parameters including the intercept
  ModelId model;
  std::string formula;
  double probability = 0.0;
  double loglik = 0.0;
};

std::vector<StabilityRow> stability_table(const VisResult& v, double min_prob = 0.3);

struct LvkPoint {
  int dimension = 0;
  double q_hat = 0.0;
  bool highlighted = false;
  ModelId model;
};

/// Loss against dimension for every model in the original table. Throws
/// UnknownVariable for an unknown highlight.
std::vector<LvkPoint> lvk(const VisResult& v, const std::string& highlight);

}  // namespace modelscope
