#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/stepwise.hpp"
#include "modelscope/subset_search.hpp"

namespace modelscope {

enum class BestOnly { True = 0, False = 1 };

/// The c grid is on the negative log-likelihood scale: inside the fence at c
/// means q_hat - q_full <= kFenceLossScale * c.
inline constexpr double kFenceLossScale = 2.0;

struct AfOptions {
  int B = 150;
  int n_c = 50;
  std::optional<double> c_max;
  bool initial_stepwise = true;
  std::uint64_t seed = 0;
  int cores = 0;
  SearchOptions search;  // strategy and GLM threshold only
};

/// Smallest in-fence size with its members; `best` has the smallest q_hat.
struct FenceChoice {
  int size = 0;
  std::vector<SizeEntry> candidates;
  SizeEntry best;
};

/// One replicate's contribution at one c.
struct FenceSelection {
  ModelId model;
  int m = 1;  // same-size models inside the fence
};

struct PStar {
  double p_star = 0.0;
  std::optional<ModelId> argmax;  // unset when every selection contains RV
};

struct CurvePoint {
  double p_star = 0.0;
  std::optional<ModelId> argmax;
};

struct AfResult {
  Dataset data;
  std::vector<double> c_grid;
  int B = 0;
  std::uint64_t seed = 0;
  double q_full = 0.0;  // original-data full-model loss
  std::array<std::vector<CurvePoint>, 2> curves;  // indexed by BestOnly
  std::array<std::optional<double>, 2> c_star;
  std::optional<ScreenResult> screening;
  int skipped_replicates = 0;  // separated draws that were redrawn
  /// selections[b][i]: replicate b at c_grid[i].
  std::vector<std::vector<FenceSelection>> selections;

  const std::vector<CurvePoint>& curve(BestOnly mode) const {
    return curves[static_cast<int>(mode)];
  }
};

/// `table` holds, per size, the stored models of one replicate (ascending by
/// q_hat). The full model is always inside the fence for c >= 0, so it is
/// the answer when no stored size qualifies.
FenceChoice models_within_fence(const SizeBestTable& table, double q_full, double c);

PStar pstar(std::span<const FenceSelection> selections, BestOnly mode, std::optional<int> rv_index);

/// First peak of p*(c) after merging plateaus into their midpoints. nullopt
/// when the curve has no peak.
std::optional<double> first_peak(std::span<const double> c, std::span<const double> p_star);

/// Response drawn from the full-model fit for replicate b (attempt > 0 is a
/// redraw after separation).
Eigen::VectorXd parametric_draw(const Dataset& d, const Eigen::VectorXd& mean, double sigma,
                                std::uint64_t seed, int b, int attempt);

/// Default c_max: 20% above the largest original-data loss gap to the full
/// model over the searched sizes.
double default_c_max(const Dataset& d, int lo, int hi, const SearchOptions& search);

AfResult run_af(const Dataset& d, const AfOptions& options);

}  // namespace modelscope
