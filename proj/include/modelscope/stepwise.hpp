#pragma once

#include <array>
#include <span>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/model_id.hpp"

namespace modelscope {

enum class Direction { Forward, Backward };

struct StepResult {
  ModelId model;
  std::vector<ModelId> path;  // starting model first
  std::vector<double> gic;    // GIC of each path entry
};

/// Greedy single-variable moves under GIC(lambda). Forward starts from the
/// null model and adds; backward starts from the full model and drops. Stops
/// when no move lowers the GIC.
StepResult step(const Dataset& d, Direction direction, double lambda);

struct ScreenResult {
  int lower = 0;  // smallest size searched, k_L - 2 clamped to [0, p]
  int upper = 0;  // largest size searched, k_U + 2 clamped to [0, p]
  std::array<int, 4> sizes{};  // forward-AIC, forward-BIC, backward-AIC, backward-BIC
};

/// Size bounds (in candidate variables) from four stepwise runs.
ScreenResult screen_sizes(const Dataset& d);

/// The clamp rule alone: (min - 2, max + 2) within [0, p].
ScreenResult screen_bounds(std::span<const int> sizes, int p);

}  // namespace modelscope
