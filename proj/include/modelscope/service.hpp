#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/fence.hpp"
#include "modelscope/stepwise.hpp"
#include "modelscope/vis.hpp"

namespace modelscope::service {

inline constexpr const char* kSchemaVersion = "1.0";
const char* engine_version();

enum class Command { Fit, Step, Vis, Af, Serve, Export };

struct RunConfig {
  Command command = Command::Vis;
  std::string data;
  std::string response;
  std::string family = "gaussian";
  std::vector<std::string> factors;  // "col" or "col:l1|l2|..."
  int B = 150;
  int nbest = 5;  // kAllModels for "all"
  bool redundant = true;
  int n_c = 50;
  std::optional<double> c_max;
  bool initial_stepwise = true;
  bool best_only = true;
  double min_prob = 0.3;
  std::optional<std::string> highlight;
  std::optional<double> lambda_max;  // unset: 2 log n
  std::optional<std::uint64_t> seed;
  int cores = 0;  // 0: available - 1
  std::string out = ".";
  bool plots = false;
  bool surrogate = false;  // GLM: run on the weighted least squares surrogate
  std::vector<std::string> model;  // fit: variables (empty: full model)
  std::string direction = "backward";
  double lambda = 2.0;  // step penalty
};

Command parse_command(const std::string& s);
const char* to_string(Command c);

/// Parses and validates. Unknown keys and out-of-range values throw
/// Error(InvalidArgument).
RunConfig config_from_json(const nlohmann::json& j);
void validate(const RunConfig& cfg);
/// Reproducibility record: every field except cores and out.
nlohmann::json to_json(const RunConfig& cfg);

Dataset load_dataset(const RunConfig& cfg);
nlohmann::json columns_json(const Dataset& d);

nlohmann::json fit_json(const Dataset& d, ModelId m);
nlohmann::json step_json(const Dataset& d, Direction dir, double lambda);
nlohmann::json vis_json(const VisResult& v, const RunConfig& cfg);
nlohmann::json af_json(const AfResult& a, const RunConfig& cfg);

VisOptions vis_options(const RunConfig& cfg);
AfOptions af_options(const RunConfig& cfg);

/// Runs fit/step/vis/af for the config and returns the result document.
nlohmann::json execute(const RunConfig& cfg);

/// Static plots from a result document. kind: lvk, boot, vip (vis) or af.
std::string render_svg(const nlohmann::json& doc, const std::string& kind);

}  // namespace modelscope::service
