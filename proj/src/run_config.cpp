#include <cmath>
#include <limits>
#include <set>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"
#include "modelscope/service.hpp"

#ifndef MODELSCOPE_VERSION
#define MODELSCOPE_VERSION "0.0.0"
#endif

namespace modelscope::service {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(std::string("config field '") + key + "' has the wrong type");
  }
}

int get_count(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) invalid(std::string("config field '") + key + "' must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    invalid(std::string("config field '") + key + "' is out of range");
  return static_cast<int>(x);
}

const std::set<std::string> kKnownKeys = {
    "command", "data",      "response", "family",    "factors",          "B",
    "nbest",   "redundant", "n_c",      "c_max",     "initial_stepwise", "best_only",
    "min_prob", "highlight", "lambda_max", "seed",   "cores",            "out",
    "plots",   "surrogate", "model",    "direction", "lambda"};

}  // namespace

const char* engine_version() { return MODELSCOPE_VERSION; }

Command parse_command(const std::string& s) {
  if (s == "fit") return Command::Fit;
  if (s == "step") return Command::Step;
  if (s == "vis") return Command::Vis;
  if (s == "af") return Command::Af;
  if (s == "serve") return Command::Serve;
  if (s == "export") return Command::Export;
  invalid("unknown command '" + s + "'");
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Fit: return "fit";
    case Command::Step: return "step";
    case Command::Vis: return "vis";
    case Command::Af: return "af";
    case Command::Serve: return "serve";
    case Command::Export: return "export";
  }
  return "?";
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKnownKeys.count(key)) invalid("unknown config field '" + key + "'");

  RunConfig c;
  auto has = [&](const char* k) { return j.contains(k) && !j.at(k).is_null(); };
  if (has("command")) c.command = parse_command(get_as<std::string>(j, "command"));
  if (has("data")) c.data = get_as<std::string>(j, "data");
  if (has("response")) c.response = get_as<std::string>(j, "response");
  if (has("family")) c.family = get_as<std::string>(j, "family");
  if (has("factors")) c.factors = get_as<std::vector<std::string>>(j, "factors");
  if (has("B")) c.B = get_count(j, "B");
  if (has("nbest")) {
    const auto& v = j.at("nbest");
    if (v.is_string()) {
      if (v.get<std::string>() != "all") invalid("nbest must be a positive integer or \"all\"");
      c.nbest = kAllModels;
    } else {
      c.nbest = get_count(j, "nbest");
      if (c.nbest < 1) invalid("nbest must be a positive integer or \"all\"");
    }
  }
  if (has("redundant")) c.redundant = get_as<bool>(j, "redundant");
  if (has("n_c")) c.n_c = get_count(j, "n_c");
  if (has("c_max")) c.c_max = get_as<double>(j, "c_max");
  if (has("initial_stepwise")) c.initial_stepwise = get_as<bool>(j, "initial_stepwise");
  if (has("best_only")) c.best_only = get_as<bool>(j, "best_only");
  if (has("min_prob")) c.min_prob = get_as<double>(j, "min_prob");
  if (has("highlight")) c.highlight = get_as<std::string>(j, "highlight");
  if (has("lambda_max")) c.lambda_max = get_as<double>(j, "lambda_max");
  if (has("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      invalid("seed must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (has("cores")) c.cores = get_count(j, "cores");
  if (has("out")) c.out = get_as<std::string>(j, "out");
  if (has("plots")) c.plots = get_as<bool>(j, "plots");
  if (has("surrogate")) c.surrogate = get_as<bool>(j, "surrogate");
  if (has("model")) c.model = get_as<std::vector<std::string>>(j, "model");
  if (has("direction")) c.direction = get_as<std::string>(j, "direction");
  if (has("lambda")) c.lambda = get_as<double>(j, "lambda");
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  const bool runs = c.command == Command::Fit || c.command == Command::Step ||
                    c.command == Command::Vis || c.command == Command::Af;
  if (runs) {
    if (c.data.empty()) invalid("data path is required");
    if (c.response.empty()) invalid("response column is required");
    (void)ModelFamily::parse(c.family);
    for (const auto& f : c.factors) (void)FactorSpec::parse(f);
  }
  if ((c.command == Command::Vis || c.command == Command::Af) && !c.seed)
    invalid("seed is required for vis and af runs");
  if (c.B < 1) invalid("B must be at least 1");
  if (c.nbest < 0) invalid("nbest must be a positive integer or \"all\"");
  if (c.n_c < 2) invalid("n_c must be at least 2");
  if (c.c_max && !(std::isfinite(*c.c_max) && *c.c_max > 0.0)) invalid("c_max must be positive");
  if (!(c.min_prob >= 0.0 && c.min_prob <= 1.0)) invalid("min_prob must lie in [0, 1]");
  if (c.lambda_max && !(std::isfinite(*c.lambda_max) && *c.lambda_max > 0.0))
    invalid("lambda_max must be positive");
  if (c.cores < 0) invalid("cores must be non-negative");
  if (c.direction != "forward" && c.direction != "backward")
    invalid("direction must be forward or backward");
  if (!(std::isfinite(c.lambda) && c.lambda >= 0.0)) invalid("lambda must be non-negative");
}

json to_json(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["data"] = c.data;
  j["response"] = c.response;
  j["family"] = c.family;
  j["factors"] = c.factors;
  j["B"] = c.B;
  j["nbest"] = c.nbest == kAllModels ? json("all") : json(c.nbest);
  j["redundant"] = c.redundant;
  j["n_c"] = c.n_c;
  j["c_max"] = c.c_max ? json(*c.c_max) : json(nullptr);
  j["initial_stepwise"] = c.initial_stepwise;
  j["best_only"] = c.best_only;
  j["min_prob"] = c.min_prob;
  j["highlight"] = c.highlight ? json(*c.highlight) : json(nullptr);
  j["lambda_max"] = c.lambda_max ? json(*c.lambda_max) : json(nullptr);
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["plots"] = c.plots;
  j["surrogate"] = c.surrogate;
  j["model"] = c.model;
  j["direction"] = c.direction;
  j["lambda"] = c.lambda;
  return j;
}

Dataset load_dataset(const RunConfig& c) {
  std::vector<FactorSpec> factors;
  for (const auto& f : c.factors) factors.push_back(FactorSpec::parse(f));
  Dataset d = load_csv(c.data, c.response, ModelFamily::parse(c.family), factors);
  if (c.surrogate && d.family().kind() != FamilyKind::Gaussian) {
    FitOptions fo;
    fo.standard_errors = false;
    return glm_to_wls(d, fit(d, ModelId::full(d.p()), nullptr, fo));
  }
  return d;
}

VisOptions vis_options(const RunConfig& c) {
  VisOptions o;
  o.B = c.B;
  o.nbest = c.nbest;
  o.redundant = c.redundant;
  o.seed = c.seed.value_or(0);
  o.cores = c.cores;
  o.lambda_max = c.lambda_max.value_or(-1.0);
  return o;
}

AfOptions af_options(const RunConfig& c) {
  AfOptions o;
  o.B = c.B;
  o.n_c = c.n_c;
  o.c_max = c.c_max;
  o.initial_stepwise = c.initial_stepwise;
  o.seed = c.seed.value_or(0);
  o.cores = c.cores;
  return o;
}

json execute(const RunConfig& c) {
  validate(c);
  const Dataset d = load_dataset(c);
  json out;
  switch (c.command) {
    case Command::Fit:
      out = fit_json(d, c.model.empty() ? ModelId::full(d.p()) : d.model_of(c.model));
      break;
    case Command::Step:
      out = step_json(d, c.direction == "forward" ? Direction::Forward : Direction::Backward, c.lambda);
      break;
    case Command::Vis:
      if (c.highlight) (void)d.index_of(*c.highlight);
      out = vis_json(run_vis(d, vis_options(c)), c);
      break;
    case Command::Af: {
      const Dataset with_rv = c.redundant && !d.rv_index() ? add_redundant_variable(d, *c.seed) : d;
      out = af_json(run_af(with_rv, af_options(c)), c);
      break;
    }
    default:
      invalid(std::string("command '") + to_string(c.command) + "' does not produce a result");
  }
  out["config"] = to_json(c);
  return out;
}

}  // namespace modelscope::service
