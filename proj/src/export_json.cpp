#include <cmath>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"
#include "modelscope/service.hpp"

namespace modelscope::service {

using nlohmann::json;

namespace {

json header(const char* kind, const Dataset& d) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  j["engine_version"] = engine_version();
  j["response"] = d.response();
  j["family"] = d.family().name();
  j["n"] = d.n();
  j["variables"] = d.names();
  j["redundant_variable"] = d.rv_index() ? json(d.name(*d.rv_index())) : json(nullptr);
  return j;
}

json model_json(const Dataset& d, ModelId m) {
  return {{"model", d.formula(m)}, {"variables", d.variables(m)}, {"dimension", m.dimension()}};
}

json optional_model(const Dataset& d, const std::optional<ModelId>& m) {
  if (!m) return {{"model", nullptr}, {"variables", nullptr}, {"dimension", nullptr}};
  return model_json(d, *m);
}

json number_or_null(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

const char* status_name(FitStatus s) {
  switch (s) {
    case FitStatus::Ok: return "ok";
    case FitStatus::NonConvergence: return "non_convergence";
    case FitStatus::Separation: return "separation";
  }
  return "?";
}

}  // namespace

json columns_json(const Dataset& d) {
  json cols = json::array();
  for (const auto& c : d.columns()) {
    json e = {{"name", c.name}, {"source", c.source}};
    e["level"] = c.level ? json(*c.level) : json(nullptr);
    cols.push_back(std::move(e));
  }
  json j = header("columns", d);
  j["columns"] = std::move(cols);
  return j;
}

json fit_json(const Dataset& d, ModelId m) {
  const FitResult f = fit(d, m);
  json j = header("fit", d);
  j.update(model_json(d, m));
  j["loglik"] = f.loglik;
  j["q_hat"] = f.q_hat;
  j["aic"] = gic(f.q_hat, f.dimension(), 2.0);
  j["bic"] = gic(f.q_hat, f.dimension(), std::log(static_cast<double>(d.n())));
  j["status"] = status_name(f.status);
  j["iterations"] = f.iterations;
  if (d.family().kind() == FamilyKind::Gaussian) {
    j["rss"] = f.rss;
    j["residual_se"] = std::sqrt(f.rss / (f.n_effective - f.dimension()));
  } else {
    j["deviance"] = f.deviance;
  }
  json rows = json::array();
  for (const auto& r : coef_table(d, f))
    rows.push_back({{"name", r.name},
                    {"estimate", r.estimate},
                    {"std_error", r.std_error},
                    {"statistic", r.statistic},
                    {"p_value", r.p_value}});
  j["coefficients"] = std::move(rows);
  return j;
}

json step_json(const Dataset& d, Direction dir, double lambda) {
  const StepResult s = step(d, dir, lambda);
  json j = header("step", d);
  j["direction"] = dir == Direction::Forward ? "forward" : "backward";
  j["lambda"] = lambda;
  j.update(model_json(d, s.model));
  json path = json::array();
  for (std::size_t i = 0; i < s.path.size(); ++i) {
    json e = model_json(d, s.path[i]);
    e["gic"] = s.gic[i];
    path.push_back(std::move(e));
  }
  j["path"] = std::move(path);
  j["fit"] = fit_json(d, s.model);
  return j;
}

json vis_json(const VisResult& v, const RunConfig& cfg) {
  const Dataset& d = v.data;
  json j = header("vis", d);
  j["seed"] = v.seed;
  j["B"] = v.B;
  j["replicates_used"] = v.replicates_used();
  j["skipped_replicates"] = v.skipped_replicates;
  j["nbest"] = v.nbest == kAllModels ? json("all") : json(v.nbest);

  std::optional<int> hi;
  if (cfg.highlight) hi = d.index_of(*cfg.highlight);
  j["highlight"] = cfg.highlight ? json(*cfg.highlight) : json(nullptr);

  json table = json::array();
  for (std::size_t k = 0; k < v.original.by_size.size(); ++k)
    for (const auto& e : v.original.by_size[k]) {
      json row = model_json(d, e.model);
      row["size"] = static_cast<int>(k);
      row["q_hat"] = e.q_hat;
      row["loglik"] = -0.5 * e.q_hat;
      row["probability"] = v.stability_of(e.model);
      row["highlighted"] = hi ? e.model.contains(*hi) : false;
      table.push_back(std::move(row));
    }
  j["original_table"] = std::move(table);

  json stab = json::array();
  for (std::size_t k = 0; k < v.stability.size(); ++k)
    for (const auto& e : v.stability[k]) {
      json row = model_json(d, e.model);
      row["size"] = static_cast<int>(k);
      row["probability"] = e.probability;
      const double ll = v.original_loglik.at(e.model);
      row["loglik"] = ll;
      row["q_hat"] = -2.0 * ll;
      row["highlighted"] = hi ? e.model.contains(*hi) : false;
      stab.push_back(std::move(row));
    }
  j["stability"] = std::move(stab);

  json printed = json::array();
  for (const auto& r : stability_table(v, cfg.min_prob))
    printed.push_back({{"dimension", r.dimension},
                       {"model", r.formula},
                       {"probability", r.probability},
                       {"loglik", r.loglik}});
  j["min_prob"] = cfg.min_prob;
  j["stability_table"] = std::move(printed);

  j["lambda_grid"] = v.lambda_grid;
  json inclusion = json::array();
  for (int var : v.legend_order) {
    std::vector<double> row(v.inclusion.cols());
    for (Eigen::Index t = 0; t < v.inclusion.cols(); ++t) row[t] = v.inclusion(var, t);
    inclusion.push_back({{"variable", d.name(var)}, {"values", std::move(row)}});
  }
  j["inclusion"] = std::move(inclusion);
  json legend = json::array();
  for (int var : v.legend_order) legend.push_back(d.name(var));
  j["legend_order"] = std::move(legend);
  return j;
}

json af_json(const AfResult& a, const RunConfig& cfg) {
  const Dataset& d = a.data;
  json j = header("af", d);
  j["seed"] = a.seed;
  j["B"] = a.B;
  j["n_c"] = static_cast<int>(a.c_grid.size());
  j["c_grid"] = a.c_grid;
  j["c_max"] = a.c_grid.back();
  j["loss_scale"] = kFenceLossScale;
  j["q_full"] = a.q_full;
  j["skipped_replicates"] = a.skipped_replicates;
  if (a.screening)
    j["screening"] = {{"lower", a.screening->lower},
                      {"upper", a.screening->upper},
                      {"stepwise_sizes", a.screening->sizes}};
  else
    j["screening"] = nullptr;

  // The fence on the original data at each c_star.
  SearchOptions so;
  so.nbest = 1;
  if (a.screening) {
    so.min_size = a.screening->lower;
    so.max_size = a.screening->upper;
  }
  std::optional<SizeBestTable> original;

  const char* keys[2] = {"best_only_true", "best_only_false"};
  json curves, c_star, selected;
  for (int mode = 0; mode < 2; ++mode) {
    json pts = json::array();
    for (std::size_t i = 0; i < a.c_grid.size(); ++i) {
      const auto& pt = a.curves[mode][i];
      json e = optional_model(d, pt.argmax);
      e["c"] = a.c_grid[i];
      e["p_star"] = pt.p_star;
      pts.push_back(std::move(e));
    }
    curves[keys[mode]] = std::move(pts);
    c_star[keys[mode]] = number_or_null(a.c_star[mode]);
    if (a.c_star[mode]) {
      if (!original) original = best_subsets(d, so);
      const auto choice = models_within_fence(*original, a.q_full, kFenceLossScale * *a.c_star[mode]);
      json s = model_json(d, choice.best.model);
      s["q_hat"] = choice.best.q_hat;
      selected[keys[mode]] = std::move(s);
    } else {
      selected[keys[mode]] = nullptr;
    }
  }
  j["best_only"] = cfg.best_only;
  j["curves"] = std::move(curves);
  j["c_star"] = std::move(c_star);
  j["selected"] = std::move(selected);
  return j;
}

}  // namespace modelscope::service
