#include "modelscope/modelscope.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"
#include "modelscope/service.hpp"

using nlohmann::json;
namespace ms = modelscope;
namespace svc = modelscope::service;

struct ms_dataset {
  ms::Dataset d;
};

struct ms_vis_result {
  ms::VisResult v;
  svc::RunConfig cfg;
};

struct ms_af_result {
  ms::AfResult a;
  svc::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

ms_status fail(ms_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
ms_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MS_OK;
  } catch (const ms::Error& e) {
    return fail(static_cast<ms_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(MS_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MS_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw ms::Error(ms::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

std::vector<ms::FactorSpec> factor_list(const char* const* factors, size_t n) {
  std::vector<ms::FactorSpec> out;
  for (size_t i = 0; i < n; ++i) {
    need(factors[i], "factor entry");
    out.push_back(ms::FactorSpec::parse(factors[i]));
  }
  return out;
}

// Run settings for an in-memory dataset.
svc::RunConfig options_for(const ms::Dataset& d, const char* options_json, svc::Command cmd) {
  json j = options_json && *options_json ? json::parse(options_json) : json::object();
  if (!j.is_object()) throw ms::Error(ms::ErrorCode::InvalidArgument, "options must be a JSON object");
  j["command"] = svc::to_string(cmd);
  j["data"] = "<memory>";
  j["response"] = d.response();
  j["family"] = d.family().name();
  return svc::config_from_json(j);
}

}  // namespace

extern "C" {

const char* ms_version(void) { return svc::engine_version(); }

const char* ms_last_error(void) { return g_last_error.c_str(); }

const char* ms_status_name(ms_status status) {
  if (status == MS_OK) return "ok";
  if (status < MS_INVALID_ARGUMENT || status > MS_INTERNAL) return "unknown";
  return ms::to_string(static_cast<ms::ErrorCode>(status));
}

void ms_string_free(char* s) { std::free(s); }

ms_status ms_dataset_load(const char* path, const char* response, const char* family,
                          const char* const* factors, size_t n_factors, ms_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(response, "response");
    need(out, "out");
    *out = new ms_dataset{ms::load_csv(path, response, ms::ModelFamily::parse(family ? family : "gaussian"),
                                       factor_list(factors, n_factors))};
  });
}

ms_status ms_dataset_parse(const char* csv_text, const char* response, const char* family,
                           const char* const* factors, size_t n_factors, ms_dataset** out) {
  return guarded([&] {
    need(csv_text, "csv_text");
    need(response, "response");
    need(out, "out");
    *out = new ms_dataset{ms::parse_csv(csv_text, response,
                                        ms::ModelFamily::parse(family ? family : "gaussian"),
                                        factor_list(factors, n_factors))};
  });
}

ms_status ms_dataset_add_redundant(const ms_dataset* d, uint64_t seed, ms_dataset** out) {
  return guarded([&] {
    need(d, "dataset");
    need(out, "out");
    *out = new ms_dataset{ms::add_redundant_variable(d->d, seed)};
  });
}

ms_status ms_dataset_to_wls(const ms_dataset* d, ms_dataset** out) {
  return guarded([&] {
    need(d, "dataset");
    need(out, "out");
    ms::FitOptions fo;
    fo.standard_errors = false;
    *out = new ms_dataset{ms::glm_to_wls(d->d, ms::fit(d->d, ms::ModelId::full(d->d.p()), nullptr, fo))};
  });
}

void ms_dataset_free(ms_dataset* d) { delete d; }

int ms_dataset_n(const ms_dataset* d) { return d ? d->d.n() : 0; }

int ms_dataset_p(const ms_dataset* d) { return d ? d->d.p() : 0; }

const char* ms_dataset_name(const ms_dataset* d, int j) {
  if (!d || j < 0 || j >= d->d.p()) return nullptr;
  return d->d.name(j).c_str();
}

ms_status ms_dataset_columns_json(const ms_dataset* d, char** json_out) {
  return guarded([&] {
    need(d, "dataset");
    need(json_out, "json_out");
    *json_out = dup(svc::columns_json(d->d).dump());
  });
}

ms_status ms_fit_json(const ms_dataset* d, const char* const* vars, size_t n_vars, char** json_out) {
  return guarded([&] {
    need(d, "dataset");
    need(json_out, "json_out");
    std::vector<std::string> names;
    for (size_t i = 0; i < n_vars; ++i) {
      need(vars[i], "variable name");
      names.emplace_back(vars[i]);
    }
    const auto m = names.empty() ? ms::ModelId::full(d->d.p()) : d->d.model_of(names);
    *json_out = dup(svc::fit_json(d->d, m).dump());
  });
}

ms_status ms_step_json(const ms_dataset* d, int forward, double lambda, char** json_out) {
  return guarded([&] {
    need(d, "dataset");
    need(json_out, "json_out");
    if (!(lambda >= 0.0)) throw ms::Error(ms::ErrorCode::InvalidArgument, "lambda must be non-negative");
    *json_out = dup(
        svc::step_json(d->d, forward ? ms::Direction::Forward : ms::Direction::Backward, lambda).dump());
  });
}

ms_status ms_vis_run(const ms_dataset* d, const char* options_json, ms_vis_result** out) {
  return guarded([&] {
    need(d, "dataset");
    need(out, "out");
    auto cfg = options_for(d->d, options_json, svc::Command::Vis);
    if (cfg.highlight) (void)d->d.index_of(*cfg.highlight);
    auto v = ms::run_vis(d->d, svc::vis_options(cfg));
    *out = new ms_vis_result{std::move(v), std::move(cfg)};
  });
}

ms_status ms_vis_to_json(const ms_vis_result* v, char** json_out) {
  return guarded([&] {
    need(v, "vis result");
    need(json_out, "json_out");
    auto j = svc::vis_json(v->v, v->cfg);
    j["config"] = svc::to_json(v->cfg);
    *json_out = dup(j.dump());
  });
}

void ms_vis_free(ms_vis_result* v) { delete v; }

ms_status ms_af_run(const ms_dataset* d, const char* options_json, ms_af_result** out) {
  return guarded([&] {
    need(d, "dataset");
    need(out, "out");
    auto cfg = options_for(d->d, options_json, svc::Command::Af);
    const ms::Dataset data =
        cfg.redundant && !d->d.rv_index() ? ms::add_redundant_variable(d->d, *cfg.seed) : d->d;
    auto a = ms::run_af(data, svc::af_options(cfg));
    *out = new ms_af_result{std::move(a), std::move(cfg)};
  });
}

ms_status ms_af_to_json(const ms_af_result* a, char** json_out) {
  return guarded([&] {
    need(a, "af result");
    need(json_out, "json_out");
    auto j = svc::af_json(a->a, a->cfg);
    j["config"] = svc::to_json(a->cfg);
    *json_out = dup(j.dump());
  });
}

ms_status ms_af_c_star(const ms_af_result* a, int best_only, double* out) {
  return guarded([&] {
    need(a, "af result");
    need(out, "out");
    const auto& c = a->a.c_star[best_only ? 0 : 1];
    if (!c) throw ms::Error(ms::ErrorCode::NoPeak, "p*(c) has no peak");
    *out = *c;
  });
}

void ms_af_free(ms_af_result* a) { delete a; }

ms_status ms_config_normalize(const char* config_json, char** json_out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(json_out, "json_out");
    const auto cfg = svc::config_from_json(json::parse(config_json));
    auto j = svc::to_json(cfg);
    j["cores"] = cfg.cores;
    j["out"] = cfg.out;
    *json_out = dup(j.dump());
  });
}

ms_status ms_run_json(const char* config_json, char** json_out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(json_out, "json_out");
    const auto cfg = svc::config_from_json(json::parse(config_json));
    *json_out = dup(svc::execute(cfg).dump());
  });
}

ms_status ms_render_svg(const char* result_json, const char* kind, char** svg_out) {
  return guarded([&] {
    need(result_json, "result_json");
    need(kind, "kind");
    need(svg_out, "svg_out");
    *svg_out = dup(svc::render_svg(json::parse(result_json), kind));
  });
}

}  // extern "C"
