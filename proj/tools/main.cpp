#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "common.hpp"

namespace fs = std::filesystem;
using cli::json;

namespace {

constexpr int kValidationExit = 2;
constexpr int kRuntimeExit = 1;

// Flags shared by the run commands. Only options given on the command line
// are forwarded; the library fills every default.
struct RunFlags {
  std::string data, response, family, nbest, direction, highlight, out = ".";
  std::vector<std::string> factors, model;
  int B = 0, n_c = 0, cores = 0;
  double c_max = 0, min_prob = 0, lambda_max = 0, lambda = 0;
  std::uint64_t seed = 0;
  bool redundant = true, initial_stepwise = true, best_only = true;
  bool no_initial_stepwise = false, plots = false, surrogate = false;
  std::map<std::string, CLI::Option*> opts;

  void add_common(CLI::App* app) {
    opts["data"] = app->add_option("--data", data, "CSV file")->required();
    opts["response"] = app->add_option("--response", response, "response column")->required();
    opts["family"] = app->add_option("--family", family, "gaussian, binomial or poisson");
    opts["factors"] = app->add_option("--factor", factors, "factor column, optionally col:l1|l2|...");
    opts["surrogate"] = app->add_flag("--surrogate", surrogate, "use the weighted least squares surrogate of a GLM");
    opts["out"] = app->add_option("--out", out, "output directory");
  }
  void add_bootstrap(CLI::App* app) {
    opts["B"] = app->add_option("--B", B, "bootstrap replications");
    opts["seed"] = app->add_option("--seed", seed, "random seed")->required();
    opts["cores"] = app->add_option("--cores", cores, "worker threads (0: available - 1)");
    opts["redundant"] = app->add_option("--redundant", redundant, "add a redundant variable");
    opts["plots"] = app->add_flag("--plots", plots, "write SVG plots to <out>/plots");
  }
  void add_vis(CLI::App* app) {
    add_common(app);
    add_bootstrap(app);
    opts["nbest"] = app->add_option("--nbest", nbest, "models kept per size, or all");
    opts["min_prob"] = app->add_option("--min-prob", min_prob, "smallest probability printed");
    opts["highlight"] = app->add_option("--highlight", highlight, "variable to highlight");
    opts["lambda_max"] = app->add_option("--lambda-max", lambda_max, "largest penalty in the inclusion grid");
  }
  void add_af(CLI::App* app) {
    add_common(app);
    add_bootstrap(app);
    opts["n_c"] = app->add_option("--n-c", n_c, "points in the c grid");
    opts["c_max"] = app->add_option("--c-max", c_max, "largest c");
    opts["initial_stepwise"] = app->add_option("--initial-stepwise", initial_stepwise, "screen sizes with stepwise");
    opts["no_initial_stepwise"] = app->add_flag("--no-initial-stepwise", no_initial_stepwise, "search every size");
    opts["best_only"] = app->add_option("--best-only", best_only, "curve used for the plot");
  }
  void add_fit(CLI::App* app) {
    add_common(app);
    opts["model"] = app->add_option("--model", model, "variables (default: all)");
  }
  void add_step(CLI::App* app) {
    add_common(app);
    opts["direction"] = app->add_option("--direction", direction, "forward or backward");
    opts["lambda"] = app->add_option("--lambda", lambda, "penalty per parameter (2: AIC)");
  }

  bool given(const char* k) const {
    auto it = opts.find(k);
    return it != opts.end() && it->second->count() > 0;
  }

  json config(const std::string& command) const {
    json j;
    j["command"] = command;
    j["data"] = data;
    j["response"] = response;
    j["out"] = out;
    if (given("family")) j["family"] = family;
    if (given("factors")) j["factors"] = factors;
    if (given("surrogate")) j["surrogate"] = surrogate;
    if (given("B")) j["B"] = B;
    if (given("seed")) j["seed"] = seed;
    if (given("redundant")) j["redundant"] = redundant;
    if (given("plots")) j["plots"] = plots;
    if (given("nbest")) {
      if (nbest == "all") {
        j["nbest"] = "all";
      } else {
        try {
          std::size_t used = 0;
          const int v = std::stoi(nbest, &used);
          if (used != nbest.size()) throw std::invalid_argument(nbest);
          j["nbest"] = v;
        } catch (const std::exception&) {
          throw cli::ApiError(MS_INVALID_ARGUMENT, "nbest must be a positive integer or all");
        }
      }
    }
    if (given("min_prob")) j["min_prob"] = min_prob;
    if (given("highlight")) j["highlight"] = highlight;
    if (given("lambda_max")) j["lambda_max"] = lambda_max;
    if (given("n_c")) j["n_c"] = n_c;
    if (given("c_max")) j["c_max"] = c_max;
    if (given("initial_stepwise")) j["initial_stepwise"] = initial_stepwise;
    if (no_initial_stepwise) j["initial_stepwise"] = false;
    if (given("best_only")) j["best_only"] = best_only;
    if (given("model")) j["model"] = model;
    if (given("direction")) j["direction"] = direction;
    if (given("lambda")) j["lambda"] = lambda;
    // Thread count is an execution detail; the environment overrides the flag.
    if (const char* env = std::getenv("MODELSCOPE_CORES"); env && *env) {
      try {
        j["cores"] = std::stoi(env);
      } catch (const std::exception&) {
        throw cli::ApiError(MS_INVALID_ARGUMENT, "MODELSCOPE_CORES must be an integer");
      }
    } else if (given("cores")) {
      j["cores"] = cores;
    }
    return j;
  }
};

void print_fit(const json& f) {
  std::printf("%s  (%s)\n", f.at("model").get<std::string>().c_str(), f.at("family").get<std::string>().c_str());
  std::printf("%-14s %10s %10s %10s %10s\n", "", "Estimate", "Std.Error", "Statistic", "Pr(>|.|)");
  for (const auto& r : f.at("coefficients"))
    std::printf("%-14s %10.2f %10.2f %10.2f %10.2f\n", r.at("name").get<std::string>().c_str(),
                r.at("estimate").get<double>(), r.at("std_error").get<double>(),
                r.at("statistic").get<double>(), r.at("p_value").get<double>());
  std::printf("logLik %.2f  AIC %.2f  BIC %.2f\n", f.at("loglik").get<double>(), f.at("aic").get<double>(),
              f.at("bic").get<double>());
}

void print_summary(const json& doc) {
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "fit") {
    print_fit(doc);
  } else if (kind == "step") {
    std::printf("%s stepwise, lambda = %g\n", doc.at("direction").get<std::string>().c_str(),
                doc.at("lambda").get<double>());
    print_fit(doc.at("fit"));
  } else if (kind == "vis") {
    std::printf("%-50s %6s %10s\n", "", "prob", "logLikelihood");
    for (const auto& r : doc.at("stability_table"))
      std::printf("%-50s %6.2f %10.2f\n", r.at("model").get<std::string>().c_str(),
                  r.at("probability").get<double>(), r.at("loglik").get<double>());
  } else if (kind == "af") {
    for (const char* mode : {"best_only_true", "best_only_false"}) {
      const auto& c = doc.at("c_star").at(mode);
      const auto& s = doc.at("selected").at(mode);
      if (c.is_null())
        std::printf("%s: no peak in p*(c)\n", mode);
      else
        std::printf("%s: c* = %.2f, selected %s\n", mode, c.get<double>(), s.at("model").get<std::string>().c_str());
    }
  }
}

int fail(ms_status s, const std::string& message, int exit_code) {
  std::cerr << cli::error_report(s, message).dump(1) << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model selection stability: best subsets, bootstrap stability and the adaptive fence"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ms_version()));

  RunFlags fit_f, step_f, vis_f, af_f;
  auto* fit_cmd = app.add_subcommand("fit", "fit one model and print its coefficient table");
  fit_f.add_fit(fit_cmd);
  auto* step_cmd = app.add_subcommand("step", "stepwise selection under a GIC penalty");
  step_f.add_step(step_cmd);
  auto* vis_cmd = app.add_subcommand("vis", "bootstrap model stability and variable inclusion");
  vis_f.add_vis(vis_cmd);
  auto* af_cmd = app.add_subcommand("af", "adaptive fence");
  af_f.add_af(af_cmd);

  std::string results = "results", host = "127.0.0.1", ui;
  int port = 8080, serve_cores = 0;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API over result files");
  serve_cmd->add_option("--results", results, "directory of runs (one sub-directory per run)");
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "port");
  serve_cmd->add_option("--ui", ui, "static UI bundle served at /");
  serve_cmd->add_option("--cores", serve_cores, "worker threads per run");

  std::string input, export_out;
  auto* export_cmd = app.add_subcommand("export", "render SVG plots from a vis.json or af.json");
  export_cmd->add_option("--input", input, "result document")->required();
  export_cmd->add_option("--out", export_out, "output directory (default: next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(MS_INVALID_ARGUMENT, e.what(), kValidationExit);
  }

  try {
    if (serve_cmd->parsed()) {
      if (const char* env = std::getenv("MODELSCOPE_CORES"); env && *env) serve_cores = std::atoi(env);
      return cli::serve(results, host, port, ui.empty() ? std::nullopt : std::optional<fs::path>(ui), serve_cores);
    }
    if (export_cmd->parsed()) {
      const std::string text = cli::read_file(input);
      const json doc = json::parse(text);
      const fs::path dir = export_out.empty() ? fs::path(input).parent_path() : fs::path(export_out);
      const auto kind = doc.value("kind", "");
      if (kind == "vis") {
        for (const char* k : {"lvk", "boot", "vip"})
          cli::write_file(dir / "plots" / (std::string(k) + ".svg"), cli::svg(text, k));
      } else if (kind == "af") {
        cli::write_file(dir / "plots" / "af.svg", cli::svg(text, "af"));
      } else {
        return fail(MS_INVALID_ARGUMENT, "input is not a vis or af result", kValidationExit);
      }
      std::printf("plots written to %s\n", (dir / "plots").string().c_str());
      return 0;
    }

    const RunFlags* flags = nullptr;
    std::string command;
    if (fit_cmd->parsed()) flags = &fit_f, command = "fit";
    if (step_cmd->parsed()) flags = &step_f, command = "step";
    if (vis_cmd->parsed()) flags = &vis_f, command = "vis";
    if (af_cmd->parsed()) flags = &af_f, command = "af";

    json cfg;
    try {
      cfg = cli::normalize(flags->config(command));
    } catch (const cli::ApiError& e) {
      return fail(e.status, e.what(), kValidationExit);
    }

    const json doc = cli::run(cfg);
    print_summary(doc);
    if (command == "vis" || command == "af" || flags->given("out")) {
      const auto path = cli::persist(doc, cfg.at("out").get<std::string>(), cfg.at("plots").get<bool>());
      std::printf("wrote %s\n", path.string().c_str());
    }
    return 0;
  } catch (const cli::ApiError& e) {
    return fail(e.status, e.what(), kRuntimeExit);
  } catch (const std::exception& e) {
    return fail(MS_INTERNAL, e.what(), kRuntimeExit);
  }
}
