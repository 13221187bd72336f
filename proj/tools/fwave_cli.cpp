// fwave: batch runner for forced-wave experiments.
//   fwave run --config exp.json --out results/ --cross-check
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fwave/experiment.hpp"

using namespace fwave;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string emit;
  bool cross_check = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON)")->required();
  sub->add_option("--out", c.out, "output directory (overrides outputs.dir)");
  sub->add_option("--emit", c.emit, "comma list of csv,json; empty writes the manifest only");
  sub->add_flag("--cross-check", c.cross_check, "also run the moving-frame simulator");
}

void apply_common(ExperimentConfig& cfg, const Common& c, bool emit_given) {
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (emit_given) {
    cfg.emit_csv = c.emit.find("csv") != std::string::npos;
    cfg.emit_json = c.emit.find("json") != std::string::npos;
  }
  cfg.cross_check = cfg.cross_check || c.cross_check;
}

int report(const Manifest& m) {
  const json& d = m.doc;
  if (m.exit_code == 0) {
    std::printf("ok: stages");
    for (const auto& s : d["stages"]) std::printf(" %s", s.get<std::string>().c_str());
    if (d.contains("classification")) std::printf("; classification %s", d["classification"].get<std::string>().c_str());
    std::printf("\n");
  } else {
    std::fprintf(stderr, "failed at %s: %s\n", d["failed_at"].get<std::string>().c_str(), d["error"].get<std::string>().c_str());
  }
  return m.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forced traveling waves of a two-predator one-prey nonlocal system"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    Stage stop;
    bool simulate;
  };
  const Sub subs[] = {
      {"validate", "check kernels, parameters and environment", Stage::validate, false},
      {"speeds", "critical speeds and regime gates", Stage::speeds, false},
      {"bounds", "build and verify the upper/lower pair", Stage::verify, false},
      {"solve", "solve the wave system inside the pair", Stage::solve, false},
      {"simulate", "time-step from the lower profile in the moving frame", Stage::simulate, true},
      {"classify", "solve and classify the limiting state", Stage::classify, false},
      {"run", "full pipeline", Stage::classify, false},
  };
  std::vector<Common> opts(std::size(subs));
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    auto* sub = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(sub, opts[i]);
    apps.push_back(sub);
  }

  Common sw;
  std::string param;
  std::vector<double> values;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run the pipeline over values of one numeric config entry");
  add_common(sweep, sw);
  sweep->add_option("--param", param, "JSON pointer into the config, e.g. /model/s_factor")->required();
  sweep->add_option("--values", values, "values to substitute")->required();
  sweep->add_option("--jobs", jobs, "experiments run concurrently")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (std::size_t i = 0; i < apps.size(); ++i) {
      if (!apps[i]->parsed()) continue;
      ExperimentConfig cfg = load_config(opts[i].config);
      apply_common(cfg, opts[i], apps[i]->count("--emit") > 0);
      RunRequest req{subs[i].stop, subs[i].simulate || cfg.cross_check};
      return report(run_experiment(cfg, req));
    }

    // sweep: one directory per value
    std::ifstream in(sw.config);
    if (!in) throw ConfigError("cannot open config " + sw.config);
    json base = json::parse(in);
    ExperimentConfig probe = parse_config(base);
    std::string root = sw.out.empty() ? probe.out_dir : sw.out;
    std::vector<ExperimentConfig> cfgs;
    for (std::size_t k = 0; k < values.size(); ++k) {
      json j = base;
      j[json::json_pointer(param)] = values[k];
      ExperimentConfig cfg = parse_config(j);
      Common c = sw;
      char dir[32];
      std::snprintf(dir, sizeof dir, "/run_%03zu", k);
      c.out = root + dir;
      apply_common(cfg, c, sweep->count("--emit") > 0);
      cfgs.push_back(cfg);
    }
    int worst = 0;
    for (std::size_t k = 0; k < cfgs.size(); k += static_cast<std::size_t>(jobs)) {
      std::vector<std::future<Manifest>> batch;
      for (std::size_t q = k; q < std::min(cfgs.size(), k + static_cast<std::size_t>(jobs)); ++q)
        batch.push_back(std::async(std::launch::async, [&, q] {
          return run_experiment(cfgs[q], RunRequest{Stage::classify, cfgs[q].cross_check});
        }));
      for (std::size_t q = 0; q < batch.size(); ++q) {
        Manifest m = batch[q].get();
        std::printf("%s = %.17g: ", param.c_str(), values[k + q]);
        std::fflush(stdout);
        worst = std::max(worst, report(m));
      }
    }
    return worst;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
