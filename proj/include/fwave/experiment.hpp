#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwave/bounds.hpp"
#include "fwave/environment.hpp"
#include "fwave/equilibria.hpp"
#include "fwave/kernel.hpp"
#include "fwave/simulator.hpp"

namespace fwave {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RegimeRequest { e4, e1, e2, e3, critical_equal, critical_s1, critical_e2 };
std::string to_string(RegimeRequest r);
RegimeRequest parse_regime(const std::string& s);

struct Numerics {
  double L = 100;
  double h = 0.01;
  double dt = 0;            // 0: half the stability bound
  double T = 500;
  double tol = 1e-10;
  int max_iter = 200000;
  double eps_tail = 1e-12;
  double verify_tol = 1e-8;
  double classify_tol = 1e-3;
  Scheme scheme = Scheme::euler_upwind1;
  double sim_h = 0;         // simulator grid step; 0: same as h
};

struct ExperimentConfig {
  ModelParams params;
  std::optional<double> s_factor;  // s = factor * reference speed of the regime
  std::array<nlohmann::json, 3> kernel_specs;
  nlohmann::json env_spec;
  double rho = 1;
  RegimeRequest regime = RegimeRequest::e1;
  Numerics num;
  std::string out_dir = "out";
  bool emit_csv = true, emit_json = true;
  bool cross_check = false;
  bool roles_swapped = false;  // species 1 and 2 exchanged
};

// Unknown keys anywhere are rejected with ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& c);

Kernel make_kernel(const nlohmann::json& spec);
Environment make_environment(const nlohmann::json& spec);

// exchanges (d1, r1, k, J1) with (d2, r2, h, J2); an involution
ExperimentConfig swap_roles_e3(const ExperimentConfig& c);

enum class Stage { validate, speeds, bounds, verify, solve, simulate, classify };
std::string to_string(Stage s);

struct RunRequest {
  Stage stop_after = Stage::classify;
  bool simulate = false;  // run the simulator even when stopping after classify
};

struct Manifest {
  nlohmann::json doc;
  int exit_code = 0;
};

// Runs the pipeline up to req.stop_after and writes artifacts into
// c.out_dir; manifest.json is always written.
Manifest run_experiment(const ExperimentConfig& c, const RunRequest& req = {});

std::string sha256_file(const std::string& path);

}  // namespace fwave
