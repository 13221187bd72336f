#include "fwave/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "fwave/spectral.hpp"
#include "fwave/wave_solver.hpp"

namespace fwave {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(RegimeRequest r) {
  switch (r) {
    case RegimeRequest::e4: return "e4";
    case RegimeRequest::e1: return "e1";
    case RegimeRequest::e2: return "e2";
    case RegimeRequest::e3: return "e3";
    case RegimeRequest::critical_equal: return "critical-equal";
    case RegimeRequest::critical_s1: return "critical-s1";
    case RegimeRequest::critical_e2: return "critical-e2";
  }
  return "?";
}

RegimeRequest parse_regime(const std::string& s) {
  for (auto r : {RegimeRequest::e4, RegimeRequest::e1, RegimeRequest::e2, RegimeRequest::e3,
                 RegimeRequest::critical_equal, RegimeRequest::critical_s1, RegimeRequest::critical_e2})
    if (to_string(r) == s) return r;
  throw ConfigError("unknown regime '" + s + "'");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::validate: return "validate";
    case Stage::speeds: return "speeds";
    case Stage::bounds: return "bounds";
    case Stage::verify: return "verify";
    case Stage::solve: return "solve";
    case Stage::simulate: return "simulate";
    case Stage::classify: return "classify";
  }
  return "?";
}

namespace {

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

double num_or(const json& j, const char* key, double def, const std::string& where) {
  return j.contains(key) ? num(j, key, where) : def;
}

std::vector<double> vec(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + "." + key + " must be an array");
  std::vector<double> v;
  for (const auto& x : j.at(key)) {
    if (!x.is_number()) throw ConfigError(where + "." + key + " must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

std::array<double, 3> triple(const json& j, const char* key, const std::string& where) {
  if (j.contains(key) && j.at(key).is_number()) {
    double x = j.at(key).get<double>();
    return {x, x, x};
  }
  auto v = vec(j, key, where);
  if (v.size() != 3) throw ConfigError(where + "." + key + " needs three entries");
  return {v[0], v[1], v[2]};
}

std::string family_of(const json& spec, const std::string& where) {
  if (!spec.is_object() || !spec.contains("family") || !spec.at("family").is_string())
    throw ConfigError(where + " needs a string 'family'");
  return spec.at("family").get<std::string>();
}

}  // namespace

Kernel make_kernel(const json& spec) {
  const std::string w = "kernel";
  std::string f = family_of(spec, w);
  if (f == "uniform") {
    only_keys(spec, {"family", "half_width"}, w);
    return Kernel::uniform(num(spec, "half_width", w));
  }
  if (f == "two_bump") {
    only_keys(spec, {"family", "y_minus", "y_plus", "eta", "w_minus", "w_plus"}, w);
    if (spec.contains("w_minus") || spec.contains("w_plus"))
      return Kernel::two_bump(num(spec, "y_minus", w), num(spec, "y_plus", w), num(spec, "eta", w),
                              num(spec, "w_minus", w), num(spec, "w_plus", w));
    return Kernel::two_bump(num(spec, "y_minus", w), num(spec, "y_plus", w), num(spec, "eta", w));
  }
  if (f == "laplace") {
    only_keys(spec, {"family", "rate"}, w);
    return Kernel::laplace(num(spec, "rate", w));
  }
  if (f == "gaussian") {
    only_keys(spec, {"family", "sigma"}, w);
    return Kernel::gaussian(num(spec, "sigma", w));
  }
  if (f == "tabulated") {
    only_keys(spec, {"family", "csv", "offsets", "densities"}, w);
    if (spec.contains("csv")) return Kernel::from_csv(spec.at("csv").get<std::string>());
    return Kernel::tabulated(vec(spec, "offsets", w), vec(spec, "densities", w));
  }
  throw ConfigError("unknown kernel family '" + f + "'");
}

Environment make_environment(const json& spec) {
  const std::string w = "environment";
  std::string f = family_of(spec, w);
  if (f == "tanh_ramp") {
    only_keys(spec, {"family", "center", "steepness", "alpha_minus", "alpha_plus", "rho"}, w);
    return Environment::tanh_ramp(num_or(spec, "center", 0, w), num(spec, "steepness", w), num(spec, "alpha_minus", w),
                                  num(spec, "alpha_plus", w));
  }
  if (f == "step") {
    only_keys(spec, {"family", "center", "alpha_minus", "alpha_plus", "rho"}, w);
    return Environment::step(num_or(spec, "center", 0, w), num(spec, "alpha_minus", w), num(spec, "alpha_plus", w));
  }
  if (f == "piecewise_linear") {
    only_keys(spec, {"family", "z", "alpha", "rho"}, w);
    return Environment::piecewise_linear(vec(spec, "z", w), vec(spec, "alpha", w));
  }
  if (f == "tabulated") {
    only_keys(spec, {"family", "csv", "z", "alpha", "rho"}, w);
    if (spec.contains("csv")) return Environment::from_csv(spec.at("csv").get<std::string>());
    return Environment::tabulated(vec(spec, "z", w), vec(spec, "alpha", w));
  }
  if (f == "constant") {
    only_keys(spec, {"family", "value", "rho"}, w);
    return Environment::constant(num_or(spec, "value", 1, w));
  }
  throw ConfigError("unknown environment family '" + f + "'");
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j, {"model", "kernels", "environment", "regime", "numerics", "outputs"}, "config");
  ExperimentConfig c;
  if (!j.contains("model")) throw ConfigError("config is missing 'model'");
  const json& m = j.at("model");
  only_keys(m, {"d", "r", "a", "b", "h", "k", "s", "s_factor"}, "model");
  c.params.d = triple(m, "d", "model");
  c.params.r = triple(m, "r", "model");
  c.params.a = num(m, "a", "model");
  c.params.b = num(m, "b", "model");
  c.params.h = num(m, "h", "model");
  c.params.k = num(m, "k", "model");
  if (m.contains("s") && m.contains("s_factor")) throw ConfigError("model takes either 's' or 's_factor', not both");
  if (m.contains("s")) c.params.s = num(m, "s", "model");
  if (m.contains("s_factor")) c.s_factor = num(m, "s_factor", "model");

  if (!j.contains("kernels")) throw ConfigError("config is missing 'kernels'");
  const json& ks = j.at("kernels");
  if (ks.is_array()) {
    if (ks.size() != 3) throw ConfigError("kernels needs three entries");
    for (int i = 0; i < 3; ++i) c.kernel_specs[i] = ks[i];
  } else {
    c.kernel_specs = {ks, ks, ks};
  }
  for (const auto& s : c.kernel_specs) make_kernel(s);

  if (!j.contains("environment")) throw ConfigError("config is missing 'environment'");
  c.env_spec = j.at("environment");
  make_environment(c.env_spec);
  c.rho = num(c.env_spec, "rho", "environment");

  if (j.contains("regime")) {
    if (!j.at("regime").is_string()) throw ConfigError("regime must be a string");
    c.regime = parse_regime(j.at("regime").get<std::string>());
  }
  bool critical = c.regime == RegimeRequest::critical_equal || c.regime == RegimeRequest::critical_s1 ||
                  c.regime == RegimeRequest::critical_e2;
  if (!critical && !m.contains("s") && !m.contains("s_factor")) throw ConfigError("model needs 's' or 's_factor'");

  if (j.contains("numerics")) {
    const json& n = j.at("numerics");
    only_keys(n, {"L", "h", "dt", "T", "tol", "max_iter", "eps_tail", "verify_tol", "classify_tol", "scheme", "sim_h"}, "numerics");
    Numerics& u = c.num;
    u.L = num_or(n, "L", u.L, "numerics");
    u.h = num_or(n, "h", u.h, "numerics");
    u.dt = num_or(n, "dt", u.dt, "numerics");
    u.T = num_or(n, "T", u.T, "numerics");
    u.tol = num_or(n, "tol", u.tol, "numerics");
    u.max_iter = static_cast<int>(num_or(n, "max_iter", u.max_iter, "numerics"));
    u.eps_tail = num_or(n, "eps_tail", u.eps_tail, "numerics");
    u.verify_tol = num_or(n, "verify_tol", u.verify_tol, "numerics");
    u.classify_tol = num_or(n, "classify_tol", u.classify_tol, "numerics");
    u.sim_h = num_or(n, "sim_h", u.sim_h, "numerics");
    if (u.sim_h < 0) throw ConfigError("numerics.sim_h must be >= 0");
    if (n.contains("scheme")) {
      std::string s = n.at("scheme").get<std::string>();
      if (s == "euler_upwind1")
        u.scheme = Scheme::euler_upwind1;
      else if (s == "rk2_upwind3")
        u.scheme = Scheme::rk2_upwind3;
      else
        throw ConfigError("unknown scheme '" + s + "'");
    }
    if (!(u.L > 0 && u.h > 0 && u.dt >= 0 && u.T > 0 && u.tol > 0 && u.max_iter > 0 && u.eps_tail > 0 &&
          u.eps_tail < 1 && u.verify_tol > 0 && u.classify_tol > 0))
      throw ConfigError("numerics must be positive (eps_tail in (0,1), dt may be 0 for automatic)");
  }
  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    only_keys(o, {"dir", "emit", "cross_check"}, "outputs");
    if (o.contains("dir")) c.out_dir = o.at("dir").get<std::string>();
    if (o.contains("emit")) {
      c.emit_csv = c.emit_json = false;
      for (const auto& e : o.at("emit")) {
        std::string s = e.get<std::string>();
        if (s == "csv")
          c.emit_csv = true;
        else if (s == "json")
          c.emit_json = true;
        else
          throw ConfigError("unknown emit flag '" + s + "'");
      }
    }
    if (o.contains("cross_check")) c.cross_check = o.at("cross_check").get<bool>();
  }
  if (critical) {
    for (int i = 0; i < 3; ++i)
      if ((c.regime == RegimeRequest::critical_e2 || i < 2) && !make_kernel(c.kernel_specs[i]).compact() &&
          !(c.regime == RegimeRequest::critical_s1 && i == 1))
        throw ConfigError("regime " + to_string(c.regime) + " needs compactly supported kernels");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json m = {{"d", c.params.d}, {"r", c.params.r}, {"a", c.params.a}, {"b", c.params.b}, {"h", c.params.h}, {"k", c.params.k}};
  if (c.s_factor)
    m["s_factor"] = *c.s_factor;
  else
    m["s"] = c.params.s;
  json emit = json::array();
  if (c.emit_csv) emit.push_back("csv");
  if (c.emit_json) emit.push_back("json");
  std::string scheme = to_string(c.num.scheme);
  return {{"model", m},
          {"kernels", {c.kernel_specs[0], c.kernel_specs[1], c.kernel_specs[2]}},
          {"environment", c.env_spec},
          {"regime", to_string(c.regime)},
          {"numerics",
           {{"L", c.num.L}, {"h", c.num.h}, {"dt", c.num.dt}, {"T", c.num.T}, {"tol", c.num.tol}, {"max_iter", c.num.max_iter},
            {"eps_tail", c.num.eps_tail}, {"verify_tol", c.num.verify_tol}, {"classify_tol", c.num.classify_tol},
            {"scheme", scheme}, {"sim_h", c.num.sim_h}}},
          {"outputs", {{"dir", c.out_dir}, {"emit", emit}, {"cross_check", c.cross_check}}}};
}

ExperimentConfig swap_roles_e3(const ExperimentConfig& c) {
  ExperimentConfig o = c;
  std::swap(o.params.d[0], o.params.d[1]);
  std::swap(o.params.r[0], o.params.r[1]);
  std::swap(o.params.h, o.params.k);
  std::swap(o.kernel_specs[0], o.kernel_specs[1]);
  o.roles_swapped = !c.roles_swapped;
  return o;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char tmp[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(tmp, sizeof tmp, "%02x", md[i]);
    hex += tmp;
  }
  return hex;
}

namespace {

struct Writer {
  fs::path dir;
  std::vector<std::string> files;

  void text(const std::string& name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    files.push_back(name);
  }
  void doc(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  // columns of equal length; first column is z
  void csv(const std::string& name, const std::vector<std::string>& header, const std::vector<const std::vector<double>*>& cols) {
    std::FILE* f = std::fopen((dir / name).c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write " + name);
    for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f, i ? ",%s" : "%s", header[i].c_str());
    std::fputc('\n', f);
    std::size_t n = cols.front()->size();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < cols.size(); ++i) std::fprintf(f, i ? ",%.17g" : "%.17g", (*cols[i])[r]);
      std::fputc('\n', f);
    }
    std::fclose(f);
    files.push_back(name);
  }
};

json record_json(const ParamRecord& r) {
  json j = json::array();
  for (const auto& [k, v] : r.entries()) j.push_back({k, v});
  return j;
}

json report_json(const VerificationReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"worst", c.worst}, {"z", c.z}, {"pass", c.pass}});
  return {{"tol", rep.tol},
          {"checks", checks},
          {"ordering", rep.ordering},
          {"ordering_worst", rep.ordering_worst},
          {"ordering_z", rep.ordering_z},
          {"pass", rep.pass()}};
}

}  // namespace

Manifest run_experiment(const ExperimentConfig& c_in, const RunRequest& req) {
  Manifest man;
  json& M = man.doc;
  M["config"] = config_to_json(c_in);
  M["stages"] = json::array();
  M["failed_at"] = nullptr;
  Writer W{fs::path(c_in.out_dir), {}};
  fs::create_directories(W.dir);

  ExperimentConfig c = c_in.regime == RegimeRequest::e3 ? swap_roles_e3(c_in) : c_in;
  const bool swapped = c.roles_swapped;
  // output column i holds internal species lab[i]
  const std::array<int, 3> lab = swapped ? std::array<int, 3>{1, 0, 2} : std::array<int, 3>{0, 1, 2};
  Stage stage = Stage::validate;
  auto done = [&](Stage s) {
    M["stages"].push_back(to_string(s));
    return s == req.stop_after;
  };

  try {
    // validate
    std::array<Kernel, 3> J;
    json kr = json::array();
    for (int i = 0; i < 3; ++i) {
      J[i] = make_kernel(c.kernel_specs[i]);
      KernelReport r = validate_kernel(J[i]);
      kr.push_back({{"family", to_string(J[i].family())}, {"ok", r.ok()}, {"mass", r.mass}, {"mean", r.mean},
                    {"compact", r.compact}, {"failures", r.failures}});
      if (!r.ok()) throw ConfigError("kernel " + std::to_string(i + 1) + " fails its conditions: " + r.failures.front());
    }
    c.params.s = c.params.s > 0 ? c.params.s : 1.0;
    Normalized nz = normalize_alpha_plus(c.params, make_environment(c.env_spec));
    ModelParams p = nz.params;
    p.validate();
    EnvReport er = check_env_conditions(nz.env, c.rho);
    if (!er.alpha1 || !er.alpha2)
      throw ConfigError("environment fails its conditions" + (er.failures.empty() ? std::string() : ": " + er.failures.front()));
    Environment env = verify_decay(nz.env, c.rho);
    if (c.emit_json)
      W.doc("validate.json", {{"kernels", kr}, {"env", {{"C", er.C}, {"rho", er.rho}, {"monotone", er.monotone}}},
                              {"alpha_plus_scale", nz.scale}});
    if (done(Stage::validate)) goto finish;

    {
      // speeds
      stage = Stage::speeds;
      Grid grid(c.num.L, c.num.h);
      KernelSet ks = discretize_all(J, c.num.h, c.num.eps_tail);
      SteadyStates st = compute_states(p);
      double s1 = critical_speed(ks.effective[0], p.d[0], p.r[0] * (p.a - 1)).s_crit;
      double s2 = critical_speed(ks.effective[1], p.d[1], p.r[1] * (p.a - 1)).s_crit;
      double s2d = critical_speed(ks.effective[1], p.d[1], p.r[1] * st.beta2).s_crit;
      if (c.s_factor) {
        double ref = c.regime == RegimeRequest::e2 || c.regime == RegimeRequest::e3 ? s2d : std::max(s1, s2);
        p.s = *c.s_factor * ref;
      }
      RegimeReport rr = check_regimes(p, env, ks.effective);
      json sp = {{"s", p.s},
                 {"s1_star", rr.s1},
                 {"s2_star", rr.s2},
                 {"s2_double_star", rr.s2_double},
                 {"lambda1_star", rr.lambda1_star},
                 {"lambda2_star", rr.lambda2_star},
                 {"lambda2_double_star", rr.lambda2_double},
                 {"s1_star_continuous", critical_speed(J[0], p.d[0], p.r[0] * (p.a - 1)).s_crit},
                 {"s2_star_continuous", critical_speed(J[1], p.d[1], p.r[1] * (p.a - 1)).s_crit},
                 {"weak_predation", rr.weak_predation},
                 {"predator_free", to_string(rr.predator_free)},
                 {"one_predator", rr.one_predator},
                 {"R2_at_rho", rr.R2_at_rho},
                 {"gate_failures", rr.failed},
                 {"roles_swapped", swapped}};
      if (c.emit_json) W.doc("speeds.json", sp);
      if (done(Stage::speeds)) goto finish;

      // bounds
      stage = Stage::bounds;
      WaveProblem prob{p, env, ks.effective, grid, c.num.eps_tail};
      SolveOptions so;
      so.tol = c.num.tol;
      so.max_iter = c.num.max_iter;
      BoundPair pair;
      switch (c.regime) {
        case RegimeRequest::e4:
          if (!rr.weak_predation)
            throw RegimeError("co-existence regime needs b < min{(1-h)/(2a),(1-k)/(2a)} = " +
                              std::to_string(std::min((1 - p.h) / (2 * p.a), (1 - p.k) / (2 * p.a))));
          pair = build_bounds_E4(p, env, grid, make_scalar_solver(prob, so));
          break;
        case RegimeRequest::e1: pair = build_bounds_E1(p, env, ks.effective); break;
        case RegimeRequest::e2:
        case RegimeRequest::e3: pair = build_bounds_E2(p, env, ks.effective); break;
        case RegimeRequest::critical_equal:
          pair = build_bounds_critical(p, env, ks.effective, CriticalCase::equal_speeds);
          break;
        case RegimeRequest::critical_s1: pair = build_bounds_critical(p, env, ks.effective, CriticalCase::s1_dominant); break;
        case RegimeRequest::critical_e2: pair = build_bounds_critical(p, env, ks.effective, CriticalCase::E2_critical); break;
      }
      prob.params = pair.params;
      prob.env = pair.env;
      json br = {{"regime", to_string(pair.regime)}, {"record", record_json(pair.record)}, {"kinks", pair.kinks},
                 {"flags", pair.flags}, {"roles_swapped", swapped}};
      std::vector<double> zs = grid.nodes();
      if (c.emit_csv) {
        std::array<std::vector<double>, 6> pc;
        for (int i = 0; i < 3; ++i) {
          pc[i].resize(grid.n);
          pc[i + 3].resize(grid.n);
          for (std::size_t j = 0; j < grid.n; ++j) {
            pc[i][j] = pair.upper[lab[i]](zs[j]);
            pc[i + 3][j] = pair.lower[lab[i]](zs[j]);
          }
        }
        W.csv("bounds.csv", {"z", "upper1", "upper2", "upper3", "lower1", "lower2", "lower3"},
              {&zs, &pc[0], &pc[1], &pc[2], &pc[3], &pc[4], &pc[5]});
      }
      if (done(Stage::bounds)) {
        if (c.emit_json) W.doc("bounds_report.json", br);
        goto finish;
      }

      // verify
      stage = Stage::verify;
      VerificationReport vr = verify_bounds(pair, ks.stencil, grid, c.num.verify_tol);
      br["verification"] = report_json(vr);
      if (c.emit_json) W.doc("bounds_report.json", br);
      if (!vr.pass()) throw std::runtime_error("bound pair fails its inequalities");
      if (done(Stage::verify)) goto finish;

      // solve
      stage = Stage::solve;
      WaveProfile wp = solve_wave(pair, prob, so);
      json sj = {{"iterations", wp.iterations}, {"beta", wp.beta}, {"sup_change", wp.sup_change},
                 {"clips_total", wp.clips_total}, {"clips_final", wp.clips_final}, {"residual_sup", wp.residual_sup},
                 {"refined", wp.refined}, {"h", wp.grid.h}};
      if (pair.regime == Regime::predator_free) {
        // decay of the leading predator in the right window
        int i = lab[0];
        double lo = 0.2 * wp.grid.L, hi = 0.4 * wp.grid.L;
        try {
          double lf = tail_decay_rate(wp.grid, wp.phi[i], lo, hi);
          double I = mgf(ks.effective[i], lf);
          double rel = std::fabs(p.s * lf - p.d[i] * (I - 1) - p.r[i] * (p.a - 1)) / (p.s * lf);
          sj["tail_fit"] = {{"window", {lo, hi}}, {"lambda_fit", lf}, {"char_residual_rel", rel}};
        } catch (const std::exception& e) {
          sj["tail_fit"] = {{"error", e.what()}};
        }
      }
      if (c.emit_json) W.doc("solve.json", sj);
      std::vector<double> zw = wp.grid.nodes();
      if (c.emit_csv)
        W.csv("profile.csv", {"z", "phi1", "phi2", "phi3", "res1", "res2", "res3"},
              {&zw, &wp.phi[lab[0]], &wp.phi[lab[1]], &wp.phi[lab[2]], &wp.residual[lab[0]], &wp.residual[lab[1]],
               &wp.residual[lab[2]]});
      if (done(Stage::solve)) goto finish;

      // simulate
      Fields final_profile = wp.phi;
      if (req.simulate || req.stop_after == Stage::simulate) {
        stage = Stage::simulate;
        WaveProblem simp = prob;
        simp.grid = c.num.sim_h > 0 ? Grid(wp.grid.L, c.num.sim_h) : wp.grid;
        Fields init;
        for (int i = 0; i < 3; ++i) {
          init[i].resize(simp.grid.n);
          for (std::size_t j = 0; j < simp.grid.n; ++j) init[i][j] = pair.lower[i](simp.grid.z(j));
        }
        SimOptions o;
        o.T = c.num.T;
        o.dt = c.num.dt;
        SimResult sr = run_moving_frame(init, simp, o, c.num.scheme);
        std::size_t a = simp.grid.n / 10, b = simp.grid.n - simp.grid.n / 10;
        double dist = 0;
        for (int i = 0; i < 3; ++i)
          for (std::size_t j = a; j < b; ++j)
            dist = std::max(dist, std::fabs(sr.final.U[i][j] - interpolate(wp.grid, wp.phi[i], simp.grid.z(j))));
        json sm = {{"scheme", to_string(c.num.scheme)}, {"T", c.num.T}, {"h", simp.grid.h}, {"dt", sr.final.dt}, {"steps", sr.steps},
                   {"freeze_metric", sr.freeze_metric}, {"frozen", sr.frozen}, {"clips", sr.final.clips},
                   {"residual_sup", sr.residual_sup}, {"boundary_variation", sr.boundary_variation},
                   {"distance_to_solve", dist}};
        Classification sc = classify_limit(sr.final.U, st, c.num.classify_tol);
        sm["classification"] = to_string(sc.cls);
        if (c.emit_json) W.doc("sim.json", sm);
        std::vector<double> zs_sim = simp.grid.nodes();
        if (c.emit_csv)
          W.csv("sim_final.csv", {"z", "u", "v", "w"}, {&zs_sim, &sr.final.U[lab[0]], &sr.final.U[lab[1]], &sr.final.U[lab[2]]});
        if (done(Stage::simulate)) goto finish;
      }

      // classify
      stage = Stage::classify;
      Classification cl = classify_limit(final_profile, st, c.num.classify_tol);
      std::string name = to_string(cl.cls);
      if (swapped && name == "E2") name = "E3";
      else if (swapped && name == "E3") name = "E2";
      M["classification"] = name;
      M["right_tail"] = {cl.right[lab[0]], cl.right[lab[1]], cl.right[lab[2]]};
      done(Stage::classify);
    }
  } catch (const ConfigError& e) {
    man.exit_code = 2;
    M["failed_at"] = to_string(stage);
    M["error"] = e.what();
  } catch (const ModelError& e) {
    man.exit_code = 2;
    M["failed_at"] = to_string(stage);
    M["error"] = e.what();
  } catch (const RegimeError& e) {
    man.exit_code = 3;
    M["failed_at"] = to_string(stage);
    M["error"] = e.what();
  } catch (const std::exception& e) {
    man.exit_code = stage == Stage::validate ? 2 : 4;
    M["failed_at"] = to_string(stage);
    M["error"] = e.what();
  }

finish:
  json files = json::array();
  for (const auto& f : W.files) files.push_back({{"name", f}, {"sha256", sha256_file((W.dir / f).string())}});
  M["files"] = files;
  M["exit_code"] = man.exit_code;
  std::ofstream(W.dir / "manifest.json", std::ios::binary) << M.dump(2) << "\n";
  return man;
}

}  // namespace fwave
