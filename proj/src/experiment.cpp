#include "mabeam/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "mabeam/verify.hpp"

namespace mabeam {

namespace {

using nlohmann::json;

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

[[noreturn]] void key_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::vector<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) key_error(path + "." + key, "unknown key");
  }
}

Eigen::VectorXd per_user_vector(const json& v, int users,
                                const std::string& path) {
  Eigen::VectorXd out(users);
  if (v.is_number()) {
    out.setConstant(v.get<double>());
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != users)
      key_error(path, "needs one entry per user");
    for (int k = 0; k < users; ++k) out(k) = v[k].get<double>();
  } else {
    key_error(path, "expected number or array");
  }
  return out;
}

Scheme parse_scheme(const std::string& name, const std::string& path) {
  if (name == "proposed") return Scheme::Proposed;
  if (name == "fpa") return Scheme::Fpa;
  if (name == "fb") return Scheme::Fb;
  if (name == "upper") return Scheme::Upper;
  key_error(path, "unknown scheme '" + name + "'");
}

void apply_env_overrides(json& root) {
  static const char* keys[] = {"m_antennas", "k_users",    "n_slots",
                               "slot_s",     "h_m",        "wavelength_m",
                               "g0_db",      "sigma2_dbm", "p_max_dbm",
                               "aperture_lambda", "d_min_lambda", "r_m",
                               "seed",       "out_dir",    "verify_samples",
                               "workers"};
  for (const char* key : keys) {
    std::string env = "MABEAM_";
    for (const char* c = key; *c; ++c) env += static_cast<char>(std::toupper(*c));
    const char* val = std::getenv(env.c_str());
    if (!val) continue;
    if (std::string(key) == "out_dir") {
      root[key] = std::string(val);
    } else {
      root[key] = std::stod(val);
    }
  }
}

struct RunUnit {
  double value = 0.0;
  std::string value_str;
  Scheme scheme = Scheme::Proposed;
  SystemConfig cfg;
  // outputs
  bool ok = false;
  std::string error;
  double final_objective = 0.0;
  double mc_min_rate = std::nan("");
};

}  // namespace

void ExperimentSpec::validate() const {
  base.validate();
  if (schemes.empty())
    throw std::invalid_argument("config $.schemes: at least one scheme");
  if (axis != Axis::None && values.empty())
    throw std::invalid_argument("config $.sweep.values: sweep needs values");
  for (const double v : values)
    apply_axis(*this, v).validate();
  if (verify_samples < 0)
    throw std::invalid_argument("config $.verify_samples: must be >= 0");
  if (workers < 1)
    throw std::invalid_argument("config $.workers: must be >= 1");
}

const char* axis_key(ExperimentSpec::Axis axis) {
  switch (axis) {
    case ExperimentSpec::Axis::None: return "none";
    case ExperimentSpec::Axis::PMax: return "p_max_dbm";
    case ExperimentSpec::Axis::Antennas: return "m_antennas";
    case ExperimentSpec::Axis::Aperture: return "aperture_lambda";
    case ExperimentSpec::Axis::Users: return "k_users";
  }
  return "none";
}

SystemConfig apply_axis(const ExperimentSpec& spec, double value) {
  SystemConfig cfg = spec.base;
  switch (spec.axis) {
    case ExperimentSpec::Axis::None:
      break;
    case ExperimentSpec::Axis::PMax:
      cfg.max_power_w = dbm_to_watts(value);
      break;
    case ExperimentSpec::Axis::Antennas:
      cfg.num_antennas = static_cast<int>(std::lround(value));
      break;
    case ExperimentSpec::Axis::Aperture:
      cfg.aperture_m = value * cfg.wavelength_m;
      break;
    case ExperimentSpec::Axis::Users: {
      const int users = static_cast<int>(std::lround(value));
      cfg.num_users = users;
      cfg.noise_power_w =
          Eigen::VectorXd::Constant(users, spec.base.noise_power_w(0));
      cfg.pos_error_radius_m =
          Eigen::VectorXd::Constant(users, spec.base.pos_error_radius_m(0));
      if (spec.base.xi_override.size() > 0)
        cfg.xi_override =
            Eigen::VectorXd::Constant(users, spec.base.xi_override(0));
      break;
    }
  }
  return cfg;
}

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  if (!root.is_object()) key_error("$", "top level must be an object");
  apply_env_overrides(root);

  check_keys(root, "$",
             {"m_antennas", "k_users", "n_slots", "slot_s", "bs_xy_m", "h_m",
              "wavelength_m", "g0_db", "sigma2_dbm", "p_max_dbm",
              "aperture_lambda", "d_min_lambda", "r_m", "xi_override",
              "trajectory", "seed", "schemes", "sweep", "out_dir",
              "verify_samples", "workers", "ao"});

  ExperimentSpec spec;
  auto& cfg = spec.base;
  auto get = [&](const char* key, auto fallback) -> json {
    return root.contains(key) ? root[key] : json(fallback);
  };

  cfg.num_antennas = get("m_antennas", 4).get<int>();
  cfg.num_users = get("k_users", 2).get<int>();
  cfg.num_slots = get("n_slots", 6).get<int>();
  cfg.slot_seconds = get("slot_s", 1.0).get<double>();
  if (root.contains("bs_xy_m")) {
    const auto& b = root["bs_xy_m"];
    if (!b.is_array() || b.size() != 2) key_error("$.bs_xy_m", "expected [x, y]");
    cfg.bs_xy << b[0].get<double>(), b[1].get<double>();
  }
  cfg.bs_height_m = get("h_m", 12.0).get<double>();
  cfg.wavelength_m = get("wavelength_m", 0.1).get<double>();
  cfg.ref_gain = db_to_linear(get("g0_db", -40.0).get<double>());
  cfg.max_power_w = dbm_to_watts(get("p_max_dbm", 34.0).get<double>());
  cfg.aperture_m = get("aperture_lambda", 6.0).get<double>() * cfg.wavelength_m;
  cfg.min_spacing_m = get("d_min_lambda", 0.3).get<double>() * cfg.wavelength_m;
  {
    Eigen::VectorXd sigma_dbm =
        per_user_vector(get("sigma2_dbm", -80.0), cfg.num_users, "$.sigma2_dbm");
    cfg.noise_power_w.resize(cfg.num_users);
    for (int k = 0; k < cfg.num_users; ++k)
      cfg.noise_power_w(k) = dbm_to_watts(sigma_dbm(k));
  }
  cfg.pos_error_radius_m =
      per_user_vector(get("r_m", 0.5), cfg.num_users, "$.r_m");
  if (root.contains("xi_override") && !root["xi_override"].is_null())
    cfg.xi_override =
        per_user_vector(root["xi_override"], cfg.num_users, "$.xi_override");

  if (root.contains("trajectory")) {
    const auto& t = root["trajectory"];
    check_keys(t, "$.trajectory", {"type", "speed_mps", "area_side_m", "path"});
    const std::string type = t.value("type", "line");
    if (type == "line") {
      spec.trajectory.kind = TrajectoryOptions::Kind::Line;
    } else if (type == "file") {
      spec.trajectory.kind = TrajectoryOptions::Kind::File;
      if (!t.contains("path")) key_error("$.trajectory.path", "required for file");
      spec.trajectory.path = t["path"].get<std::string>();
    } else {
      key_error("$.trajectory.type", "expected 'line' or 'file'");
    }
    spec.trajectory.speed_mps = t.value("speed_mps", 10.0);
    spec.trajectory.area_side_m = t.value("area_side_m", 500.0);
  }

  spec.seed = get("seed", 1).get<std::uint64_t>();
  if (root.contains("schemes")) {
    spec.schemes.clear();
    if (!root["schemes"].is_array()) key_error("$.schemes", "expected array");
    for (size_t i = 0; i < root["schemes"].size(); ++i)
      spec.schemes.push_back(parse_scheme(root["schemes"][i].get<std::string>(),
                                          "$.schemes[" + std::to_string(i) + "]"));
  }
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    check_keys(s, "$.sweep", {"axis", "values"});
    const std::string axis = s.value("axis", "none");
    if (axis == "none")
      spec.axis = ExperimentSpec::Axis::None;
    else if (axis == "p_max_dbm")
      spec.axis = ExperimentSpec::Axis::PMax;
    else if (axis == "m_antennas")
      spec.axis = ExperimentSpec::Axis::Antennas;
    else if (axis == "aperture_lambda")
      spec.axis = ExperimentSpec::Axis::Aperture;
    else if (axis == "k_users")
      spec.axis = ExperimentSpec::Axis::Users;
    else
      key_error("$.sweep.axis", "unknown axis '" + axis + "'");
    if (s.contains("values"))
      for (const auto& v : s["values"]) spec.values.push_back(v.get<double>());
  }
  spec.out_dir = get("out_dir", ".").get<std::string>();
  spec.verify_samples = get("verify_samples", 10000).get<int>();
  spec.workers = get("workers", 1).get<int>();
  if (root.contains("ao")) {
    const auto& a = root["ao"];
    check_keys(a, "$.ao", {"max_outer", "epsilon", "solver_tol"});
    spec.ao.max_outer = a.value("max_outer", 30);
    spec.ao.epsilon = a.value("epsilon", 1e-4);
    spec.ao.solver.tol = a.value("solver_tol", 1e-7);
  }

  spec.validate();
  return spec;
}

void save_design_csv(const std::string& path, const DesignPoint& design,
                     const Eigen::MatrixXd& gamma) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "slot,user,antenna,w_re,w_im,x,gamma\n";
  for (int n = 0; n < design.num_slots(); ++n) {
    const auto& w = design.beams[n];
    for (int k = 0; k < w.cols(); ++k)
      for (int m = 0; m < w.rows(); ++m)
        out << n << "," << k << "," << m << "," << fmt9(w(m, k).real()) << ","
            << fmt9(w(m, k).imag()) << "," << fmt9(design.positions[n](m))
            << "," << fmt9(gamma(k, n)) << "\n";
  }
}

LoadedDesign load_design_csv(const std::string& path, const SystemConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("design file not found: " + path);
  LoadedDesign out;
  const int M = cfg.num_antennas, K = cfg.num_users, N = cfg.num_slots;
  out.design.beams.assign(N, Eigen::MatrixXcd::Zero(M, K));
  out.design.positions.assign(N, Eigen::VectorXd::Zero(M));
  out.gamma = Eigen::MatrixXd::Zero(K, N);
  std::string line;
  std::getline(in, line);  // header
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    double vals[7];
    for (int i = 0; i < 7; ++i) {
      if (!std::getline(ss, tok, ','))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected 7 columns");
      vals[i] = std::stod(tok);
    }
    const int n = static_cast<int>(vals[0]), k = static_cast<int>(vals[1]),
              m = static_cast<int>(vals[2]);
    if (n < 0 || n >= N || k < 0 || k >= K || m < 0 || m >= M)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": index out of range for the config");
    out.design.beams[n](m, k) = std::complex<double>(vals[3], vals[4]);
    out.design.positions[n](m) = vals[5];
    out.gamma(k, n) = vals[6];
  }
  return out;
}

namespace {

void run_one(const ExperimentSpec& spec, RunUnit& unit) {
  try {
    const auto scen = build_scenario(unit.cfg, spec.trajectory, spec.seed);
    AoOptions ao = spec.ao;
    const AoResult res = run_scheme(unit.cfg, scen, unit.scheme, ao);

    const std::string tag =
        std::string(to_string(unit.scheme)) + "_" + unit.value_str;
    const std::filesystem::path dir(spec.out_dir);

    {
      std::ofstream out(dir / ("convergence_" + tag + ".csv"));
      out << "iter,objective,seconds\n";
      out << "0," << fmt9(res.trace.phi_init) << ",0\n";
      for (size_t i = 0; i < res.trace.iterations.size(); ++i) {
        const auto& it = res.trace.iterations[i];
        out << (i + 1) << "," << fmt9(it.phi) << "," << fmt9(it.seconds) << "\n";
      }
    }
    save_design_csv(dir / ("design_" + tag + ".csv"), res.design,
                    res.slacks.gamma);

    unit.final_objective = res.trace.iterations.empty()
                               ? res.trace.phi_init
                               : res.trace.iterations.back().phi;
    if (spec.verify_samples > 0) {
      // verification runs against the scenario the scheme actually saw
      const ScenarioState mc_scen =
          unit.scheme == Scheme::Upper ? scen.perfect() : scen;
      const auto rep =
          verify::mc_worst_case(unit.cfg, mc_scen, res.design, res.slacks.gamma,
                                spec.verify_samples, spec.seed);
      unit.mc_min_rate = rep.worst_sum_rate;
    }
    unit.ok = true;
  } catch (const std::exception& e) {
    unit.ok = false;
    unit.error = e.what();
  }
}

}  // namespace

int run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::create_directories(spec.out_dir);

  std::vector<double> values = spec.values;
  if (spec.axis == ExperimentSpec::Axis::None) values = {0.0};

  std::vector<RunUnit> units;
  for (const double v : values)
    for (const Scheme s : spec.schemes) {
      RunUnit u;
      u.value = v;
      u.value_str =
          spec.axis == ExperimentSpec::Axis::None ? "default" : fmt9(v);
      u.scheme = s;
      u.cfg = apply_axis(spec, v);
      units.push_back(std::move(u));
    }

  const int threads =
      std::max(1, std::min<int>(spec.workers, static_cast<int>(units.size())));
  if (threads == 1) {
    for (auto& u : units) run_one(spec, u);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t]() {
        for (size_t i = t; i < units.size(); i += threads) run_one(spec, units[i]);
      });
    for (auto& th : pool) th.join();
  }

  {
    std::ofstream out(std::filesystem::path(spec.out_dir) /
                      ("sweep_" + std::string(axis_key(spec.axis)) + ".csv"));
    out << "axis_value,scheme,final_objective,mc_min_rate\n";
    for (const auto& u : units) {
      if (!u.ok) continue;
      out << u.value_str << "," << to_string(u.scheme) << ","
          << fmt9(u.final_objective) << "," << fmt9(u.mc_min_rate) << "\n";
    }
  }

  int failures = 0;
  for (const auto& u : units) {
    if (u.ok) continue;
    ++failures;
    std::fprintf(stderr, "run %s %s failed: %s\n", to_string(u.scheme),
                 u.value_str.c_str(), u.error.c_str());
  }
  return failures;
}

}  // namespace mabeam
