// Batch front-end: design, simulate, verify, and compare commands over the
// built-in scenarios or JSON scenario configs.

#include "CLI11.hpp"

#include "ucmpc/report.hpp"
#include "ucmpc/scenarios.hpp"
#include "ucmpc/sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace ucmpc;

// ---------------------------------------------------------------------------
// Scenario resolution (built-in name or JSON config with overrides)

Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  }
  return v;
}

Box box_from_json(const json& j) {
  return Box(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
}

Mat diag_from_json(const json& j) {
  return Vec(vec_from_json(j)).asDiagonal();
}

/// Config format: {"base": "<builtin>", "name": ..., overrides...}. Numeric
/// constants are overridable; the truth/reference callbacks always come from
/// the base scenario.
Scenario scenario_from_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario config " + path);
  json j;
  in >> j;

  Scenario s = scenario_by_name(j.at("base").get<std::string>());
  if (j.contains("name")) s.name = j.at("name").get<std::string>();
  if (j.contains("duration")) s.duration = j.at("duration").get<double>();
  if (j.contains("dt_sim")) s.dt_sim = j.at("dt_sim").get<double>();
  if (j.contains("t_delta")) s.t_delta = j.at("t_delta").get<double>();
  if (j.contains("horizon")) s.horizon = j.at("horizon").get<int>();
  if (j.contains("soft_penalty")) {
    s.soft_penalty = j.at("soft_penalty").get<double>();
  }
  if (j.contains("gamma1")) s.l1.gamma1 = j.at("gamma1").get<double>();
  if (j.contains("kf")) {
    s.l1.filters = FilterBank::uniform(s.plant.m(), j.at("kf").get<double>());
  }
  if (j.contains("T")) s.l1.T = j.at("T").get<double>();
  if (j.contains("T_runtime")) s.l1.T_runtime = j.at("T_runtime").get<double>();
  if (j.contains("Tx_offdiag")) {
    s.l1.Tx_offdiag = j.at("Tx_offdiag").get<double>();
  }
  if (j.contains("scale_w")) {
    s.design.scale_unmatched = j.at("scale_w").get<bool>();
  }
  if (j.contains("X")) s.X = box_from_json(j.at("X"));
  if (j.contains("U")) s.U = box_from_json(j.at("U"));
  if (j.contains("X0")) s.X0 = box_from_json(j.at("X0"));
  if (j.contains("x0")) s.x0 = vec_from_json(j.at("x0"));
  if (j.contains("b_wj")) s.uncertainty.b_wj = vec_from_json(j.at("b_wj"));
  if (j.contains("Wy")) s.Wy = diag_from_json(j.at("Wy"));
  if (j.contains("Wu")) s.Wu = diag_from_json(j.at("Wu"));
  if (j.contains("Wdu")) s.Wdu = diag_from_json(j.at("Wdu"));
  return s;
}

struct ScenarioFlags {
  std::string spec;      // built-in name or config path
  double kf = 0.0;       // > 0: override initial filter bandwidth
  double t_runtime = -1.0;  // >= 0: override runtime estimation period
  bool scale_w = true;
};

Scenario resolve_scenario(const ScenarioFlags& f) {
  Scenario s;
  if (f.spec.size() > 5 && f.spec.substr(f.spec.size() - 5) == ".json") {
    s = scenario_from_config(f.spec);
  } else {
    s = scenario_by_name(f.spec);
  }
  if (f.kf > 0.0) s.l1.filters = FilterBank::uniform(s.plant.m(), f.kf);
  if (f.t_runtime >= 0.0) s.l1.T_runtime = f.t_runtime;
  s.design.scale_unmatched = f.scale_w;
  return s;
}

std::string default_report_path(const std::string& out_dir,
                                const std::string& name) {
  return (fs::path(out_dir) / (name + "-design.json")).string();
}

void print_claims(const VerificationSummary& sum) {
  for (const auto& c : sum.claims) {
    std::cout << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name
              << "  (worst margin " << c.worst_margin << " at t="
              << c.worst_time << ")\n";
  }
}

// ---------------------------------------------------------------------------
// CSV log reading (verify/compare consume completed runs)

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

SimLog read_csv_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty log " + path);
  const auto header = split_csv_line(line);

  auto count_block = [&](const std::string& stem) {
    int count = 0;
    while (std::find(header.begin(), header.end(),
                     stem + std::to_string(count + 1)) != header.end()) {
      ++count;
    }
    return count;
  };
  auto index_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::runtime_error("log " + path + " lacks column " + name);
    }
    return static_cast<int>(it - header.begin());
  };

  SimLog log;
  log.n = count_block("x");
  log.m = count_block("ua");
  if (log.n == 0 || log.m == 0) {
    throw std::runtime_error("log " + path + " has no state/input columns");
  }
  const int ix = index_of("x1"), ixn = index_of("xn1"),
            ixh = index_of("xhat1"), ish = index_of("sighat1"),
            iua = index_of("ua1"), iu = index_of("u1"),
            imp = index_of("mpc_ok");
  const bool oracle =
      std::find(header.begin(), header.end(), "xr1") != header.end();
  const int ixr = oracle ? index_of("xr1") : -1;
  const int igx = oracle ? index_of("gap_xr_x") : -1;
  const int igxn = oracle ? index_of("gap_xr_xn") : -1;

  auto take_vec = [](const std::vector<std::string>& cells, int start,
                     int count) {
    Vec v(count);
    for (int i = 0; i < count; ++i) v(i) = std::stod(cells.at(start + i));
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    log.t.push_back(std::stod(cells.at(0)));
    log.x.push_back(take_vec(cells, ix, log.n));
    log.x_n.push_back(take_vec(cells, ixn, log.n));
    log.x_hat.push_back(take_vec(cells, ixh, log.n));
    log.sigma_hat.push_back(take_vec(cells, ish, log.n));
    log.u_a.push_back(take_vec(cells, iua, log.m));
    log.u.push_back(take_vec(cells, iu, log.m));
    log.mpc_ok.push_back(static_cast<int>(std::stod(cells.at(imp))));
    if (oracle) {
      log.x_r.push_back(take_vec(cells, ixr, log.n));
      log.gap_xr_x.push_back(std::stod(cells.at(igx)));
      log.gap_xr_xn.push_back(std::stod(cells.at(igxn)));
    }
  }
  if (log.t.size() >= 2) log.dt_log = log.t[1] - log.t[0];
  return log;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_design(const ScenarioFlags& flags, const std::string& out_dir) {
  const Scenario s = resolve_scenario(flags);
  fs::create_directories(out_dir);

  const DesignArtifact artifact = run_design(s);
  const std::string path = default_report_path(out_dir, s.name);
  save_design_report(artifact, path);

  const TighteningReport& t = artifact.tightening;
  std::cout << "design " << s.name << ": rho_r=" << t.rho_r
            << " rho=" << t.rho << " T_final=" << t.T_final << "\n";
  std::cout << "  tilde_rho: " << t.tilde_rho.transpose() << "\n";
  std::cout << "  rho_ua: " << t.rho_ua.transpose() << "\n";
  std::cout << "  tilde_rho_u: " << t.tilde_rho_u.transpose() << "\n";
  for (const auto& c : t.caveats) std::cout << "  caveat: " << c << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_simulate(const ScenarioFlags& flags, std::string report_path,
                 const std::string& controller, double duration, double dt_sim,
                 const std::string& out_dir) {
  Scenario s = resolve_scenario(flags);
  fs::create_directories(out_dir);
  if (report_path.empty()) report_path = default_report_path(out_dir, s.name);

  const DesignArtifact artifact = load_design_report(report_path);
  if (artifact.scenario_hash != s.content_hash()) {
    std::cerr << "error: report " << report_path
              << " was computed for a different scenario (content hash "
                 "mismatch); re-run design\n";
    return 1;
  }

  const double dur = duration > 0.0 ? duration : s.duration;
  const double dt = dt_sim > 0.0 ? dt_sim : s.dt_sim;

  RunOptions opts;
  opts.kx_override = artifact.Kx;

  SimLog log;
  if (controller == "ucmpc") {
    log = run_ucmpc(s, artifact.tightening, dur, dt, opts);
  } else if (controller == "ablation-noua") {
    opts.disable_ua = true;
    log = run_ucmpc(s, artifact.tightening, dur, dt, opts);
  } else if (controller == "vanilla") {
    log = run_vanilla_mpc(s, dur, dt, opts);
  } else {
    std::cerr << "error: unknown controller '" << controller << "'\n";
    return 1;
  }

  const std::string stem = s.name + "-" + controller;
  const std::string csv_path = (fs::path(out_dir) / (stem + ".csv")).string();
  write_csv(log, s, &artifact.tightening, csv_path);

  const VerificationSummary sum = verify_bounds(log, s, artifact.tightening);
  const std::string verify_path =
      (fs::path(out_dir) / (stem + "-verify.json")).string();
  save_verification(sum, s.name, artifact.scenario_hash, controller,
                    verify_path);

  std::cout << "simulate " << s.name << " [" << controller << "] "
            << log.t.size() << " samples";
  if (log.aborted) std::cout << " (ABORTED)";
  std::cout << "\n";
  for (const auto& fail : log.failures) {
    std::cout << "  failure at t=" << fail.t << ": " << fail.what << "\n";
  }
  print_claims(sum);
  std::cout << "wrote " << csv_path << " and " << verify_path << "\n";

  if (controller == "ucmpc") {
    return (sum.all_pass && !log.aborted) ? 0 : 3;
  }
  return 0;
}

int cmd_verify(const ScenarioFlags& flags, std::string report_path,
               const std::string& log_path, const std::string& out_dir) {
  const Scenario s = resolve_scenario(flags);
  if (report_path.empty()) report_path = default_report_path(out_dir, s.name);
  const DesignArtifact artifact = load_design_report(report_path);
  if (artifact.scenario_hash != s.content_hash()) {
    std::cerr << "error: report/scenario content hash mismatch\n";
    return 1;
  }
  const SimLog log = read_csv_log(log_path);
  const VerificationSummary sum = verify_bounds(log, s, artifact.tightening);
  print_claims(sum);
  return sum.all_pass ? 0 : 3;
}

int cmd_compare(const ScenarioFlags& flags,
                const std::vector<std::string>& log_paths,
                const std::string& out_dir) {
  const Scenario s = resolve_scenario(flags);

  std::vector<std::string> missing;
  for (const auto& p : log_paths) {
    if (!fs::exists(p)) missing.push_back(p);
  }
  if (!missing.empty()) {
    std::cerr << "error: missing logs:";
    for (const auto& p : missing) std::cerr << " " << p;
    std::cerr << "\n";
    return 1;
  }

  std::vector<RunMetrics> rows;
  for (const auto& p : log_paths) {
    const SimLog log = read_csv_log(p);
    rows.push_back(compute_metrics(log, s, fs::path(p).stem().string()));
  }

  fs::create_directories(out_dir);
  const std::string path =
      (fs::path(out_dir) / (s.name + "-compare.json")).string();
  save_comparison(rows, path);

  std::cout << "label | steady_state_err | max_violation | max_tube_inf | "
               "final_pos_dist | mpc_ok\n";
  for (const auto& r : rows) {
    std::cout << r.label << " | " << r.steady_state_err << " | "
              << r.max_state_violation << " | "
              << (r.max_tube.size() ? r.max_tube.maxCoeff() : 0.0) << " | "
              << r.final_pos_dist << " | " << (r.mpc_always_ok ? "yes" : "no")
              << "\n";
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-compensating MPC design and simulation toolkit"};
  app.require_subcommand(1);

  ScenarioFlags flags;
  std::string out_dir = "out";
  std::string report_path;
  std::string controller = "ucmpc";
  std::string log_path;
  std::vector<std::string> compare_logs;
  double duration = 0.0;
  double dt_sim = 0.0;
  int seed = 0;

  auto add_scenario_opts = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", flags.spec,
                    "built-in scenario name or .json config path")
        ->required();
    cmd->add_option("--kf", flags.kf,
                    "override the initial filter bandwidth (all channels)");
    cmd->add_option("--T-runtime", flags.t_runtime,
                    "override the runtime estimation period (0 = certified)");
    cmd->add_flag("--scale-w,!--no-scale-w", flags.scale_w,
                  "equalize per-channel unmatched disturbance bounds");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed,
                    "accepted for interface stability; runs are "
                    "deterministic");
  };

  CLI::App* design = app.add_subcommand(
      "design", "run gain synthesis (if needed) and constraint tightening");
  add_scenario_opts(design);

  CLI::App* simulate =
      app.add_subcommand("simulate", "closed-loop run against a design report");
  add_scenario_opts(simulate);
  simulate->add_option("--report", report_path,
                       "design report path (default <out>/<name>-design.json)");
  simulate->add_option("--controller", controller,
                       "ucmpc | vanilla | ablation-noua");
  simulate->add_option("--duration", duration, "simulated seconds");
  simulate->add_option("--dt-sim", dt_sim, "integration step");

  CLI::App* verify =
      app.add_subcommand("verify", "re-check certified bounds on a CSV log");
  add_scenario_opts(verify);
  verify->add_option("--report", report_path, "design report path");
  verify->add_option("--log", log_path, "CSV log path")->required();

  CLI::App* compare =
      app.add_subcommand("compare", "tabulate metrics across completed runs");
  add_scenario_opts(compare);
  compare->add_option("logs", compare_logs, "CSV logs (>= 2)")
      ->expected(2, -1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(design)) return cmd_design(flags, out_dir);
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(flags, report_path, controller, duration, dt_sim,
                          out_dir);
    }
    if (app.got_subcommand(verify)) {
      return cmd_verify(flags, report_path, log_path, out_dir);
    }
    if (app.got_subcommand(compare)) {
      return cmd_compare(flags, compare_logs, out_dir);
    }
  } catch (const ucmpc::InfeasibleError& e) {
    std::cerr << "design infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
