#include "ucmpc/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ucmpc {

namespace {

using nlohmann::json;

constexpr const char* kDesignSchema = "ucmpc-design-report/1";
constexpr const char* kVerifySchema = "ucmpc-verification/1";
constexpr const char* kCompareSchema = "ucmpc-comparison/1";

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = rows == 0 ? 0 : j.at(0).size();
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) {
      throw std::runtime_error("report: ragged matrix in JSON");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          j.at(i).at(c).get<double>();
    }
  }
  return m;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  }
  return v;
}

json box_to_json(const Box& b) {
  return json{{"lo", vec_to_json(b.lo)}, {"hi", vec_to_json(b.hi)}};
}

Box box_from_json(const json& j) {
  return Box(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
}

std::string hash_to_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::uint64_t hash_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

DesignArtifact run_design(const Scenario& sc) {
  DesignArtifact a;
  a.scenario_name = sc.name;
  a.scenario_hash = sc.content_hash();

  FeedbackGain kx;
  if (sc.Kx_fixed.size() > 0) {
    kx = FeedbackGain(sc.plant, sc.Kx_fixed);
  } else {
    a.ppg = synthesize_kx(sc.ppg);
    if (!a.ppg.feasible) {
      throw InfeasibleError("gain synthesis failed for scenario '" + sc.name +
                            "'");
    }
    a.has_ppg = true;
    kx = FeedbackGain(sc.plant, a.ppg.Kx);
  }
  a.Kx = kx.Kx;

  a.tightening = design_tightening(sc.plant, kx, sc.X, sc.U, sc.X0,
                                   sc.uncertainty, sc.l1, sc.design);

  // Norm table at the final filter bank and scaled unmatched map, for the
  // record (the tightening step consumed it internally).
  const Mat bu_bar = sc.plant.Bu * a.tightening.Lambda.asDiagonal();
  const Mat am = sc.plant.A + sc.plant.B * kx.Kx;
  a.norms =
      compute_norm_table(am, sc.plant.B, bu_bar, sc.plant.Bdag,
                         a.tightening.filters_final, sc.l1.Ae, sc.X0,
                         sc.design.norm_opts);
  return a;
}

void save_design_report(const DesignArtifact& a, const std::string& path) {
  const TighteningReport& t = a.tightening;
  json j{
      {"schema", kDesignSchema},
      {"scenario", a.scenario_name},
      {"scenario_hash", hash_to_hex(a.scenario_hash)},
      {"kx", mat_to_json(a.Kx)},
      {"norms",
       {{"h_xm", a.norms.h_xm},
        {"h_xu", a.norms.h_xu},
        {"g_xm", a.norms.g_xm},
        {"rho_in", a.norms.rho_in},
        {"hxm_c_bdag", a.norms.hxm_c_bdag},
        {"c_bdag_norm", a.norms.c_bdag_norm},
        {"c_norm", vec_to_json(a.norms.c_norm)}}},
      {"tightening",
       {{"rho_r", t.rho_r},
        {"rho", t.rho},
        {"check_rho_r", vec_to_json(t.check_rho_r)},
        {"tilde_rho", vec_to_json(t.tilde_rho)},
        {"rho_ua", vec_to_json(t.rho_ua)},
        {"tilde_rho_u", vec_to_json(t.tilde_rho_u)},
        {"gamma2", t.gamma2},
        {"Xr", box_to_json(t.Xr)},
        {"Xa", box_to_json(t.Xa)},
        {"Xn", box_to_json(t.Xn)},
        {"Un", box_to_json(t.Un)},
        {"lambda", vec_to_json(t.Lambda)},
        {"uopt_bound", t.uopt_bound},
        {"kf_final", vec_to_json(t.filters_final.kf)},
        {"T_final", t.T_final},
        {"caveats", t.caveats}}},
  };
  if (a.has_ppg) {
    j["ppg"] = {{"feasible", a.ppg.feasible}, {"beta", a.ppg.beta},
                {"lambda", a.ppg.lambda},     {"mu", a.ppg.mu},
                {"kx", mat_to_json(a.ppg.Kx)}, {"V", mat_to_json(a.ppg.V)},
                {"Y", mat_to_json(a.ppg.Y)}};
  }
  write_json_file(j, path);
}

DesignArtifact load_design_report(const std::string& path) {
  const json j = read_json_file(path);
  if (j.value("schema", "") != kDesignSchema) {
    throw std::runtime_error("report: unsupported schema in " + path);
  }
  DesignArtifact a;
  a.scenario_name = j.at("scenario").get<std::string>();
  a.scenario_hash = hash_from_hex(j.at("scenario_hash").get<std::string>());
  a.Kx = mat_from_json(j.at("kx"));

  const json& n = j.at("norms");
  a.norms.h_xm = n.at("h_xm").get<double>();
  a.norms.h_xu = n.at("h_xu").get<double>();
  a.norms.g_xm = n.at("g_xm").get<double>();
  a.norms.rho_in = n.at("rho_in").get<double>();
  a.norms.hxm_c_bdag = n.at("hxm_c_bdag").get<double>();
  a.norms.c_bdag_norm = n.at("c_bdag_norm").get<double>();
  a.norms.c_norm = vec_from_json(n.at("c_norm"));

  const json& t = j.at("tightening");
  TighteningReport& rep = a.tightening;
  rep.rho_r = t.at("rho_r").get<double>();
  rep.rho = t.at("rho").get<double>();
  rep.check_rho_r = vec_from_json(t.at("check_rho_r"));
  rep.tilde_rho = vec_from_json(t.at("tilde_rho"));
  rep.rho_ua = vec_from_json(t.at("rho_ua"));
  rep.tilde_rho_u = vec_from_json(t.at("tilde_rho_u"));
  rep.gamma2 = t.at("gamma2").get<double>();
  rep.Xr = box_from_json(t.at("Xr"));
  rep.Xa = box_from_json(t.at("Xa"));
  rep.Xn = box_from_json(t.at("Xn"));
  rep.Un = box_from_json(t.at("Un"));
  rep.Lambda = vec_from_json(t.at("lambda"));
  rep.uopt_bound = t.at("uopt_bound").get<double>();
  rep.filters_final = FilterBank(vec_from_json(t.at("kf_final")));
  rep.T_final = t.at("T_final").get<double>();
  rep.caveats = t.at("caveats").get<std::vector<std::string>>();

  if (j.contains("ppg")) {
    a.has_ppg = true;
    const json& p = j.at("ppg");
    a.ppg.feasible = p.at("feasible").get<bool>();
    a.ppg.beta = p.at("beta").get<double>();
    a.ppg.lambda = p.at("lambda").get<double>();
    a.ppg.mu = p.at("mu").get<double>();
    a.ppg.Kx = mat_from_json(p.at("kx"));
    a.ppg.V = mat_from_json(p.at("V"));
    a.ppg.Y = mat_from_json(p.at("Y"));
  }
  return a;
}

void save_verification(const VerificationSummary& summary,
                       const std::string& scenario_name,
                       std::uint64_t scenario_hash,
                       const std::string& controller,
                       const std::string& path) {
  json claims = json::array();
  for (const auto& c : summary.claims) {
    claims.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"worst_margin", c.worst_margin},
                      {"worst_time", c.worst_time}});
  }
  const json j{{"schema", kVerifySchema},
               {"scenario", scenario_name},
               {"scenario_hash", hash_to_hex(scenario_hash)},
               {"controller", controller},
               {"all_pass", summary.all_pass},
               {"claims", std::move(claims)}};
  write_json_file(j, path);
}

RunMetrics compute_metrics(const SimLog& log, const Scenario& sc,
                           const std::string& label) {
  RunMetrics metrics;
  metrics.label = label;
  const std::size_t count = log.t.size();
  if (count == 0) return metrics;

  const std::size_t tail_start = count - std::max<std::size_t>(1, count / 10);
  double ss_err = 0.0;
  for (std::size_t k = tail_start; k < count; ++k) {
    const Vec err = sc.Cy * log.x[k] - sc.reference(log.t[k]);
    ss_err = std::max(ss_err, err.lpNorm<Eigen::Infinity>());
  }
  metrics.steady_state_err = ss_err;

  double violation = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const Vec& x = log.x[k];
    for (int i = 0; i < sc.X.dim(); ++i) {
      if (sc.X.lo(i) > -Box::kUnbounded) {
        violation = std::max(violation, sc.X.lo(i) - x(i));
      }
      if (sc.X.hi(i) < Box::kUnbounded) {
        violation = std::max(violation, x(i) - sc.X.hi(i));
      }
    }
  }
  metrics.max_state_violation = violation;

  metrics.max_tube = Vec::Zero(log.n);
  for (std::size_t k = 0; k < count; ++k) {
    metrics.max_tube =
        metrics.max_tube.cwiseMax((log.x[k] - log.x_n[k]).cwiseAbs());
  }

  const int lead = std::min(3, log.n);
  metrics.final_pos_dist = log.x.back().head(lead).norm();

  for (int ok : log.mpc_ok) metrics.mpc_always_ok &= (ok != 0);
  metrics.mpc_always_ok = metrics.mpc_always_ok && !log.aborted &&
                          log.failures.empty();
  return metrics;
}

void save_comparison(const std::vector<RunMetrics>& rows,
                     const std::string& path) {
  json entries = json::array();
  for (const auto& r : rows) {
    entries.push_back({{"label", r.label},
                       {"steady_state_err", r.steady_state_err},
                       {"max_state_violation", r.max_state_violation},
                       {"max_tube", vec_to_json(r.max_tube)},
                       {"final_pos_dist", r.final_pos_dist},
                       {"mpc_always_ok", r.mpc_always_ok}});
  }
  const json j{{"schema", kCompareSchema}, {"runs", std::move(entries)}};
  write_json_file(j, path);
}

}  // namespace ucmpc
