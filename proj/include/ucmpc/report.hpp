#pragma once

#include "ucmpc/l1_design.hpp"
#include "ucmpc/ppg.hpp"
#include "ucmpc/scenarios.hpp"
#include "ucmpc/sim.hpp"
#include "ucmpc/tf_norms.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ucmpc {

/// Everything the design command produces, bound to the scenario it was
/// computed for by the content hash.
struct DesignArtifact {
  std::string scenario_name;
  std::uint64_t scenario_hash = 0;
  Mat Kx;             // gain the bounds were certified for
  bool has_ppg = false;
  PpgResult ppg;      // present when the gain was synthesized/certified here
  NormTable norms;    // full-system norms at the final filter bank
  TighteningReport tightening;
};

/// Full design pipeline for a scenario: take the fixed gain or synthesize
/// one, run the constraint-tightening design, and recompute the final-filter
/// norm table. Throws InfeasibleError when any stage has no answer.
DesignArtifact run_design(const Scenario& scenario);

/// JSON serialization with a schema tag ("ucmpc-design-report/1"). Doubles
/// round-trip exactly.
void save_design_report(const DesignArtifact& artifact,
                        const std::string& path);
DesignArtifact load_design_report(const std::string& path);

void save_verification(const VerificationSummary& summary,
                       const std::string& scenario_name,
                       std::uint64_t scenario_hash,
                       const std::string& controller, const std::string& path);

/// Headline numbers of one completed run, for the comparison table.
struct RunMetrics {
  std::string label;
  double steady_state_err = 0.0;  // max output error over the final 10%
  double max_state_violation = 0.0;  // worst depth outside the state box
  Vec max_tube;                      // per-channel max |x - x_n|
  double final_pos_dist = 0.0;  // Euclidean norm of the final leading block
  bool mpc_always_ok = true;
};

RunMetrics compute_metrics(const SimLog& log, const Scenario& scenario,
                           const std::string& label);

void save_comparison(const std::vector<RunMetrics>& rows,
                     const std::string& path);

}  // namespace ucmpc
