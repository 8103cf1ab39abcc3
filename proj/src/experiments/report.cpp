#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "alr/experiments.hpp"

namespace alr {

namespace {

constexpr double kCloakThreshold = 0.05;
constexpr double kSeparation = 3.0;
constexpr double kMinRate = 0.3;
constexpr double kRobustness = 0.05;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

bool uses_rate(ScenarioKind kind) {
  return kind == ScenarioKind::kQuasistaticCloak || kind == ScenarioKind::kFreqCloak;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "PASS";
    case Verdict::kFail:
      return "FAIL";
    case Verdict::kIndeterminate:
      return "INDETERMINATE";
    case Verdict::kExcluded:
      return "EXCLUDED";
  }
  return "?";
}

std::string report_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "delta,error_h1,error_l2,relative_l2,alternative_l2,power,mismatch_r2,mismatch_r3,residual,"
        "error_h1_production,mismatch_r2_production,floor_h1,floor_mismatch_r2\n";
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const DeltaRecord& r = rep.records[i];
    const DeltaRecord& c = i < rep.coarse_records.size() ? rep.coarse_records[i] : r;
    const double floor_h1 = i < rep.floor_h1.size() ? rep.floor_h1[i] : 0.0;
    const double floor_mm = i < rep.floor_mismatch.size() ? rep.floor_mismatch[i] : 0.0;
    os << num(r.delta) << ',' << num(r.error_h1) << ',' << num(r.error_l2) << ',' << num(r.relative_l2) << ','
       << num(r.alternative_l2) << ',' << num(r.power) << ',' << num(r.mismatch.at_r2) << ','
       << num(r.mismatch.at_r3) << ',' << num(r.residual) << ',' << num(c.error_h1) << ','
       << num(c.mismatch.at_r2) << ',' << num(floor_h1) << ',' << num(floor_mm) << '\n';
  }
  return os.str();
}

void write_report_csv(const ConvergenceReport& rep, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << report_csv(rep);
}

SuiteResult run_scenario_suite(const ScenarioConfig& sc) {
  SuiteResult res;
  res.config = sc;
  res.report = run_sweep(sc);
  const ConvergenceReport& rep = res.report;
  auto& why = res.reasons;

  if (sc.kind == ScenarioKind::kSlabDc) {
    res.verdict = Verdict::kExcluded;
    why.push_back("slab-dc runs with experimental maps; excluded from the suite verdict");
    return res;
  }
  if (rep.failed_index || rep.records.size() != sc.deltas.size()) {
    res.verdict = Verdict::kFail;
    why.push_back("sweep aborted: " + rep.failure);
    return res;
  }

  const DeltaRecord& last = rep.records.back();
  bool pass = true;
  bool indeterminate = false;
  if (last.relative_l2 <= kCloakThreshold) {
    why.push_back("relative L2 discrepancy " + num(last.relative_l2) + " <= 0.05 at delta_min");
  } else {
    pass = false;
    why.push_back("relative L2 discrepancy " + num(last.relative_l2) + " > 0.05 at delta_min");
  }

  if (uses_rate(sc.kind)) {
    if (!rep.fit.ok) {
      indeterminate = true;
      why.push_back("rate fit refused: " + rep.fit.diagnostic);
    } else if (rep.fit.slope >= kMinRate) {
      why.push_back("fitted rate " + num(rep.fit.slope) + " >= 0.3");
    } else {
      pass = false;
      why.push_back("fitted rate " + num(rep.fit.slope) + " < 0.3");
    }
    if (rep.fit.ok && rep.coarse_fit) {
      if (!rep.coarse_fit->ok || std::abs(rep.coarse_fit->slope - rep.fit.slope) >= kRobustness) {
        indeterminate = true;
        why.push_back("fitted rate not mesh-robust between the two finest meshes");
      } else {
        why.push_back("fitted rate changes by " + num(std::abs(rep.coarse_fit->slope - rep.fit.slope)) +
                      " < 0.05 between the two finest meshes");
      }
    }
  } else if (sc.kind != ScenarioKind::kSuperlensFull) {
    // Lens and complementary-media hypotheses need a clear separation from
    // the competing reference.
    if (last.alternative_l2 >= kSeparation * last.relative_l2) {
      why.push_back("alternative reference separated by factor " +
                    num(last.alternative_l2 / std::max(last.relative_l2, 1e-300)) + " >= 3");
    } else {
      pass = false;
      why.push_back("alternative reference too close: factor " +
                    num(last.alternative_l2 / std::max(last.relative_l2, 1e-300)) + " < 3");
    }
  }
  res.verdict = !pass ? Verdict::kFail : (indeterminate ? Verdict::kIndeterminate : Verdict::kPass);
  return res;
}

std::string summary_text(const SuiteResult& result) {
  const ConvergenceReport& rep = result.report;
  std::ostringstream os;
  os << "{\n";
  os << "  \"scenario\": \"" << to_string(result.config.kind) << "\",\n";
  os << "  \"verdict\": \"" << to_string(result.verdict) << "\",\n";
  os << "  \"gamma_fit\": " << num(rep.fit.slope) << ",\n";
  os << "  \"gamma_fit_ok\": " << (rep.fit.ok ? "true" : "false") << ",\n";
  os << "  \"gamma_fit_points\": " << rep.fit.points << ",\n";
  os << "  \"gamma_fit_residual\": " << num(rep.fit.residual) << ",\n";
  if (rep.coarse_fit) os << "  \"gamma_fit_production_mesh\": " << num(rep.coarse_fit->slope) << ",\n";
  if (!rep.fit.ok) os << "  \"gamma_fit_diagnostic\": \"" << rep.fit.diagnostic << "\",\n";
  os << "  \"floor_h1_delta_min\": " << num(rep.floor_h1.empty() ? 0.0 : rep.floor_h1.back()) << ",\n";
  os << "  \"mismatch_slope\": " << num(rep.mismatch_fit.slope) << ",\n";
  os << "  \"mismatch_slope_points\": " << rep.mismatch_fit.points << ",\n";
  os << "  \"reference_l2\": " << num(rep.reference_l2) << ",\n";
  os << "  \"mesh_nodes\": " << rep.mesh.nodes << ",\n";
  os << "  \"mesh_hash\": \"" << hex64(rep.mesh.hash) << "\",\n";
  os << "  \"interface_h\": " << num(rep.mesh.h_interface) << ",\n";
  os << "  \"thresholds\": \"calibrated choices: 5% discrepancy, 3x separation, rate 0.3\",\n";
  os << "  \"reasons\": [";
  for (std::size_t i = 0; i < result.reasons.size(); ++i)
    os << (i ? ", " : "") << '"' << result.reasons[i] << '"';
  os << "]\n}\n";
  return os.str();
}

}  // namespace alr
