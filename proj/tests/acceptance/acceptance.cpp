// Runs every acceptance criterion end to end and prints one PASS/FAIL line
// per criterion. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "alr/cli.hpp"
#include "alr/experiments.hpp"
#include "alr/oracle.hpp"

using namespace alr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t index_of(const std::vector<DeltaRecord>& recs, double delta) {
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (std::abs(recs[i].delta - delta) <= 1e-9 * delta) return i;
  return recs.size();
}

// Suites are shared between criteria; each runs once.
const SuiteResult& suite(ScenarioKind kind) {
  static std::map<ScenarioKind, SuiteResult> cache;
  auto it = cache.find(kind);
  if (it == cache.end()) {
    const auto t0 = std::chrono::steady_clock::now();
    it = cache.emplace(kind, run_scenario_suite(ScenarioConfig::defaults(kind))).first;
    std::fprintf(stderr, "  [%s suite: %.0f s, %zu nodes]\n", std::string(to_string(kind)).c_str(), seconds_since(t0),
                 it->second.report.mesh.nodes);
  }
  return it->second;
}

std::string reasons(const SuiteResult& r) {
  std::string s;
  for (const std::string& why : r.reasons) s += (s.empty() ? "" : "; ") + why;
  return s;
}

// 1. FEM against the mode-matching oracle on a three-level nested sequence.
Outcome oracle_equivalence() {
  GeometryConfig cfg;  // r1 = 1, r2 = 2, r0 = 0
  const std::vector<RingMode> modes{RingMode{2, 1.0, 0.0}};
  const SourceSpec src = SourceSpec::ring(5.0, modes);
  src.add_to_geometry(cfg);
  const double delta = 1e-2;
  const OracleSolution oracle(cloak_layers(cfg, false), modes, 0.0, delta, 5.0);
  auto value = [&](Point2 p) { return oracle.value(p); };
  auto grad = [&](Point2 p) { return oracle.gradient(p); };
  const Region all = Region::tags_only(RegionSet::all());

  auto mesh = std::make_shared<const TriMesh>(build_mesh(cfg, 0.35, 4.0, 0.05));
  std::vector<double> err, secs;
  std::vector<std::size_t> unknowns;
  for (int level = 0; level < 3; ++level) {
    const MediumSpec med = build_medium(ScenarioKind::kQuasistaticCloak, cfg, ObjectSpec{}, delta, 0.0);
    const auto t0 = std::chrono::steady_clock::now();
    const LinearSystem sys = assemble(mesh, med, src, dtn_operator(0.0, cfg.R_out, 48));
    const DiscreteField u = solve_system(sys);
    secs.push_back(seconds_since(t0));
    unknowns.push_back(sys.dimension());
    err.push_back(error_norm(u, value, grad, all, NormKind::kH1) / exact_norm(*mesh, value, grad, all, NormKind::kH1));
    if (level < 2) mesh = std::make_shared<const TriMesh>(refine_uniform(*mesh));
  }
  const double f1 = err[0] / err[1], f2 = err[1] / err[2];
  const double worst_time = std::max({secs[0], secs[1], secs[2]});
  const bool pass = err[2] <= 0.02 && unknowns[2] <= 200000 && f1 >= 1.7 && f2 >= 1.7 && worst_time <= 120.0;
  return {pass, fmt("rel H1 %.3e/%.3e/%.3e at %zu/%zu/%zu unknowns, factors %.2f %.2f, max solve %.1f s", err[0],
                    err[1], err[2], unknowns[0], unknowns[1], unknowns[2], f1, f2, worst_time)};
}

// 2 and 3. Cloaking rate and discrepancy at delta_min.
Outcome cloaking(ScenarioKind kind) {
  const SuiteResult& r = suite(kind);
  const ConvergenceReport& rep = r.report;
  if (rep.failed_index || rep.records.empty()) return {false, "sweep failed: " + rep.failure};
  const double rel = rep.records.back().relative_l2;
  const double gamma = rep.fit.ok ? rep.fit.slope : std::nan("");
  const bool pass = r.verdict == Verdict::kPass && rep.fit.ok && gamma >= 0.3 && rel <= 0.05;
  std::string d = fmt("gamma_fit %.3f over %zu points, production-mesh gamma %.3f, relative L2 %.3e at delta %.0e, verdict %s",
                      gamma, rep.fit.points, rep.coarse_fit && rep.coarse_fit->ok ? rep.coarse_fit->slope : std::nan(""),
                      rel, rep.records.back().delta, std::string(to_string(r.verdict)).c_str());
  if (!pass) d += " (" + reasons(r) + ")";
  return {pass, d};
}

// 4. Power stays bounded for the exterior source; a source inside the
// resonant zone is expected to show a tenfold growth.
Outcome power_boundedness() {
  const ConvergenceReport& rep = suite(ScenarioKind::kQuasistaticCloak).report;
  const std::size_t i2 = index_of(rep.records, 1e-2), i4 = index_of(rep.records, 1e-4);
  if (i2 == rep.records.size() || i4 == rep.records.size()) return {false, "sweep lacks delta = 1e-2 or 1e-4"};
  const double ratio = rep.records[i4].power / rep.records[i2].power;

  ScenarioConfig ctl = ScenarioConfig::defaults(ScenarioKind::kQuasistaticCloak);
  const GeometryConfig& g = ctl.geometry;
  const double rho = 0.9 * 0.5 * (g.r2 + g.r3());
  const double a = kPi / 6.0;
  ctl.source = SourceSpec::bump_pair({rho * std::cos(a), rho * std::sin(a)}, {rho * std::cos(a), -rho * std::sin(a)}, 0.1);
  ctl.source.allow_shell = true;
  const ConvergenceReport cr = run_sweep(ctl);
  const std::size_t j2 = index_of(cr.records, 1e-2), j4 = index_of(cr.records, 1e-4);
  if (cr.failed_index || j2 == cr.records.size() || j4 == cr.records.size())
    return {false, "control sweep failed: " + cr.failure};
  const double growth = cr.records[j4].power / cr.records[j2].power;
  const bool bounded = ratio <= 10.0, resonant = growth >= 10.0;
  return {bounded && resonant,
          fmt("exterior source P(1e-4)/P(1e-2) = %.3f (%s, limit 10); control source at |x| = %.3f: ratio %.3f (%s, need >= 10)",
              ratio, bounded ? "ok" : "too large", rho, growth, resonant ? "ok" : "no growth")};
}

// 5. Reflection mismatch rate and the loss-free homogeneous control.
Outcome reflection_estimates() {
  const SuiteResult& r = suite(ScenarioKind::kQuasistaticCloak);
  const FitResult& mf = r.report.mismatch_fit;

  const ScenarioConfig sc = ScenarioConfig::defaults(ScenarioKind::kQuasistaticCloak);
  const auto mesh = sc.build_production_mesh();
  const GeometryConfig& g = mesh->config();
  const auto F = kelvin_map({0.0, 0.0}, g.r2), G = kelvin_map({0.0, 0.0}, g.r3());
  const MediumSpec plain = homogeneous_medium(0.0);
  const SystemFamily family(mesh, plain, sc.source, dtn_operator(0.0, g.R_out, sc.dtn_modes));
  SparseSolver solver;
  std::vector<double> values;
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < sc.deltas.size(); ++i) {
    const DiscreteField u = solver.solve(family.at(sc.deltas[i]));
    values.push_back(reflection_diagnostics(u, F, G, g).at_r2);
    window.push_back(i);
  }
  const FitResult cf = fit_log_slope(sc.deltas, values, window);
  const bool pass = mf.ok && mf.slope >= 0.8 && cf.ok && std::abs(cf.slope) <= 0.1;
  return {pass, fmt("mismatch slope %.3f over %zu points (need >= 0.8); homogeneous control slope %.3f, mismatch %.3e (need |slope| <= 0.1)",
                    mf.ok ? mf.slope : std::nan(""), mf.points, cf.slope, values.back())};
}

Outcome limit_matches(ScenarioKind kind, bool need_separation) {
  const SuiteResult& r = suite(kind);
  const auto& recs = r.report.records;
  if (recs.empty()) return {false, "sweep failed: " + r.report.failure};
  const double rel = recs.back().relative_l2, alt = recs.back().alternative_l2;
  const bool sep = !need_separation || alt >= 3.0 * rel;
  const bool pass = r.verdict == Verdict::kPass && rel <= 0.05 && sep;
  std::string d = fmt("%s: relative %.3e, alternative %.3e (x%.1f), verdict %s", std::string(to_string(kind)).c_str(), rel,
                      alt, alt / rel, std::string(to_string(r.verdict)).c_str());
  if (!pass) d += " (" + reasons(r) + ")";
  return {pass, d};
}

Outcome combine(const Outcome& a, const Outcome& b) { return {a.pass && b.pass, a.detail + "; " + b.detail}; }

// 8. Doubly complementary verification on the Kelvin layouts.
Outcome medium_verification() {
  bool pass = true;
  std::string d;
  for (ScenarioKind kind : kAllScenarios) {
    if (kind == ScenarioKind::kSlabDc) continue;
    const ScenarioConfig sc = ScenarioConfig::defaults(kind);
    const GeometryConfig cfg = sc.resolved_geometry();
    const auto F = kelvin_map({0.0, 0.0}, cfg.r2), G = kelvin_map({0.0, 0.0}, cfg.r3());
    const auto geom = ComplementaryGeometry::concentric(cfg);
    const MediumSpec med = build_medium(kind, cfg, sc.object, sc.delta_min(), sc.k);
    const bool ok = verify_doubly_complementary(med, F, G, geom, 1000, 1e-10).pass();
    pass &= ok;
    if (!ok) d += std::string(to_string(kind)) + " FAILED; ";
  }
  GeometryConfig cfg;
  const auto F = kelvin_map({0.0, 0.0}, cfg.r2), G = kelvin_map({0.0, 0.0}, cfg.r3());
  const auto geom = ComplementaryGeometry::concentric(cfg);
  const MediumSpec built = build_doubly_complementary(TensorField(), ScalarField(), F, G, geom, 0.5);
  const bool built_ok = verify_doubly_complementary(built, F, G, geom, 1000, 1e-10).pass();
  MediumSpec defect = built;
  defect.set(RegionTag::kAnnulus,
             TensorField::from_function([built](Point2 p) { return 1.1 * built.tensor(RegionTag::kAnnulus, p); }),
             ScalarField::from_function([built](Point2 p) { return built.sigma(RegionTag::kAnnulus, p); }));
  const VerificationReport bad = verify_doubly_complementary(defect, F, G, geom, 1000, 1e-10);
  double worst = 0.0;
  for (const auto& id : bad.identities) worst = std::max(worst, id.max_residual);
  pass &= built_ok && !bad.pass();
  d += fmt("six Kelvin layouts and the generic construction verified at 1e-10 on 1000 samples: %s; 10%% defect rejected: %s (residual %.3f)",
           pass ? "yes" : "no", bad.pass() ? "no" : "yes", worst);
  return {pass, d};
}

// 9. Three-spheres inequality for harmonic fields on random circle triples.
Outcome three_spheres() {
  using Field = std::pair<std::function<cplx(Point2)>, std::function<Grad(Point2)>>;
  const std::vector<Field> fields{
      {[](Point2 p) { return cplx(p.x * p.x - p.y * p.y, 0.0); },
       [](Point2 p) { return Grad{cplx(2 * p.x), cplx(-2 * p.y)}; }},
      {[](Point2 p) { return cplx(p.x * p.x * p.x - 3 * p.x * p.y * p.y, 0.0); },
       [](Point2 p) { return Grad{cplx(3 * p.x * p.x - 3 * p.y * p.y), cplx(-6 * p.x * p.y)}; }},
      {[](Point2 p) { return std::exp(cplx(p.x, p.y)); },
       [](Point2 p) { return Grad{std::exp(cplx(p.x, p.y)), cplx(0, 1) * std::exp(cplx(p.x, p.y))}; }},
      {[](Point2 p) { return cplx(std::log(norm(p - Point2{4.0, 3.0})), 0.0); },
       [](Point2 p) {
         const Point2 d = p - Point2{4.0, 3.0};
         return Grad{cplx(d.x / norm2(d)), cplx(d.y / norm2(d))};
       }},
  };
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> C(-1.0, 1.0), R(0.1, 1.5);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Point2 z{C(rng), C(rng)};
    double r[3] = {R(rng), R(rng), R(rng)};
    std::sort(r, r + 3);
    if (r[1] - r[0] < 0.05) r[1] = r[0] + 0.05;
    if (r[2] - r[1] < 0.05) r[2] = r[1] + 0.05;
    const Field& f = fields[static_cast<std::size_t>(t) % fields.size()];
    worst = std::max(worst, three_sphere_check(f.first, f.second, z, r[0], r[1], r[2]).constant);
  }
  return {worst <= 1.1, fmt("largest constant over 20 triples %.4f (limit 1.1)", worst)};
}

// 10. Repeated suite runs through the command-line tool.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "alr_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = (dir / "c.txt").string();
  std::ofstream(cfg) << "[geometry]\nr1 = 1\nr2 = 2\n[sweep]\ndelta_from_exp = 1\ndelta_to_exp = 2.5\n"
                        "[mesh]\nh_target = 0.5\nrefine_levels = 1\n";
  auto run_once = [&](const std::string& sub) {
    std::ostringstream out, err;
    const int code = cli::run({"suite", "quasistatic-cloak", "--config", cfg, "--out", (dir / sub).string()}, out, err);
    std::ifstream f(dir / sub / "quasistatic-cloak_suite.csv", std::ios::binary);
    return std::pair{code, std::string((std::istreambuf_iterator<char>(f)), {})};
  };
  const auto a = run_once("a");
  ::setenv("ALRCLOAK_THREADS", "2", 1);
  const auto b = run_once("b");
  ::unsetenv("ALRCLOAK_THREADS");
  fs::remove_all(dir);
  const bool pass = a.first != 2 && a.first != 3 && !a.second.empty() && a.second == b.second;
  return {pass, fmt("two suite runs (1 and 2 worker threads): %zu bytes each, identical: %s", a.second.size(),
                    a.second == b.second ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle equivalence", oracle_equivalence},
      {"2 quasistatic cloaking rate", [] { return cloaking(ScenarioKind::kQuasistaticCloak); }},
      {"3 finite-frequency cloaking", [] { return cloaking(ScenarioKind::kFreqCloak); }},
      {"4 power boundedness", power_boundedness},
      {"5 reflection estimates", reflection_estimates},
      {"6 lens becomes cloak",
       [] {
         return combine(limit_matches(ScenarioKind::kSuperlensNoInnerLayer, true),
                        limit_matches(ScenarioKind::kSuperlensFull, false));
       }},
      {"7 complementary cloaking failure",
       [] {
         return combine(limit_matches(ScenarioKind::kCmCloakUnmodified, true),
                        limit_matches(ScenarioKind::kCmCloakModified, true));
       }},
      {"8 medium verification", medium_verification},
      {"9 three-spheres probe", three_spheres},
      {"10 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %s: %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
