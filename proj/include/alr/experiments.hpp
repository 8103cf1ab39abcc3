#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alr/discretization.hpp"
#include "alr/field.hpp"
#include "alr/media.hpp"

namespace alr {

struct MeshSchedule {
  double h_target = 0.25;
  double grading = 1.0;
  double layer_size = 0.0;
  // Uniform refinements used for the discretization-floor estimate and the
  // mesh-robustness check (0 disables both).
  int refine_levels = 1;
};

// Element size required on the material interfaces for a sweep reaching
// delta_min: (r2 - r1)/64 * max(1, (delta_min/1e-4)^(1/4)), at most (r2 - r1)/8.
double h_rule(const GeometryConfig& cfg, double delta_min);

// Bulk size h_target, interfaces at h_rule(delta_min) through grading, and
// the annulus capped at twice that size; one refinement level.
MeshSchedule default_schedule(const GeometryConfig& g, double h_target, double delta_min);

// 10^-from_exp ... 10^-to_exp with `per_decade` points per decade.
std::vector<double> geometric_deltas(double from_exp, double to_exp, int per_decade);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kQuasistaticCloak;
  GeometryConfig geometry;  // before scenario inclusions are added
  LayoutParams layout;
  ObjectSpec object;
  SourceSpec source;
  double k = 0.0;
  std::vector<double> deltas;
  MeshSchedule mesh;
  double observation_radius = 0.0;  // R of the observation annulus B_R \ B_r3
  int dtn_modes = 48;
  // SLAB_DC runs only with the shipped experimental maps accepted explicitly.
  bool accept_experimental_slab = false;

  static ScenarioConfig defaults(ScenarioKind kind);
  // 1.5 r3, or the middle of [R0, R_out] when 1.5 r3 reaches past R_out.
  static double default_observation_radius(ScenarioKind kind, const GeometryConfig& g);

  // Throws ConfigError naming the violated rule, including the delta-floor
  // rule on the interface element size.
  void validate() const;
  // Scenario inclusions plus the source and observation curves.
  GeometryConfig resolved_geometry() const;
  std::shared_ptr<const TriMesh> build_production_mesh() const;
  double delta_min() const;
  Region observation_region() const;
};

// Positive-coefficient problems the limit field is compared against.
enum class ReferenceKind : std::uint8_t {
  kHomogeneous,  // object absent
  kWithObject,   // with_object_medium of the scenario
};

// The reference the scenario is judged against: homogeneous for the cloak
// scenarios, the with-object field for the complementary-media failure case
// and the magnified object for the full superlens.
ReferenceKind primary_reference(ScenarioKind kind);
ReferenceKind alternative_reference(ScenarioKind kind);

DiscreteField reference_solution(const ScenarioConfig& sc, ReferenceKind which,
                                 std::shared_ptr<const TriMesh> mesh = nullptr);
DiscreteField reference_solution(const ScenarioConfig& sc);

// delta * |u|^2_{H1(annulus)}.
double power(const DiscreteField& u, double delta);

struct MismatchRecord {
  double at_r2 = 0.0;  // u o F^-1 - u on the boundary of B_r2 minus the objects
  double at_r3 = 0.0;  // u o F^-1 o G^-1 - u o F^-1 on the boundary of B_r3
};

// Cauchy-data surrogate of the reflected fields: the trace difference in a
// Fourier H^1/2 norm plus the normal-derivative difference in H^-1/2, both
// truncated at samples / 4 modes. Normal derivatives come from one-sided
// gradient recovery. Samples inside the objects' neighbourhoods count as zero.
MismatchRecord reflection_diagnostics(const DiscreteField& u, const Diffeomorphism& F, const Diffeomorphism& G,
                                      const GeometryConfig& cfg, int samples = 720);

struct DeltaRecord {
  double delta = 0.0;
  double error_h1 = 0.0;      // |u - u_ref|_{H1(observation)}
  double error_l2 = 0.0;      // |u - u_ref|_{L2(observation)}
  double relative_l2 = 0.0;   // error_l2 / |u_ref|_{L2(observation)}
  double alternative_l2 = 0.0;  // relative L2 distance to the alternative reference
  double power = 0.0;
  MismatchRecord mismatch;
  double residual = 0.0;
};

struct FitResult {
  bool ok = false;
  std::vector<std::size_t> window;  // record indices used
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit
  std::size_t points = 0;
  std::string diagnostic;
};

struct MeshInfo {
  std::size_t nodes = 0;
  std::size_t elements = 0;
  std::uint64_t hash = 0;
  double h_interface = 0.0;
};

struct ConvergenceReport {
  ScenarioKind kind = ScenarioKind::kQuasistaticCloak;
  std::vector<DeltaRecord> records;         // finest mesh
  std::vector<DeltaRecord> coarse_records;  // production mesh, when refined
  MeshInfo mesh;
  MeshInfo coarse_mesh;
  // Per-delta discretization floors of the finest-mesh values.
  std::vector<double> floor_h1;
  std::vector<double> floor_mismatch;
  double reference_l2 = 0.0;
  FitResult fit;                    // error_h1 on the finest mesh
  std::optional<FitResult> coarse_fit;  // error_h1 on the production mesh, same window
  FitResult mismatch_fit;           // mismatch.at_r2 on the finest mesh
  std::optional<std::size_t> failed_index;
  std::string failure;
};

// Errors: solver failures abort the sweep; the records before the failing
// delta are kept and `failed_index` names it.
ConvergenceReport run_sweep(const ScenarioConfig& sc);

// Discretization error of `fine` from one uniform refinement: the gap to
// `coarse` divided by 2^p - 1, with the observed order p clamped to [1, 2].
double richardson_floor(double fine, double coarse);

// Indices of the longest run of points, taken from the largest delta down,
// whose value exceeds 3 * floor.
std::vector<std::size_t> above_floor_window(const std::vector<double>& deltas, const std::vector<double>& values,
                                            const std::vector<double>& floors);

// Least-squares slope of log(value) against log(delta) over `window`.
// Refuses with a diagnostic when fewer than three points remain; warns when
// the slope is below 0.05.
FitResult fit_log_slope(const std::vector<double>& deltas, const std::vector<double>& values,
                        std::vector<std::size_t> window);
FitResult fit_rate(const std::vector<double>& deltas, const std::vector<double>& values,
                   const std::vector<double>& floors);
FitResult fit_rate(const std::vector<double>& deltas, const std::vector<double>& values, double floor);

struct ThreeSphereReport {
  Point2 center;
  std::array<double, 3> radii{};
  std::array<double, 3> norms{};
  double alpha_hadamard = 0.0;  // limit q -> 0
  double best_q = 0.0;
  double alpha = 0.0;          // alpha(best_q)
  double constant = 0.0;       // smallest C at alpha(best_q)
  double margin = 0.0;         // 1.1 - constant
  std::vector<std::pair<double, double>> alpha_curve;  // (q, alpha(q))
};

// alpha(q) = (R2^-q - R3^-q) / (R1^-q - R3^-q), continuous at q = 0.
double three_sphere_alpha(double q, double R1, double R2, double R3);

// Throws DomainError when a circle crosses a material interface of the mesh.
ThreeSphereReport three_sphere_check(const DiscreteField& u, Point2 z, double R1, double R2, double R3);
ThreeSphereReport three_sphere_check(const std::function<cplx(Point2)>& value,
                                     const std::function<Grad(Point2)>& gradient, Point2 z, double R1, double R2,
                                     double R3);

enum class Verdict : std::uint8_t { kPass, kFail, kIndeterminate, kExcluded };
std::string_view to_string(Verdict v);

struct SuiteResult {
  ScenarioConfig config;
  ConvergenceReport report;
  Verdict verdict = Verdict::kIndeterminate;
  std::vector<std::string> reasons;
};

SuiteResult run_scenario_suite(const ScenarioConfig& sc);

// CSV: one row per delta; scientific notation, 17 significant digits.
void write_report_csv(const ConvergenceReport& rep, const std::string& path);
std::string report_csv(const ConvergenceReport& rep);
std::string summary_text(const SuiteResult& result);

// Worker count for independent delta points: ALRCLOAK_THREADS, default 1.
int worker_threads();

}  // namespace alr
