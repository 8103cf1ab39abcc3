#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "alr/experiments.hpp"

namespace alr {

int worker_threads() {
  const char* env = std::getenv("ALRCLOAK_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) throw ConfigError("ALRCLOAK_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 64));
}

double richardson_floor(double fine, double coarse) {
  const double gap = std::abs(coarse - fine);
  const double p = fine > 0.0 && coarse > fine ? std::clamp(std::log2(coarse / fine), 1.0, 2.0) : 1.0;
  return gap / (std::exp2(p) - 1.0);
}

std::vector<std::size_t> above_floor_window(const std::vector<double>& deltas, const std::vector<double>& values,
                                            const std::vector<double>& floors) {
  if (values.size() != deltas.size() || floors.size() != deltas.size())
    throw DomainError("rate fit: deltas, values and floors differ in length");
  std::vector<std::size_t> order(deltas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deltas[a] > deltas[b]; });
  std::vector<std::size_t> window;
  for (std::size_t i : order) {
    if (!(values[i] > 3.0 * floors[i]) || !(values[i] > 0.0) || !(deltas[i] > 0.0)) break;
    window.push_back(i);
  }
  return window;
}

FitResult fit_log_slope(const std::vector<double>& deltas, const std::vector<double>& values,
                        std::vector<std::size_t> window) {
  FitResult fit;
  std::vector<double> xs, ys;
  for (std::size_t i : window) {
    if (i >= deltas.size() || i >= values.size()) throw DomainError("rate fit: window index out of range");
    if (!(values[i] > 0.0) || !(deltas[i] > 0.0)) throw DomainError("rate fit: log of a non-positive value");
    xs.push_back(std::log(deltas[i]));
    ys.push_back(std::log(values[i]));
  }
  fit.points = xs.size();
  fit.window = std::move(window);
  if (xs.size() < 3) {
    fit.diagnostic = "fewer than 3 points above 3x the discretization floor (" + std::to_string(xs.size()) + ")";
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) {
    fit.diagnostic = "degenerate delta window";
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  fit.ok = true;
  if (std::abs(fit.slope) < 0.05) fit.diagnostic = "flat error curve: the discretization floor may dominate";
  return fit;
}

FitResult fit_rate(const std::vector<double>& deltas, const std::vector<double>& values,
                   const std::vector<double>& floors) {
  return fit_log_slope(deltas, values, above_floor_window(deltas, values, floors));
}

FitResult fit_rate(const std::vector<double>& deltas, const std::vector<double>& values, double floor) {
  return fit_rate(deltas, values, std::vector<double>(deltas.size(), floor));
}

namespace {

MeshInfo mesh_info(const TriMesh& m) {
  MeshInfo info{m.num_nodes(), m.num_elements(), m.hash(), 0.0};
  for (const CurveEdge& e : m.curve_edges()) {
    const CurveRole role = m.curves()[static_cast<std::size_t>(e.curve)].role;
    if (role != CurveRole::kCoreInterface && role != CurveRole::kAnnulusInterface) continue;
    info.h_interface = std::max(
        info.h_interface, dist(m.nodes()[static_cast<std::size_t>(e.a)], m.nodes()[static_cast<std::size_t>(e.b)]));
  }
  return info;
}

struct LevelResult {
  std::vector<DeltaRecord> records;
  std::optional<std::size_t> failed;
  std::string failure;
  double reference_l2 = 0.0;
};

struct Maps {
  Diffeomorphism F;
  Diffeomorphism G;
};

Maps scenario_maps(const ScenarioConfig& sc, const GeometryConfig& cfg) {
  if (sc.kind == ScenarioKind::kSlabDc) {
    SlabMaps m = experimental_slab_maps(cfg);
    return {m.F, m.G};
  }
  return {kelvin_map({0.0, 0.0}, cfg.r2), kelvin_map({0.0, 0.0}, cfg.r3())};
}

LevelResult sweep_on(const ScenarioConfig& sc, const std::shared_ptr<const TriMesh>& mesh) {
  LevelResult out;
  const GeometryConfig& cfg = mesh->config();
  const Region obs = sc.observation_region();
  const DiscreteField ref = reference_solution(sc, primary_reference(sc.kind), mesh);
  const DiscreteField alt = reference_solution(sc, alternative_reference(sc.kind), mesh);
  out.reference_l2 = norm(ref, obs, NormKind::kL2);
  const double scale = out.reference_l2 > 0.0 ? out.reference_l2 : 1.0;

  const MediumSpec base = build_medium(sc.kind, cfg, sc.object, 0.0, sc.k);
  const SystemFamily family(mesh, base, sc.source, dtn_operator(sc.k, cfg.R_out, sc.dtn_modes));
  const Maps maps = scenario_maps(sc, cfg);

  const std::size_t n = sc.deltas.size();
  std::vector<DeltaRecord> records(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    SparseSolver solver;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const double delta = sc.deltas[i];
        SolveStats stats;
        const DiscreteField u = solver.solve(family.at(delta), &stats);
        DeltaRecord r;
        r.delta = delta;
        const DiscreteField diff = u - ref;
        r.error_h1 = norm(diff, obs, NormKind::kH1);
        r.error_l2 = norm(diff, obs, NormKind::kL2);
        r.relative_l2 = r.error_l2 / scale;
        r.alternative_l2 = norm(u - alt, obs, NormKind::kL2) / scale;
        r.power = power(u, delta);
        r.mismatch = reflection_diagnostics(u, maps.F, maps.G, cfg);
        r.residual = stats.residual;
        records[i] = r;
      } catch (const NumericalError& e) {
        errors[i] = e.what();
      }
    }
  };
  const int threads = std::min<int>(worker_threads(), static_cast<int>(n));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      out.failed = i;
      out.failure = "delta = " + std::to_string(sc.deltas[i]) + ": " + errors[i];
      records.resize(i);
      break;
    }
  }
  out.records = std::move(records);
  return out;
}

}  // namespace

ConvergenceReport run_sweep(const ScenarioConfig& sc) {
  sc.validate();
  ConvergenceReport rep;
  rep.kind = sc.kind;
  std::shared_ptr<const TriMesh> coarse = sc.build_production_mesh();
  std::shared_ptr<const TriMesh> fine = coarse;
  for (int l = 0; l < sc.mesh.refine_levels; ++l) fine = std::make_shared<const TriMesh>(refine_uniform(*fine));

  LevelResult fine_result = sweep_on(sc, fine);
  rep.mesh = mesh_info(*fine);
  rep.records = std::move(fine_result.records);
  rep.reference_l2 = fine_result.reference_l2;
  if (fine_result.failed) {
    rep.failed_index = fine_result.failed;
    rep.failure = fine_result.failure;
  }

  if (fine != coarse) {
    LevelResult coarse_result = sweep_on(sc, coarse);
    rep.coarse_mesh = mesh_info(*coarse);
    rep.coarse_records = std::move(coarse_result.records);
    if (coarse_result.failed && !rep.failed_index) {
      rep.failed_index = coarse_result.failed;
      rep.failure = "production mesh, " + coarse_result.failure;
    }
  }

  const std::size_t n = rep.records.size();
  std::vector<double> deltas, e_fine, e_coarse, m_fine;
  for (const DeltaRecord& r : rep.records) {
    deltas.push_back(r.delta);
    e_fine.push_back(r.error_h1);
    m_fine.push_back(r.mismatch.at_r2);
  }
  rep.floor_h1.assign(n, 0.0);
  rep.floor_mismatch.assign(n, 0.0);
  const bool two_meshes = rep.coarse_records.size() >= n && fine != coarse;
  for (std::size_t i = 0; two_meshes && i < n; ++i) {
    const DeltaRecord& c = rep.coarse_records[i];
    e_coarse.push_back(c.error_h1);
    rep.floor_h1[i] = richardson_floor(e_fine[i], c.error_h1);
    rep.floor_mismatch[i] = richardson_floor(m_fine[i], c.mismatch.at_r2);
  }
  rep.fit = fit_rate(deltas, e_fine, rep.floor_h1);
  rep.mismatch_fit = fit_rate(deltas, m_fine, rep.floor_mismatch);
  if (two_meshes && rep.fit.ok) rep.coarse_fit = fit_log_slope(deltas, e_coarse, rep.fit.window);
  return rep;
}

}  // namespace alr
