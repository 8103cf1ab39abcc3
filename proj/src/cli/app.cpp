#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "alr/cli.hpp"
#include "alr/oracle.hpp"

namespace alr::cli {

namespace {

constexpr std::array<std::string_view, 7> kSubcommands = {"mesh",          "solve",    "sweep", "oracle",
                                                          "verify-medium", "diagnose", "suite"};

std::string usage() {
  std::ostringstream os;
  os << "usage: alrcloak <subcommand> [scenario] [--config FILE] [--set section.key=value ...] [options]\n"
     << "subcommands:\n"
     << "  mesh           build the production mesh and write it as VTK\n"
     << "  solve          solve at one loss parameter (--delta)\n"
     << "  sweep          loss-parameter sweep; CSV report\n"
     << "  oracle         mode-matching solution for a ring source (r0 = 0 layouts)\n"
     << "  verify-medium  check the doubly complementary identities of the medium\n"
     << "  diagnose       power, reflection mismatch and three-spheres probe at one delta\n"
     << "  suite          sweep plus verdict; exit 1 on FAIL\n"
     << "scenarios:";
  for (ScenarioKind k : kAllScenarios) os << ' ' << to_string(k);
  os << "\nexit codes: 0 success, 1 verdict FAIL, 2 configuration error, 3 numerical failure\n"
     << "environment: ALRCLOAK_THREADS sets the number of worker threads\n";
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

struct Options {
  std::string scenario;
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<double> delta;
  std::size_t samples = 1000;
  double tolerance = 1e-10;
};

class Run {
 public:
  Run(std::string command, const Options& opt, std::ostream& out) : command_(std::move(command)), out_(out) {
    std::optional<ScenarioKind> kind;
    if (!opt.scenario.empty()) {
      kind = scenario_from_string(opt.scenario);
      if (!kind) throw ConfigError("unknown scenario '" + opt.scenario + "'");
    }
    if (!opt.config.empty()) {
      std::ifstream f(opt.config, std::ios::binary);
      if (!f) throw ConfigError("cannot read config file " + opt.config);
      std::ostringstream text;
      text << f.rdbuf();
      rc_ = parse_config(apply_overrides(text.str(), opt.overrides), kind);
    } else {
      if (!opt.overrides.empty()) throw ConfigError("--set requires --config");
      rc_.scenario = ScenarioConfig::defaults(kind.value_or(ScenarioKind::kQuasistaticCloak));
      rc_.output.prefix = std::string(to_string(rc_.scenario.kind));
      rc_.scenario.validate();
    }
    if (!opt.out_dir.empty()) rc_.output.directory = opt.out_dir;
    manifest_.command = command_;
    manifest_.scenario = std::string(to_string(rc_.scenario.kind));
    manifest_.config_hash = hex64(config_hash(rc_.scenario));
    manifest_.started = utc_now();
  }

  const ScenarioConfig& scenario() const { return rc_.scenario; }
  const OutputSpec& output() const { return rc_.output; }
  std::ostream& out() { return out_; }

  std::string output_path(const std::string& suffix) {
    std::filesystem::create_directories(rc_.output.directory);
    const std::string path = (std::filesystem::path(rc_.output.directory) / (rc_.output.prefix + "_" + suffix)).string();
    manifest_.outputs.push_back(path);
    return path;
  }

  void set_mesh(const TriMesh& mesh) { manifest_.mesh_hash = hex64(mesh.hash()); }

  void finish() {
    manifest_.finished = utc_now();
    std::filesystem::create_directories(rc_.output.directory);
    const std::string path =
        (std::filesystem::path(rc_.output.directory) / (rc_.output.prefix + "_" + command_ + "_manifest.txt")).string();
    manifest_.write(path);
    out_ << "manifest: " << path << '\n';
  }

 private:
  std::string command_;
  std::ostream& out_;
  RunConfig rc_;
  RunManifest manifest_;
};

DiscreteField solve_at(const ScenarioConfig& sc, const std::shared_ptr<const TriMesh>& mesh, double delta) {
  const GeometryConfig& cfg = mesh->config();
  const MediumSpec med = build_medium(sc.kind, cfg, sc.object, delta, sc.k);
  return solve_system(assemble(mesh, med, sc.source, dtn_operator(sc.k, cfg.R_out, sc.dtn_modes)));
}

struct Maps {
  Diffeomorphism F;
  Diffeomorphism G;
  ComplementaryGeometry geometry;
};

Maps complementary_maps(const ScenarioConfig& sc, const GeometryConfig& cfg) {
  if (sc.kind == ScenarioKind::kSlabDc) {
    SlabMaps m = experimental_slab_maps(cfg);
    return {m.F, m.G, slab_complementary_geometry(cfg)};
  }
  return {kelvin_map({0.0, 0.0}, cfg.r2), kelvin_map({0.0, 0.0}, cfg.r3()), ComplementaryGeometry::concentric(cfg)};
}

void write_snapshots(Run& run, const std::vector<double>& requested) {
  const ScenarioConfig& sc = run.scenario();
  const auto mesh = sc.build_production_mesh();
  const std::vector<double> deltas = requested.empty() ? std::vector<double>{sc.delta_min()} : requested;
  for (double d : deltas) {
    char name[64];
    std::snprintf(name, sizeof name, "field_delta_%.3e.vtk", d);
    solve_at(sc, mesh, d).write_vtk(run.output_path(name));
  }
}

int cmd_mesh(Run& run) {
  const auto mesh = run.scenario().build_production_mesh();
  run.set_mesh(*mesh);
  std::vector<double> tags(mesh->num_elements());
  for (std::size_t e = 0; e < tags.size(); ++e) tags[e] = static_cast<double>(mesh->tags()[e]);
  const std::vector<PointData> cells{{"region", tags}};
  write_vtk(*mesh, run.output_path("mesh.vtk"), {}, cells);
  run.out() << "nodes " << mesh->num_nodes() << "\nelements " << mesh->num_elements() << "\nmesh_hash "
            << hex64(mesh->hash()) << '\n';
  return 0;
}

int cmd_solve(Run& run, std::optional<double> delta_opt) {
  const ScenarioConfig& sc = run.scenario();
  const double delta = delta_opt.value_or(sc.delta_min());
  if (!(delta > 0.0)) throw ConfigError("--delta must be > 0");
  const auto mesh = sc.build_production_mesh();
  run.set_mesh(*mesh);
  const DiscreteField u = solve_at(sc, mesh, delta);
  const DiscreteField ref = reference_solution(sc, primary_reference(sc.kind), mesh);
  const Region obs = sc.observation_region();
  const double err_l2 = norm(u - ref, obs, NormKind::kL2);
  u.write_vtk(run.output_path("solve.vtk"));
  run.out() << "delta " << num(delta) << "\nerror_h1 " << num(norm(u - ref, obs, NormKind::kH1)) << "\nrelative_l2 "
            << num(err_l2 / norm(ref, obs, NormKind::kL2)) << "\npower " << num(power(u, delta)) << '\n';
  return 0;
}

int cmd_sweep(Run& run) {
  const ConvergenceReport rep = run_sweep(run.scenario());
  write_report_csv(rep, run.output_path("sweep.csv"));
  run.out() << "rows " << rep.records.size() << "\nmesh_nodes " << rep.mesh.nodes << "\ngamma_fit "
            << (rep.fit.ok ? num(rep.fit.slope) : "refused: " + rep.fit.diagnostic) << '\n';
  if (run.output().vtk) write_snapshots(run, run.output().vtk_deltas);
  if (rep.failed_index) {
    run.out() << "failure " << rep.failure << '\n';
    return 3;
  }
  return 0;
}

int cmd_suite(Run& run) {
  const SuiteResult res = run_scenario_suite(run.scenario());
  write_report_csv(res.report, run.output_path("suite.csv"));
  const std::string summary = summary_text(res);
  {
    std::ofstream f(run.output_path("summary.txt"), std::ios::binary);
    f << summary;
  }
  run.out() << summary;
  if (run.output().vtk) write_snapshots(run, run.output().vtk_deltas);
  if (res.report.failed_index) return 3;
  return res.verdict == Verdict::kFail ? 1 : 0;
}

int cmd_oracle(Run& run, std::optional<double> delta_opt) {
  const ScenarioConfig& sc = run.scenario();
  if (sc.kind != ScenarioKind::kQuasistaticCloak && sc.kind != ScenarioKind::kFreqCloak)
    throw ConfigError("oracle: radial layouts only (quasistatic-cloak or freq-cloak)");
  if (sc.geometry.r0 != 0.0) throw ConfigError("oracle: radial layout requires r0 = 0");
  if (sc.source.kind != SourceSpec::Kind::kRing) throw ConfigError("oracle: source type must be ring");
  const double delta = delta_opt.value_or(sc.delta_min());
  const auto mesh = sc.build_production_mesh();
  run.set_mesh(*mesh);
  const auto layers = cloak_layers(mesh->config(), sc.kind == ScenarioKind::kFreqCloak);
  const OracleSolution oracle(layers, sc.source.modes, sc.k, delta, sc.source.ring_radius);
  oracle.write_csv(run.output_path("oracle_modes.csv"));

  const DiscreteField u = solve_at(sc, mesh, delta);
  auto value = [&](Point2 p) { return oracle.value(p); };
  auto grad = [&](Point2 p) { return oracle.gradient(p); };
  const Region all = Region::tags_only(RegionSet::all());
  const double rel = error_norm(u, value, grad, all, NormKind::kH1) / exact_norm(*mesh, value, grad, all, NormKind::kH1);
  run.out() << "delta " << num(delta) << "\nmodes " << oracle.modes().size() << "\nfem_relative_h1_error " << num(rel)
            << '\n';
  return 0;
}

int cmd_verify(Run& run, std::size_t samples, double tolerance) {
  const ScenarioConfig& sc = run.scenario();
  const GeometryConfig cfg = sc.resolved_geometry();
  const MediumSpec med = build_medium(sc.kind, cfg, sc.object, sc.delta_min(), sc.k);
  const Maps maps = complementary_maps(sc, cfg);
  const VerificationReport rep = verify_doubly_complementary(med, maps.F, maps.G, maps.geometry, samples, tolerance);
  for (const auto& id : rep.identities) {
    run.out() << (id.checked ? (id.pass ? "PASS " : "FAIL ") : "SKIP ") << id.name << " max_residual "
              << num(id.max_residual) << '\n';
  }
  run.out() << "samples " << rep.samples << "\ntolerance " << num(rep.tolerance) << "\nverdict "
            << (rep.pass() ? "PASS" : "FAIL") << '\n';
  return rep.pass() ? 0 : 1;
}

int cmd_diagnose(Run& run, std::optional<double> delta_opt) {
  const ScenarioConfig& sc = run.scenario();
  const double delta = delta_opt.value_or(sc.delta_min());
  const auto mesh = sc.build_production_mesh();
  run.set_mesh(*mesh);
  const GeometryConfig& cfg = mesh->config();
  const DiscreteField u = solve_at(sc, mesh, delta);
  const Maps maps = complementary_maps(sc, cfg);
  const MismatchRecord mm = reflection_diagnostics(u, maps.F, maps.G, cfg);
  run.out() << "delta " << num(delta) << "\npower " << num(power(u, delta)) << "\nmismatch_r2 " << num(mm.at_r2)
            << "\nmismatch_r3 " << num(mm.at_r3) << '\n';

  // Three-spheres probe in the source-free exterior, opposite the source.
  const double gap = 0.5 * (cfg.R0 - cfg.r3());
  const Point2 z{-(cfg.r3() + gap), 0.0};
  const double R3 = 0.9 * gap;
  try {
    const ThreeSphereReport ts = three_sphere_check(u, z, 0.25 * R3, 0.5 * R3, R3);
    run.out() << "three_spheres_alpha " << num(ts.alpha) << "\nthree_spheres_constant " << num(ts.constant) << '\n';
  } catch (const DomainError& e) {
    run.out() << "three_spheres skipped: " << e.what() << '\n';
  }
  u.write_vtk(run.output_path("diagnose.vtk"));
  return 0;
}

}  // namespace

std::string RunManifest::text() const {
  std::ostringstream os;
  os << "command = " << command << "\nscenario = " << scenario << "\nconfig_hash = " << config_hash
     << "\nmesh_hash = " << mesh_hash << "\nversion = " << version << "\nstarted = " << started
     << "\nfinished = " << finished << '\n';
  for (const std::string& o : outputs) os << "output = " << o << '\n';
  return os.str();
}

void RunManifest::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || std::find(kSubcommands.begin(), kSubcommands.end(), args.front()) == kSubcommands.end()) {
    if (!args.empty() && (args.front() == "--help" || args.front() == "-h")) {
      out << usage();
      return 0;
    }
    err << (args.empty() ? "missing subcommand\n" : "unknown subcommand '" + args.front() + "'\n") << usage();
    return 2;
  }
  const std::string command = args.front();

  CLI::App app{"alrcloak " + command, "alrcloak"};
  Options opt;
  app.add_option("scenario", opt.scenario, "scenario name");
  app.add_option("--config", opt.config, "configuration file");
  app.add_option("--set", opt.overrides, "override a config key: section.key=value")->take_all();
  app.add_option("--out", opt.out_dir, "output directory");
  if (command == "solve" || command == "oracle" || command == "diagnose")
    app.add_option("--delta", opt.delta, "loss parameter");
  if (command == "verify-medium") {
    app.add_option("--samples", opt.samples, "sample points");
    app.add_option("--tolerance", opt.tolerance, "identity tolerance");
  }
  try {
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << usage();
    return 2;
  }

  try {
    Run r(command, opt, out);
    int code = 0;
    if (command == "mesh") code = cmd_mesh(r);
    else if (command == "solve") code = cmd_solve(r, opt.delta);
    else if (command == "sweep") code = cmd_sweep(r);
    else if (command == "oracle") code = cmd_oracle(r, opt.delta);
    else if (command == "verify-medium") code = cmd_verify(r, opt.samples, opt.tolerance);
    else if (command == "diagnose") code = cmd_diagnose(r, opt.delta);
    else code = cmd_suite(r);
    r.finish();
    return code;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace alr::cli
