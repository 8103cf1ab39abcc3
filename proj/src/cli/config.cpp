#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "alr/cli.hpp"

namespace alr::cli {

namespace {

const std::map<std::string, std::set<std::string>, std::less<>> kSchema = {
    {"geometry", {"r0", "r1", "r2", "R0", "R_out", "x1", "x2", "x3"}},
    {"medium",
     {"scenario", "k", "object_contrast", "object_tensor", "object_sigma", "object_ellipticity", "lens_object_center",
      "lens_object_radius", "cm_object_center", "cm_object_radius", "slab_half_width", "accept_experimental_slab"}},
    {"source",
     {"type", "center_plus", "center_minus", "bump_radius", "amplitude", "allow_shell", "ring_radius", "ring_modes",
      "ring_amplitudes", "ring_phases"}},
    {"sweep", {"deltas", "delta_from_exp", "delta_to_exp", "per_decade", "observation_radius", "dtn_modes"}},
    {"mesh", {"h_target", "grading", "layer_size", "refine_levels"}},
    {"output", {"directory", "prefix", "vtk", "vtk_deltas"}},
};

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail_at(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

class Document {
 public:
  explicit Document(std::string_view text) {
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find('\n', pos), text.size());
      std::string_view raw = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      const std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail_at(line_no, "unterminated section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (!kSchema.contains(section)) fail_at(line_no, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail_at(line_no, "expected 'key = value'");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string value = trim(std::string_view(line).substr(eq + 1));
      if (section.empty()) fail_at(line_no, "key '" + key + "' outside a section");
      if (key.empty()) fail_at(line_no, "empty key");
      if (!kSchema.find(section)->second.contains(key))
        fail_at(line_no, "unknown key '" + key + "' in [" + section + "]");
      if (value.empty()) fail_at(line_no, "empty value for '" + key + "'");
      auto& slot = entries_[section];
      if (slot.contains(key)) fail_at(line_no, "duplicate key '" + key + "' in [" + section + "]");
      slot[key] = {value, line_no};
    }
  }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto s = entries_.find(section);
    if (s == entries_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  bool has_section(const std::string& section) const { return entries_.contains(section); }

 private:
  std::map<std::string, std::map<std::string, Entry>> entries_;
};

double to_number(const Entry& e, std::string_view text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    fail_at(e.line, "'" + key + "' expects a number, got '" + t + "'");
  return v;
}

std::vector<double> to_list(const Entry& e, const std::string& key) {
  std::vector<double> out;
  std::string_view rest = e.value;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(to_number(e, rest.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  std::optional<double> number(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    return to_number(*e, e->value, key);
  }
  std::optional<int> integer(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    const double v = to_number(*e, e->value, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail_at(e->line, "'" + key + "' expects an integer");
    return static_cast<int>(v);
  }
  std::optional<std::vector<double>> list(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    return to_list(*e, key);
  }
  std::optional<Point2> point(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    const auto v = to_list(*e, key);
    if (v.size() != 2) fail_at(e->line, "'" + key + "' expects two numbers 'x, y'");
    return Point2{v[0], v[1]};
  }
  std::optional<bool> boolean(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    fail_at(e->line, "'" + key + "' expects true or false");
  }
  std::optional<std::string> text(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    return e->value;
  }
  int line(const std::string& section, const std::string& key) const {
    const Entry* e = doc_.find(section, key);
    return e ? e->line : 0;
  }

 private:
  const Document& doc_;
};

Point2 scaled_direction(Point2 p, double r) {
  const double n = norm(p);
  return n > 0.0 ? (r / n) * p : Point2{r, 0.0};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(Point2 p) { return fmt(p.x) + "," + fmt(p.y); }

}  // namespace

RunConfig parse_config(std::string_view text, std::optional<ScenarioKind> scenario) {
  const Document doc(text);
  const Reader in(doc);

  ScenarioKind kind = ScenarioKind::kQuasistaticCloak;
  if (const auto name = in.text("medium", "scenario")) {
    const auto k = scenario_from_string(*name);
    if (!k) fail_at(in.line("medium", "scenario"), "unknown scenario '" + *name + "'");
    kind = *k;
  }
  if (scenario) kind = *scenario;

  for (const char* key : {"r1", "r2"})
    if (!in.number("geometry", key)) throw ConfigError(std::string("missing required key ") + key + " in [geometry]");

  const ScenarioConfig def = ScenarioConfig::defaults(kind);
  RunConfig rc;
  ScenarioConfig& sc = rc.scenario;
  sc = def;
  GeometryConfig& g = sc.geometry;

  // Geometry; unspecified lengths follow the defaults scaled by r1.
  g.r1 = *in.number("geometry", "r1");
  g.r2 = *in.number("geometry", "r2");
  const double scale = g.r1 / def.geometry.r1;
  g.r0 = in.number("geometry", "r0").value_or(def.geometry.r0 * scale);
  g.R0 = in.number("geometry", "R0").value_or(def.geometry.R0 * scale);
  g.R_out = in.number("geometry", "R_out").value_or(def.geometry.R_out * scale);
  g.x1 = in.point("geometry", "x1").value_or(scaled_direction(def.geometry.x1, g.r1));
  g.x2 = in.point("geometry", "x2").value_or(scaled_direction(def.geometry.x2, g.r2));
  g.x3 = in.point("geometry", "x3").value_or(scaled_direction(def.geometry.x3, g.r3()));
  g.validate();

  // Medium and object.
  sc.k = in.number("medium", "k").value_or(def.k * def.geometry.r2 / g.r2);
  if (const auto c = in.number("medium", "object_contrast")) sc.object = ObjectSpec::isotropic(*c);
  if (const auto t = in.list("medium", "object_tensor")) {
    if (t->size() != 3) fail_at(in.line("medium", "object_tensor"), "'object_tensor' expects 'a11, a12, a22'");
    sc.object.a << (*t)[0], (*t)[1], (*t)[1], (*t)[2];
  }
  sc.object.sigma = in.number("medium", "object_sigma").value_or(sc.object.sigma);
  sc.object.ellipticity = in.number("medium", "object_ellipticity").value_or(sc.object.ellipticity);
  sc.layout.lens_object_center = in.point("medium", "lens_object_center").value_or(def.layout.lens_object_center);
  sc.layout.lens_object_radius = in.number("medium", "lens_object_radius").value_or(def.layout.lens_object_radius);
  sc.layout.cm_object_center = in.point("medium", "cm_object_center").value_or(def.layout.cm_object_center);
  sc.layout.cm_object_radius = in.number("medium", "cm_object_radius").value_or(def.layout.cm_object_radius);
  sc.layout.slab_half_width = in.number("medium", "slab_half_width").value_or(def.layout.slab_half_width);
  sc.accept_experimental_slab = in.boolean("medium", "accept_experimental_slab").value_or(false);

  // Source.
  const std::string type = in.text("source", "type").value_or(
      def.source.kind == SourceSpec::Kind::kRing ? "ring" : "bump-pair");
  if (type == "bump-pair") {
    const std::array<Point2, 2> dc = def.source.kind == SourceSpec::Kind::kBumpPair
                                         ? def.source.bump_centers
                                         : std::array<Point2, 2>{Point2{5.0, 0.0}, Point2{-5.0, 0.0}};
    sc.source = SourceSpec::bump_pair(in.point("source", "center_plus").value_or(scale * dc[0]),
                                      in.point("source", "center_minus").value_or(scale * dc[1]),
                                      in.number("source", "bump_radius").value_or(def.source.bump_radius * scale),
                                      in.number("source", "amplitude").value_or(1.0));
  } else if (type == "ring") {
    const double radius = in.number("source", "ring_radius").value_or(0.5 * (g.r3() + g.R0));
    const std::vector<double> ns = in.list("source", "ring_modes").value_or(std::vector<double>{2.0});
    const std::vector<double> amps = in.list("source", "ring_amplitudes").value_or(std::vector<double>(ns.size(), 1.0));
    const std::vector<double> phases = in.list("source", "ring_phases").value_or(std::vector<double>(ns.size(), 0.0));
    if (amps.size() != ns.size() || phases.size() != ns.size())
      throw ConfigError("ring_modes, ring_amplitudes and ring_phases must have equal length");
    std::vector<RingMode> modes;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (ns[i] != std::floor(ns[i]) || ns[i] < 0.0)
        fail_at(in.line("source", "ring_modes"), "'ring_modes' expects non-negative integers");
      modes.push_back({static_cast<int>(ns[i]), amps[i], phases[i]});
    }
    sc.source = SourceSpec::ring(radius, std::move(modes));
  } else {
    fail_at(in.line("source", "type"), "source type must be 'bump-pair' or 'ring'");
  }
  sc.source.allow_shell = in.boolean("source", "allow_shell").value_or(false);

  // Sweep.
  if (const auto d = in.list("sweep", "deltas")) {
    sc.deltas = *d;
  } else if (in.number("sweep", "delta_from_exp") || in.number("sweep", "delta_to_exp") ||
             in.number("sweep", "per_decade")) {
    sc.deltas = geometric_deltas(in.number("sweep", "delta_from_exp").value_or(1.0),
                                 in.number("sweep", "delta_to_exp").value_or(4.0),
                                 in.integer("sweep", "per_decade").value_or(2));
  }
  sc.observation_radius =
      in.number("sweep", "observation_radius").value_or(ScenarioConfig::default_observation_radius(kind, g));
  sc.dtn_modes = in.integer("sweep", "dtn_modes").value_or(def.dtn_modes);

  // Mesh: the interface sizes follow the delta-floor rule unless given.
  const double h_target = in.number("mesh", "h_target").value_or(def.mesh.h_target * scale);
  MeshSchedule ms = default_schedule(g, h_target, sc.delta_min());
  ms.grading = in.number("mesh", "grading").value_or(ms.grading);
  ms.layer_size = in.number("mesh", "layer_size").value_or(ms.layer_size);
  ms.refine_levels = in.integer("mesh", "refine_levels").value_or(ms.refine_levels);
  sc.mesh = ms;

  // Output.
  rc.output.directory = in.text("output", "directory").value_or(".");
  rc.output.prefix = in.text("output", "prefix").value_or(std::string(to_string(kind)));
  rc.output.vtk = in.boolean("output", "vtk").value_or(false);
  rc.output.vtk_deltas = in.list("output", "vtk_deltas").value_or(std::vector<double>{});

  sc.validate();
  return rc;
}

RunConfig load_config(const std::string& path, std::optional<ScenarioKind> scenario) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), scenario);
}

std::string apply_overrides(std::string_view text, const std::vector<std::string>& overrides) {
  std::string doc(text);
  for (const std::string& o : overrides) {
    const auto dot = o.find('.');
    const auto eq = o.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq)
      throw ConfigError("override '" + o + "' must look like section.key=value");
    const std::string section = o.substr(0, dot);
    const std::string key = o.substr(dot + 1, eq - dot - 1);
    const std::string value = o.substr(eq + 1);
    const auto s = kSchema.find(section);
    if (s == kSchema.end()) throw ConfigError("override '" + o + "': unknown section [" + section + "]");
    if (!s->second.contains(key)) throw ConfigError("override '" + o + "': unknown key '" + key + "'");

    // Drop an existing assignment of the key inside its section, then append
    // the new one in a fresh section block.
    std::istringstream lines(doc);
    std::ostringstream kept;
    std::string line, current;
    while (std::getline(lines, line)) {
      std::string body = line.substr(0, line.find('#'));
      body = trim(body);
      if (!body.empty() && body.front() == '[' && body.back() == ']') current = trim(body.substr(1, body.size() - 2));
      const auto e = body.find('=');
      if (current == section && e != std::string::npos && trim(body.substr(0, e)) == key) {
        kept << '\n';  // keeps line numbers stable
        continue;
      }
      kept << line << '\n';
    }
    doc = kept.str() + "[" + section + "]\n" + key + " = " + value + "\n";
  }
  return doc;
}

std::string canonical_text(const ScenarioConfig& sc) {
  std::ostringstream os;
  const GeometryConfig& g = sc.geometry;
  os << "scenario=" << to_string(sc.kind) << '\n';
  os << "geometry=" << fmt(g.r0) << ';' << fmt(g.r1) << ';' << fmt(g.r2) << ';' << fmt(g.R0) << ';' << fmt(g.R_out)
     << ';' << fmt(g.x1) << ';' << fmt(g.x2) << ';' << fmt(g.x3) << '\n';
  os << "layout=" << fmt(sc.layout.lens_object_center) << ';' << fmt(sc.layout.lens_object_radius) << ';'
     << fmt(sc.layout.cm_object_center) << ';' << fmt(sc.layout.cm_object_radius) << ';'
     << fmt(sc.layout.slab_half_width) << '\n';
  os << "object=" << fmt(sc.object.a(0, 0)) << ';' << fmt(sc.object.a(0, 1)) << ';' << fmt(sc.object.a(1, 1)) << ';'
     << fmt(sc.object.sigma) << ';' << fmt(sc.object.ellipticity) << '\n';
  const SourceSpec& s = sc.source;
  if (s.kind == SourceSpec::Kind::kRing) {
    os << "source=ring;" << fmt(s.ring_radius);
    for (const RingMode& m : s.modes) os << ';' << m.n << ':' << fmt(m.amplitude) << ':' << fmt(m.phase);
  } else {
    os << "source=bump-pair;" << fmt(s.bump_centers[0]) << ';' << fmt(s.bump_centers[1]) << ';'
       << fmt(s.bump_radius) << ';' << fmt(s.amplitude);
  }
  os << ";shell=" << s.allow_shell << '\n';
  os << "k=" << fmt(sc.k) << '\n';
  os << "deltas=";
  for (std::size_t i = 0; i < sc.deltas.size(); ++i) os << (i ? ";" : "") << fmt(sc.deltas[i]);
  os << '\n';
  os << "mesh=" << fmt(sc.mesh.h_target) << ';' << fmt(sc.mesh.grading) << ';' << fmt(sc.mesh.layer_size) << ';'
     << sc.mesh.refine_levels << '\n';
  os << "observation=" << fmt(sc.observation_radius) << "\ndtn=" << sc.dtn_modes
     << "\nslab_accepted=" << sc.accept_experimental_slab << '\n';
  return os.str();
}

std::uint64_t config_hash(const ScenarioConfig& sc) {
  Fnv1a h;
  h.str(canonical_text(sc));
  return h.value();
}

}  // namespace alr::cli
