#include "morph/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "morph/errors.hpp"
#include "morph/power_diagram.hpp"

namespace morph {

using nlohmann::json;

double ProblemSpec::v_min() const {
  return mesh.v_min.value_or(0.25 * area() / mesh.cells);
}

double ProblemSpec::v_max() const {
  return mesh.v_max.value_or(4.0 * area() / mesh.cells);
}

// ---------------------------------------------------------------------------
// Materials

namespace {

struct DitherEntry {
  const char *name;
  double e_room;  // 23 C
  double e_hot;   // 70 C
};

constexpr DitherEntry kDitherTable[] = {
    {"AG50", 120.0, 2.9},
    {"VW", 2100.0, 8.0},
    {"AG", 0.8, 0.2},
};

}  // namespace

MaterialParams builtin_material(std::string_view name) {
  for (const auto &e : kDitherTable) {
    if (name == e.name) {
      MaterialParams m;
      m.e_max = e.e_room;
      m.e_min = e.e_hot;
      return m;
    }
  }
  std::string known;
  for (const auto &e : kDitherTable) {
    known += known.empty() ? "" : ", ";
    known += e.name;
  }
  throw LookupError("unknown material '" + std::string(name) + "'; known: " + known);
}

std::vector<std::string> builtin_material_names() {
  std::vector<std::string> out;
  for (const auto &e : kDitherTable) out.emplace_back(e.name);
  return out;
}

// ---------------------------------------------------------------------------
// JSON reading

namespace {

[[noreturn]] void schema_error(const std::string &path, const std::string &msg) {
  throw ValidationError(ValidationKind::kSchema, path.empty() ? "/" : path, msg);
}

void check_keys(const json &obj, const std::string &path,
                std::initializer_list<const char *> allowed,
                std::initializer_list<const char *> required) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  for (const auto &[key, value] : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char *a) { return key == a; });
    if (!ok) schema_error(path + "/" + key, "unknown key");
  }
  for (const char *r : required) {
    if (!obj.contains(r)) schema_error(path + "/" + r, "missing required key");
  }
}

double read_number(const json &v, const std::string &path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_error(path, "expected a finite number");
  return x;
}

int read_int(const json &v, const std::string &path) {
  if (!v.is_number_integer()) schema_error(path, "expected an integer");
  return v.get<int>();
}

Point2 read_point(const json &v, const std::string &path) {
  if (!v.is_array() || v.size() != 2) schema_error(path, "expected [x, y]");
  return {read_number(v[0], path + "/0"), read_number(v[1], path + "/1")};
}

Segment read_segment(const json &v, const std::string &path) {
  if (!v.is_array() || v.size() != 2) schema_error(path, "expected [[x, y], [x, y]]");
  return {read_point(v[0], path + "/0"), read_point(v[1], path + "/1")};
}

json write_point(Point2 p) { return json::array({p.x, p.y}); }

}  // namespace

ProblemSpec problem_from_json(const json &doc) {
  check_keys(doc, "",
             {"name", "domain", "fixed", "actuation", "states", "material", "mesh",
              "optimizer"},
             {"domain", "fixed", "actuation", "states"});
  ProblemSpec spec;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) schema_error("/name", "expected a string");
    spec.name = doc["name"].get<std::string>();
  }

  const json &dom = doc["domain"];
  if (!dom.is_array()) schema_error("/domain", "expected a list of [x, y]");
  for (std::size_t i = 0; i < dom.size(); ++i) {
    spec.domain.vertices.push_back(read_point(dom[i], "/domain/" + std::to_string(i)));
  }

  const json &fixed = doc["fixed"];
  if (!fixed.is_array()) schema_error("/fixed", "expected a list of segments");
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    spec.boundary.fixed.push_back(read_segment(fixed[i], "/fixed/" + std::to_string(i)));
  }

  const json &act = doc["actuation"];
  check_keys(act, "/actuation", {"segment", "u_p"}, {"segment", "u_p"});
  spec.boundary.actuated.push_back(read_segment(act["segment"], "/actuation/segment"));
  spec.boundary.u_actuation = read_point(act["u_p"], "/actuation/u_p");

  const json &states = doc["states"];
  if (!states.is_array()) schema_error("/states", "expected a list of states");
  for (std::size_t j = 0; j < states.size(); ++j) {
    const std::string sp = "/states/" + std::to_string(j);
    check_keys(states[j], sp, {"targets"}, {"targets"});
    const json &targets = states[j]["targets"];
    if (!targets.is_array()) schema_error(sp + "/targets", "expected a list");
    TargetState st;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const std::string tp = sp + "/targets/" + std::to_string(t);
      check_keys(targets[t], tp, {"name", "point", "u_T"}, {"point", "u_T"});
      TargetPoint target;
      if (targets[t].contains("name")) {
        if (!targets[t]["name"].is_string()) schema_error(tp + "/name", "expected a string");
        target.name = targets[t]["name"].get<std::string>();
      }
      target.point = read_point(targets[t]["point"], tp + "/point");
      target.u_target = read_point(targets[t]["u_T"], tp + "/u_T");
      st.targets.push_back(std::move(target));
    }
    spec.boundary.states.push_back(std::move(st));
  }

  if (doc.contains("material")) {
    const json &mat = doc["material"];
    if (mat.is_string()) {
      spec.material_name = mat.get<std::string>();
      try {
        spec.material = builtin_material(spec.material_name);
      } catch (const LookupError &e) {
        schema_error("/material", e.what());
      }
    } else {
      check_keys(mat, "/material", {"E_max", "E_min", "nu"}, {"E_max", "E_min"});
      spec.material.e_max = read_number(mat["E_max"], "/material/E_max");
      spec.material.e_min = read_number(mat["E_min"], "/material/E_min");
      if (mat.contains("nu")) spec.material.nu = read_number(mat["nu"], "/material/nu");
    }
  } else {
    spec.material_name = "AG50";
    spec.material = builtin_material("AG50");
  }

  if (doc.contains("mesh")) {
    const json &mesh = doc["mesh"];
    check_keys(mesh, "/mesh", {"n", "V_min", "V_max"}, {});
    if (mesh.contains("n")) spec.mesh.cells = read_int(mesh["n"], "/mesh/n");
    if (mesh.contains("V_min")) spec.mesh.v_min = read_number(mesh["V_min"], "/mesh/V_min");
    if (mesh.contains("V_max")) spec.mesh.v_max = read_number(mesh["V_max"], "/mesh/V_max");
  }

  if (doc.contains("optimizer")) {
    const json &o = doc["optimizer"];
    check_keys(o, "/optimizer",
               {"alpha", "p", "seed", "max_iter_phase1", "max_iter_phase2", "beta_rmax"},
               {});
    if (o.contains("alpha")) spec.optimizer.alpha = read_number(o["alpha"], "/optimizer/alpha");
    if (o.contains("p")) spec.material.penalty = read_number(o["p"], "/optimizer/p");
    if (o.contains("seed")) {
      if (!o["seed"].is_number_unsigned()) {
        schema_error("/optimizer/seed", "expected a non-negative integer");
      }
      spec.optimizer.seed = o["seed"].get<std::uint64_t>();
    }
    if (o.contains("max_iter_phase1")) {
      spec.optimizer.max_iter_phase1 = read_int(o["max_iter_phase1"], "/optimizer/max_iter_phase1");
    }
    if (o.contains("max_iter_phase2")) {
      spec.optimizer.max_iter_phase2 = read_int(o["max_iter_phase2"], "/optimizer/max_iter_phase2");
    }
    if (o.contains("beta_rmax")) {
      spec.optimizer.beta_rmax = read_number(o["beta_rmax"], "/optimizer/beta_rmax");
    }
  }
  return normalize_problem(std::move(spec));
}

json problem_to_json(const ProblemSpec &spec) {
  json doc;
  if (!spec.name.empty()) doc["name"] = spec.name;
  json dom = json::array();
  for (Point2 p : spec.domain.vertices) dom.push_back(write_point(p));
  doc["domain"] = dom;
  json fixed = json::array();
  for (const Segment &s : spec.boundary.fixed) {
    fixed.push_back(json::array({write_point(s.a), write_point(s.b)}));
  }
  doc["fixed"] = fixed;
  const Segment &act = spec.boundary.actuated.front();
  doc["actuation"] = {{"segment", json::array({write_point(act.a), write_point(act.b)})},
                      {"u_p", write_point(spec.boundary.u_actuation)}};
  json states = json::array();
  for (const TargetState &st : spec.boundary.states) {
    json targets = json::array();
    for (const TargetPoint &t : st.targets) {
      json jt = {{"point", write_point(t.point)}, {"u_T", write_point(t.u_target)}};
      if (!t.name.empty()) jt["name"] = t.name;
      targets.push_back(jt);
    }
    states.push_back({{"targets", targets}});
  }
  doc["states"] = states;
  if (!spec.material_name.empty()) {
    doc["material"] = spec.material_name;
  } else {
    doc["material"] = {{"E_max", spec.material.e_max},
                       {"E_min", spec.material.e_min},
                       {"nu", spec.material.nu}};
  }
  json mesh = {{"n", spec.mesh.cells}};
  if (spec.mesh.v_min) mesh["V_min"] = *spec.mesh.v_min;
  if (spec.mesh.v_max) mesh["V_max"] = *spec.mesh.v_max;
  doc["mesh"] = mesh;
  doc["optimizer"] = {{"alpha", spec.optimizer.alpha},
                      {"p", spec.material.penalty},
                      {"seed", spec.optimizer.seed},
                      {"max_iter_phase1", spec.optimizer.max_iter_phase1},
                      {"max_iter_phase2", spec.optimizer.max_iter_phase2},
                      {"beta_rmax", spec.optimizer.beta_rmax}};
  return doc;
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

struct BoundaryHit {
  double dist;
  std::size_t edge;
  Point2 point;
};

BoundaryHit nearest_on_outline(const Polygon &domain, Point2 p) {
  BoundaryHit best{std::numeric_limits<double>::infinity(), 0, p};
  const std::size_t m = domain.size();
  for (std::size_t e = 0; e < m; ++e) {
    const Point2 a = domain.vertices[e];
    const Point2 b = domain.vertices[(e + 1) % m];
    const Point2 q = closest_point_on_segment(p, a, b);
    const double d = distance(p, q);
    if (d < best.dist) best = {d, e, q};
  }
  return best;
}

// Snap onto the outline, preferring an existing vertex within `vertex_tol`.
Point2 snap_to_outline(const Polygon &domain, Point2 p, double vertex_tol) {
  for (const Point2 &v : domain.vertices) {
    if (distance(v, p) <= vertex_tol) return v;
  }
  return nearest_on_outline(domain, p).point;
}

void insert_outline_vertex(Polygon &domain, Point2 p, double vertex_tol) {
  for (const Point2 &v : domain.vertices) {
    if (distance(v, p) <= vertex_tol) return;
  }
  const BoundaryHit hit = nearest_on_outline(domain, p);
  domain.vertices.insert(domain.vertices.begin() + static_cast<long>(hit.edge) + 1, p);
}

void check_on_outline(const Polygon &domain, const Segment &s, double tol,
                      const std::string &path) {
  for (int k = 0; k <= 8; ++k) {
    const double t = k / 8.0;
    const Point2 q = s.a + t * (s.b - s.a);
    if (nearest_on_outline(domain, q).dist > tol) {
      throw ValidationError(ValidationKind::kBoundaryOffDomain, path,
                            "segment does not lie on the domain outline");
    }
  }
}

double segment_distance(const Segment &s, const Segment &r) {
  return std::min({distance_to_segment(s.a, r.a, r.b), distance_to_segment(s.b, r.a, r.b),
                   distance_to_segment(r.a, s.a, s.b), distance_to_segment(r.b, s.a, s.b)});
}

}  // namespace

ProblemSpec normalize_problem(ProblemSpec spec) {
  auto &dom = spec.domain.vertices;
  if (dom.size() < 3) {
    throw ValidationError(ValidationKind::kInvalidGeometry, "/domain",
                          "domain polygon needs at least 3 vertices");
  }
  if (!is_simple(dom)) {
    throw ValidationError(ValidationKind::kInvalidGeometry, "/domain",
                          "domain polygon is self-intersecting");
  }
  if (signed_area(dom) < 0.0) std::reverse(dom.begin(), dom.end());
  if (!(signed_area(dom) > 0.0)) {
    throw ValidationError(ValidationKind::kInvalidGeometry, "/domain",
                          "domain polygon has zero area");
  }

  const double L = domain_length(spec.domain);
  const double snap_tol = 1e-3 * L;
  const double vertex_tol = 1e-9 * L;
  auto &bc = spec.boundary;

  if (bc.fixed.empty()) {
    throw ValidationError(ValidationKind::kInvalidValue, "/fixed",
                          "at least one fixed segment is required");
  }
  if (bc.actuated.empty()) {
    throw ValidationError(ValidationKind::kInvalidValue, "/actuation",
                          "an actuation segment is required");
  }
  if (bc.states.empty()) {
    throw ValidationError(ValidationKind::kNoStates, "/states",
                          "at least one target state is required");
  }
  if (!(spec.u_in() > 0.0)) {
    throw ValidationError(ValidationKind::kInvalidValue, "/actuation/u_p",
                          "actuation displacement must be nonzero");
  }

  std::vector<Point2> outline_points;
  auto snap_segment = [&](Segment &s, const std::string &path) {
    for (Point2 *p : {&s.a, &s.b}) {
      if (nearest_on_outline(spec.domain, *p).dist > snap_tol) {
        throw ValidationError(ValidationKind::kBoundaryOffDomain, path,
                              "segment endpoint is off the domain outline");
      }
      *p = snap_to_outline(spec.domain, *p, snap_tol * 1e-3);
      outline_points.push_back(*p);
    }
    if (distance(s.a, s.b) <= vertex_tol) {
      throw ValidationError(ValidationKind::kInvalidGeometry, path,
                            "segment has zero length");
    }
    check_on_outline(spec.domain, s, snap_tol, path);
  };
  for (std::size_t i = 0; i < bc.fixed.size(); ++i) {
    snap_segment(bc.fixed[i], "/fixed/" + std::to_string(i));
  }
  snap_segment(bc.actuated.front(), "/actuation/segment");
  for (std::size_t i = 0; i < bc.fixed.size(); ++i) {
    for (const Segment &a : bc.actuated) {
      if (segment_distance(bc.fixed[i], a) <= snap_tol) {
        throw ValidationError(ValidationKind::kInvalidGeometry,
                              "/fixed/" + std::to_string(i),
                              "fixed segment touches the actuation segment");
      }
    }
  }

  for (std::size_t j = 0; j < bc.states.size(); ++j) {
    auto &targets = bc.states[j].targets;
    const std::string sp = "/states/" + std::to_string(j) + "/targets";
    if (targets.empty()) {
      throw ValidationError(ValidationKind::kNoStates, sp, "state has no target points");
    }
    for (std::size_t t = 0; t < targets.size(); ++t) {
      Point2 &p = targets[t].point;
      const double d = nearest_on_outline(spec.domain, p).dist;
      if (d <= snap_tol) {
        p = snap_to_outline(spec.domain, p, snap_tol * 1e-3);
        outline_points.push_back(p);
      } else if (!point_in_polygon(dom, p)) {
        throw ValidationError(ValidationKind::kBoundaryOffDomain,
                              sp + "/" + std::to_string(t) + "/point",
                              "target point lies outside the domain");
      }
    }
  }
  for (Point2 p : outline_points) insert_outline_vertex(spec.domain, p, vertex_tol);

  try {
    validate(spec.material);
  } catch (const InvalidInput &e) {
    throw ValidationError(ValidationKind::kInvalidValue, "/material", e.what());
  }
  if (spec.mesh.cells < 1 || static_cast<std::size_t>(spec.mesh.cells) < spec.num_states()) {
    throw ValidationError(ValidationKind::kInvalidValue, "/mesh/n",
                          "cell count must be at least the number of states");
  }
  const double mean = spec.area() / spec.mesh.cells;
  if (!(spec.v_min() > 0.0 && spec.v_min() <= mean * (1 + 1e-12))) {
    throw ValidationError(ValidationKind::kInvalidValue, "/mesh/V_min",
                          "V_min must lie in (0, area / n]");
  }
  if (!(spec.v_max() >= mean * (1 - 1e-12))) {
    throw ValidationError(ValidationKind::kInvalidValue, "/mesh/V_max",
                          "V_max must be at least area / n");
  }
  if (!(spec.optimizer.alpha >= 0.0)) {
    throw ValidationError(ValidationKind::kInvalidValue, "/optimizer/alpha",
                          "alpha must be non-negative");
  }
  if (spec.optimizer.max_iter_phase1 < 0 || spec.optimizer.max_iter_phase2 < 0) {
    throw ValidationError(ValidationKind::kInvalidValue, "/optimizer",
                          "iteration caps must be non-negative");
  }
  if (!(spec.optimizer.beta_rmax >= 0.0)) {
    throw ValidationError(ValidationKind::kInvalidValue, "/optimizer/beta_rmax",
                          "beta_rmax must be non-negative");
  }
  return spec;
}

ProblemSpec load_problem(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ValidationError(ValidationKind::kSchema, "/", e.what());
  }
  return problem_from_json(doc);
}

ProblemSpec load_problem_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open problem file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_problem(ss.str());
}

}  // namespace morph
