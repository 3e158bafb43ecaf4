#include <doctest.h>

#include "morph/errors.hpp"
#include "morph/problem.hpp"

using namespace morph;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "domain": [[0, 0], [10, 0], [10, 10], [0, 10]],
    "fixed": [[[0, 0], [0, 10]]],
    "actuation": {"segment": [[4, 10], [6, 10]], "u_p": [0, -1]},
    "states": [{"targets": [{"point": [10, 5], "u_T": [1, 0]}]}]
  })");
}

ValidationError expect_invalid(const json &doc) {
  try {
    load_problem(doc.dump());
  } catch (const ValidationError &e) {
    return e;
  }
  FAIL("document was accepted");
  throw;
}

}  // namespace

TEST_CASE("minimal document") {
  const ProblemSpec p = load_problem(minimal().dump());
  CHECK(p.num_states() == 1);
  CHECK(p.area() == doctest::Approx(100.0));
  CHECK(p.u_in() == doctest::Approx(1.0));
  CHECK(p.material == builtin_material("AG50"));
  CHECK(p.v_min() == doctest::Approx(0.25 * 100 / 40));
  // Boundary points become outline vertices.
  int hits = 0;
  for (Point2 v : p.domain.vertices) hits += (v == Point2{4, 10}) + (v == Point2{6, 10}) + (v == Point2{10, 5});
  CHECK(hits == 3);
}

TEST_CASE("clockwise domains are reoriented") {
  json doc = minimal();
  doc["domain"] = json::parse("[[0, 10], [10, 10], [10, 0], [0, 0]]");
  CHECK(load_problem(doc.dump()).area() == doctest::Approx(100.0));
}

TEST_CASE("validation errors carry a kind and a path") {
  json doc = minimal();
  doc["domain"] = json::parse("[[0, 0], [10, 10], [10, 0], [0, 10]]");
  ValidationError e = expect_invalid(doc);
  CHECK(e.kind() == ValidationKind::kInvalidGeometry);
  CHECK(e.path() == "/domain");

  doc = minimal();
  doc["states"][0]["targets"][0]["point"] = json::array({100, 5});
  e = expect_invalid(doc);
  CHECK(e.kind() == ValidationKind::kBoundaryOffDomain);
  CHECK(e.path() == "/states/0/targets/0/point");

  doc = minimal();
  doc["states"] = json::array();
  e = expect_invalid(doc);
  CHECK(e.kind() == ValidationKind::kNoStates);

  doc = minimal();
  doc["colour"] = "red";
  e = expect_invalid(doc);
  CHECK(e.kind() == ValidationKind::kSchema);
  CHECK(e.path() == "/colour");

  doc = minimal();
  doc["actuation"]["u_p"] = "down";
  e = expect_invalid(doc);
  CHECK(e.kind() == ValidationKind::kSchema);
  CHECK(e.path() == "/actuation/u_p");

  doc = minimal();
  doc["actuation"]["u_p"] = json::array({0, 0});
  CHECK(expect_invalid(doc).kind() == ValidationKind::kInvalidValue);

  doc = minimal();
  doc["fixed"][0] = json::parse("[[5, 3], [5, 7]]");
  CHECK(expect_invalid(doc).kind() == ValidationKind::kBoundaryOffDomain);

  doc = minimal();
  doc["material"] = "XYZ";
  e = expect_invalid(doc);
  CHECK(e.path() == "/material");

  doc = minimal();
  doc["mesh"] = {{"n", 0}};
  CHECK(expect_invalid(doc).path() == "/mesh/n");

  CHECK_THROWS_AS(load_problem("{not json"), ValidationError);
}

TEST_CASE("round trip") {
  json doc = minimal();
  doc["material"] = {{"E_max", 50.0}, {"E_min", 5.0}, {"nu", 0.3}};
  doc["mesh"] = {{"n", 12}, {"V_min", 1.0}};
  doc["optimizer"] = {{"alpha", 0.5}, {"seed", 42}, {"beta_rmax", 2.0}};
  const ProblemSpec p = load_problem(doc.dump());
  CHECK(load_problem(problem_to_json(p).dump()) == p);
  for (const ProblemSpec &q : bundled_examples()) {
    CHECK(load_problem(problem_to_json(q).dump()) == q);
  }
}

TEST_CASE("material table") {
  MaterialParams m = builtin_material("AG50");
  CHECK(m.e_max == 120.0);
  CHECK(m.e_min == 2.9);
  m = builtin_material("VW");
  CHECK(m.e_max == 2100.0);
  CHECK(m.e_min == 8.0);
  m = builtin_material("AG");
  CHECK(m.e_max == 0.8);
  CHECK(m.e_min == 0.2);
  for (const auto &name : builtin_material_names()) {
    const MaterialParams e = builtin_material(name);
    CHECK(e.e_max > e.e_min);
    CHECK(e.e_min > 0.0);
  }
  try {
    builtin_material("PLA");
    FAIL("accepted");
  } catch (const LookupError &e) {
    CHECK(std::string(e.what()).find("AG50") != std::string::npos);
  }
}

TEST_CASE("bundled examples") {
  const ProblemSpec g = bundled_example("gingerbread");
  REQUIRE(g.num_states() == 2);
  const auto &s1 = g.boundary.states[0].targets;
  REQUIRE(s1.size() == 2);
  CHECK(s1[0].name == "a");
  CHECK(s1[0].u_target == Vec2{0, -8.0});
  CHECK(s1[1].u_target == Vec2{0, -2.0});
  CHECK(g.u_in() == 5.0);

  const ProblemSpec a = bundled_example("airfoil");
  REQUIRE(a.num_states() == 2);
  CHECK(a.boundary.states[0].targets[0].u_target.y == -11.0);
  CHECK(a.boundary.states[1].targets[0].u_target.y == 11.0);
  CHECK(a.u_in() == 5.0);

  CHECK(bundled_example("armadillo").u_in() == 7.0);

  const ProblemSpec d = bundled_example("dinosaur");
  REQUIRE(d.num_states() == 3);
  CHECK(d.u_in() == 4.0);
  for (const auto &t : d.boundary.states[2].targets) CHECK(norm(t.u_target) == 4.0);

  CHECK_THROWS_AS(bundled_example("smiley"), LookupError);
}

TEST_CASE("bundled examples mesh and solve fully solid") {
  for (const ProblemSpec &p : bundled_examples()) {
    CAPTURE(p.name);
    const std::size_t n = p.mesh.cells;
    const std::vector<double> t(n, p.area() / n);
    const auto r = solve_centroidal_vcpd(p.domain, t, random_sites(p.domain, n, p.optimizer.seed));
    const FeMesh mesh = extract_fe_mesh(r.diagram, p.boundary);
    const ElasticModel model(mesh, p.material);
    const SparseMatrix k = model.assemble(std::vector<double>(n, p.material.e_max));
    const StateSolution s = solve_state(k, mesh, p.boundary, LoadCase::kActuation);
    CHECK(s.u.allFinite());
    CHECK(s.u.norm() > 0.0);
  }
}
