#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "morph/errors.hpp"
#include "morph/gradcheck.hpp"
#include "morph/io.hpp"

namespace py = pybind11;
using namespace morph;
using namespace pybind11::literals;

namespace {

std::vector<Point2> to_points(const py::array_t<double, py::array::c_style | py::array::forcecast> &a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("expected an (n, 2) array of points");
  const auto r = a.unchecked<2>();
  std::vector<Point2> pts(r.shape(0));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) pts[i] = {r(i, 0), r(i, 1)};
  return pts;
}

py::array_t<double> from_points(const std::vector<Point2> &pts) {
  py::array_t<double> a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w(i, 0) = pts[i].x;
    w(i, 1) = pts[i].y;
  }
  return a;
}

py::array_t<double> from_vector(const std::vector<double> &v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> from_rows(const std::vector<std::vector<double>> &rows) {
  const py::ssize_t n = rows.empty() ? 0 : static_cast<py::ssize_t>(rows[0].size());
  py::array_t<double> a({static_cast<py::ssize_t>(rows.size()), n});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (py::ssize_t i = 0; i < n; ++i) w(j, i) = rows[j][i];
  }
  return a;
}

py::object to_python(const nlohmann::json &doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::object &obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

Polygon to_polygon(const py::array_t<double, py::array::c_style | py::array::forcecast> &a) {
  Polygon p{to_points(a)};
  if (signed_area(p.vertices) < 0.0) std::reverse(p.vertices.begin(), p.vertices.end());
  return p;
}

// Target displacements of one state, one dict per target.
py::list target_rows(const ProblemSpec &p, const FeMesh &mesh, std::size_t state,
                     const Eigen::VectorXd &u) {
  py::list rows;
  const auto &targets = p.boundary.states[state].targets;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const int v = mesh.target_nodes[state][t];
    rows.append(py::dict("name"_a = targets[t].name,
                         "point"_a = py::make_tuple(targets[t].point.x, targets[t].point.y),
                         "u_target"_a = py::make_tuple(targets[t].u_target.x, targets[t].u_target.y),
                         "u"_a = py::make_tuple(u[2 * v], u[2 * v + 1])));
  }
  return rows;
}

py::dict diagram_dict(const PowerDiagram &d) {
  std::vector<Point2> centroids;
  for (const auto &c : d.cells) centroids.push_back(c.centroid);
  py::list cells;
  for (const auto &c : d.cells) {
    py::list pieces;
    for (const auto &piece : c.pieces) pieces.append(from_points(piece.vertices));
    cells.append(pieces);
  }
  return py::dict("sites"_a = from_points(d.sites), "weights"_a = from_vector(d.weights),
                  "areas"_a = from_vector(d.cell_areas()), "centroids"_a = from_points(centroids),
                  "cells"_a = cells);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-state compliant structure design on power-diagram meshes";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "MorphError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);

  py::class_<MaterialParams>(m, "Material")
      .def(py::init<>())
      .def_readwrite("e_max", &MaterialParams::e_max)
      .def_readwrite("e_min", &MaterialParams::e_min)
      .def_readwrite("nu", &MaterialParams::nu)
      .def_readwrite("rho_floor", &MaterialParams::rho_floor)
      .def_readwrite("penalty", &MaterialParams::penalty)
      .def_readwrite("plane_strain", &MaterialParams::plane_strain)
      .def_readwrite("thickness", &MaterialParams::thickness)
      .def("__repr__", [](const MaterialParams &p) {
        return "Material(e_max=" + format_g9(p.e_max) + ", e_min=" + format_g9(p.e_min) +
               ", nu=" + format_g9(p.nu) + ")";
      });

  py::class_<ProblemSpec>(m, "Problem")
      .def_readonly("name", &ProblemSpec::name)
      .def_readwrite("material", &ProblemSpec::material)
      .def_property_readonly("num_states", &ProblemSpec::num_states)
      .def_property_readonly("area", &ProblemSpec::area)
      .def_property_readonly("domain", [](const ProblemSpec &p) { return from_points(p.domain.vertices); })
      .def_property(
          "cells", [](const ProblemSpec &p) { return p.mesh.cells; },
          [](ProblemSpec &p, int n) { p.mesh.cells = n; })
      .def("to_dict", [](const ProblemSpec &p) { return to_python(problem_to_json(p)); })
      .def("__repr__", [](const ProblemSpec &p) {
        return "Problem(name='" + p.name + "', cells=" + std::to_string(p.mesh.cells) +
               ", states=" + std::to_string(p.num_states()) + ")";
      });

  m.def("load_problem", [](const py::object &doc) {
    if (py::isinstance<py::str>(doc)) return load_problem(doc.cast<std::string>());
    return problem_from_json(from_python(doc));
  }, "doc"_a, "Parse a problem from JSON text or a dict.");
  m.def("load_problem_file", [](const std::string &path) { return load_problem_file(path); }, "path"_a);
  m.def("bundled_example", [](const std::string &name) { return bundled_example(name); }, "name"_a);
  m.def("bundled_example_names", &bundled_example_names);
  m.def("random_problem", &random_problem, "seed"_a, "states"_a = 2);
  m.def("builtin_material", [](const std::string &name) { return builtin_material(name); }, "name"_a);
  m.def("builtin_material_names", &builtin_material_names);

  m.def("interpolate_modulus", &interpolate_modulus, "rho"_a, "eta"_a, "material"_a);
  m.def("regularization", &regularization, "xi"_a, "lo"_a, "hi"_a, "r_max"_a);
  m.def("project", py::overload_cast<double, double, double, double>(&project), "xi"_a,
        "threshold"_a, "lo"_a, "hi"_a);

  m.def("power_diagram", [](const py::array_t<double> &sites, const py::array_t<double> &weights,
                            const py::array_t<double> &domain) {
    const auto w = weights.cast<std::vector<double>>();
    return diagram_dict(build_power_diagram(to_points(sites), w, to_polygon(domain)));
  }, "sites"_a, "weights"_a, "domain"_a);

  m.def("tessellate", [](const py::array_t<double> &domain, std::size_t cells,
                         std::optional<std::vector<double>> phi, std::uint64_t seed) {
    const Polygon dom = to_polygon(domain);
    const std::vector<double> rel = phi.value_or(std::vector<double>(cells, 1.0));
    if (rel.size() != cells) throw py::value_error("phi needs one value per cell");
    const auto targets = relative_to_physical_volumes(rel, polygon_area(dom));
    VcpdResult r;
    {
      py::gil_scoped_release release;
      r = solve_centroidal_vcpd(dom, targets, random_sites(dom, cells, seed));
    }
    py::dict out = diagram_dict(r.diagram);
    out["targets"] = from_vector(targets);
    out["converged"] = r.converged;
    out["max_volume_error"] = r.max_volume_error;
    out["gradient_norm"] = r.gradient_norm;
    out["threshold"] = r.threshold;
    out["site_updates"] = r.site_updates;
    out["svg"] = diagram_svg(r.diagram);
    return out;
  }, "domain"_a, "cells"_a, "phi"_a = py::none(), "seed"_a = 1,
     "Centroidal diagram whose cell areas follow the relative volumes phi.");

  m.def("gradient_check", [](const ProblemSpec &p, std::size_t cells, std::uint64_t seed,
                             bool corrupt) {
    GradientCheckOptions o;
    o.cells = cells;
    o.seed = seed;
    o.corrupt_gradient = corrupt;
    GradientCheckReport r;
    {
      py::gil_scoped_release release;
      r = gradient_check(p, o);
    }
    py::list families;
    for (const FamilyCheck &f : r.families) {
      families.append(py::dict("family"_a = f.family, "max_relative_error"_a = f.max_relative_error,
                               "worst_index"_a = f.worst_index, "adjoint"_a = f.adjoint_at_worst,
                               "fd"_a = f.fd_at_worst));
    }
    return py::dict("families"_a = families, "richardson_ratio"_a = r.phi_richardson_ratio,
                    "phi_steps"_a = r.phi_steps, "passed"_a = r.passed);
  }, "problem"_a, "cells"_a = 6, "seed"_a = 1, "corrupt"_a = false);

  m.def("optimize", [](ProblemSpec p, std::optional<std::uint64_t> seed,
                       std::optional<int> max_iter_phase1, std::optional<int> max_iter_phase2,
                       std::optional<double> alpha) {
    if (seed) p.optimizer.seed = *seed;
    if (max_iter_phase1) p.optimizer.max_iter_phase1 = *max_iter_phase1;
    if (max_iter_phase2) p.optimizer.max_iter_phase2 = *max_iter_phase2;
    if (alpha) p.optimizer.alpha = *alpha;
    p = normalize_problem(p);
    OptimizationResult r;
    {
      py::gil_scoped_release release;
      r = optimize(p);
    }
    const FeMesh &mesh = r.discretization->mesh;
    py::list states, log;
    for (std::size_t j = 0; j < p.num_states(); ++j) {
      states.append(target_rows(p, mesh, j, r.states[j].u));
    }
    for (const ConvergenceRow &row : r.log) {
      log.append(py::dict("iteration"_a = row.iteration, "phase"_a = row.phase,
                          "objective"_a = row.objective, "pose_errors"_a = row.pose_errors,
                          "compliances"_a = row.compliances,
                          "regularization"_a = row.regularization,
                          "gradient_norm"_a = row.gradient_norm));
    }
    const auto &c = r.connectivity;
    return py::dict(
        "rho"_a = from_vector(r.design.rho), "eta"_a = from_rows(r.design.eta),
        "phi"_a = from_vector(r.design.phi), "continuous_rho"_a = from_vector(r.continuous.rho),
        "thresholds"_a = py::dict("rho"_a = r.thresholds.rho, "eta"_a = r.thresholds.eta),
        "pose_errors"_a = r.breakdown.pose_errors, "states"_a = states, "log"_a = log,
        "connectivity"_a = py::dict("connected"_a = c.connected, "components"_a = c.components),
        "intermediate_phase1"_a = r.intermediate_phase1,
        "intermediate_phase2"_a = r.intermediate_phase2, "r_max"_a = r.r_max,
        "converged"_a = r.converged,
        "design"_a = to_python(design_to_json(make_design_record(p, r))));
  }, "problem"_a, "seed"_a = py::none(), "max_iter_phase1"_a = py::none(),
     "max_iter_phase2"_a = py::none(), "alpha"_a = py::none(),
     "Two-phase optimization. The result's 'design' entry is a design document.");

  m.def("simulate", [](const py::object &design, std::size_t state,
                       std::optional<std::vector<double>> eta,
                       std::optional<std::pair<double, double>> u_p) {
    DesignRecord rec = design_from_json(from_python(design));
    const std::size_t k = rec.problem.num_states();
    if (state < 1 || state > k) throw py::value_error("state must lie in 1.." + std::to_string(k));
    std::vector<double> heat = eta.value_or(rec.design.eta[state - 1]);
    if (heat.size() != rec.design.num_cells()) throw py::value_error("eta needs one value per cell");
    if (u_p) rec.problem.boundary.u_actuation = {u_p->first, u_p->second};
    const auto disc = rebuild_discretization(rec);
    const StateSolution s = simulate_state(rec.problem, disc->mesh, rec.design.rho, heat);
    py::array_t<double> u({static_cast<py::ssize_t>(s.u.size() / 2), py::ssize_t{2}});
    std::copy(s.u.data(), s.u.data() + s.u.size(), u.mutable_data());
    return py::dict("targets"_a = target_rows(rec.problem, disc->mesh, state - 1, s.u),
                    "nodes"_a = from_points(disc->mesh.vertices),
                    "u"_a = u,
                    "svg"_a = design_svg(disc->diagram, disc->mesh, rec.design.rho, heat, &s.u, {}));
  }, "design"_a, "state"_a = 1, "eta"_a = py::none(), "u_p"_a = py::none(),
     "Forward solve of a stored design under one heating pattern.");
}
