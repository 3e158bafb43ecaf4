#include "morph/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "morph/errors.hpp"
#include "morph/gradcheck.hpp"
#include "morph/io.hpp"

namespace morph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A problem file, or the name of a bundled example.
ProblemSpec load_problem_arg(const std::string &arg) {
  if (fs::exists(arg)) return load_problem_file(arg);
  for (const std::string &name : bundled_example_names()) {
    if (name == arg) return bundled_example(name);
  }
  throw InvalidInput("no problem file or bundled example named '" + arg + "'");
}

Polygon load_domain_arg(const std::string &arg) {
  json doc;
  if (fs::exists(arg)) {
    std::ifstream in(arg);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error &e) {
      throw ValidationError(ValidationKind::kSchema, "/", e.what());
    }
  } else if (!arg.empty() && (arg.front() == '[' || arg.front() == '{')) {
    try {
      doc = json::parse(arg);
    } catch (const json::parse_error &e) {
      throw ValidationError(ValidationKind::kSchema, "/", e.what());
    }
  } else {
    doc = json::parse(bundled_example_source(arg));
  }
  std::string path = "/";
  if (doc.is_object()) {
    if (!doc.contains("domain")) {
      throw ValidationError(ValidationKind::kSchema, "/domain", "missing required key");
    }
    doc = json(doc["domain"]);
    path = "/domain";
  }
  if (!doc.is_array() || doc.size() < 3) {
    throw ValidationError(ValidationKind::kSchema, path, "expected a list of at least 3 points");
  }
  Polygon poly;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json &p = doc[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ValidationError(ValidationKind::kSchema,
                            (path == "/" ? "" : path) + "/" + std::to_string(i), "expected [x, y]");
    }
    poly.vertices.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (!is_simple(poly.vertices)) {
    throw ValidationError(ValidationKind::kInvalidGeometry, path, "polygon is not simple");
  }
  const double a = signed_area(poly.vertices);
  if (a == 0.0) throw ValidationError(ValidationKind::kInvalidGeometry, path, "zero area");
  if (a < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
  return poly;
}

std::string vec2(Vec2 v) { return "(" + format_g9(v.x) + ", " + format_g9(v.y) + ")"; }

std::string csv_text(const ProblemSpec &p, const FeMesh &mesh, std::size_t state,
                     const Eigen::VectorXd &u) {
  std::ostringstream os;
  write_state_csv(os, p, mesh, state, u);
  return os.str();
}

void print_targets(std::ostream &out, const ProblemSpec &p, const FeMesh &mesh,
                   std::size_t state, const Eigen::VectorXd &u) {
  const auto &targets = p.boundary.states[state].targets;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const int v = mesh.target_nodes[state][t];
    const std::string name = targets[t].name.empty() ? "t" + std::to_string(t + 1)
                                                      : targets[t].name;
    out << "  state " << state + 1 << "  " << name << "  u_T " << vec2(targets[t].u_target)
        << "  u_sim " << vec2({u[2 * v], u[2 * v + 1]}) << '\n';
  }
}

struct OptimizeArgs {
  std::string problem;
  std::string out = "morph_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> phase1_max;
  std::optional<int> phase2_max;
  std::optional<double> alpha;
  double display_scale = 1.0;
  bool plane_strain = false;
  bool quiet = false;
};

int cmd_optimize(const OptimizeArgs &a, std::ostream &out) {
  ProblemSpec p = load_problem_arg(a.problem);
  if (a.seed) p.optimizer.seed = *a.seed;
  if (a.phase1_max) p.optimizer.max_iter_phase1 = *a.phase1_max;
  if (a.phase2_max) p.optimizer.max_iter_phase2 = *a.phase2_max;
  if (a.alpha) p.optimizer.alpha = *a.alpha;
  if (a.plane_strain) p.material.plane_strain = true;
  p = normalize_problem(std::move(p));

  StagedOutput staged(a.out);
  OptimizeOptions opts;
  if (!a.quiet) {
    opts.progress = [&out](const ConvergenceRow &r) {
      out << "iter " << r.iteration << "  phase " << r.phase << "  F " << format_g9(r.objective)
          << "  grad " << format_g9(r.gradient_norm) << '\n';
    };
  }
  const OptimizationResult r = optimize(p, opts);
  const Discretization &disc = *r.discretization;
  const std::size_t k = p.num_states();

  staged.write("design.json", design_to_json(make_design_record(p, r)).dump(2) + "\n");
  std::ostringstream conv;
  write_convergence_csv(conv, r.log, k);
  staged.write("convergence.csv", conv.str());
  SvgStyle style;
  style.display_scale = a.display_scale;
  style.rho_floor = p.material.rho_floor;
  staged.write("diagrams/initial.svg",
               design_svg(disc.diagram, disc.mesh, r.design.rho, {}, nullptr, style));
  for (std::size_t j = 0; j < k; ++j) {
    const std::string stem = "state" + std::to_string(j + 1);
    staged.write("states/" + stem + ".csv", csv_text(p, disc.mesh, j, r.states[j].u));
    staged.write("diagrams/" + stem + ".svg", design_svg(disc.diagram, disc.mesh, r.design.rho,
                                                         r.design.eta[j], &r.states[j].u, style));
  }
  staged.commit();

  out << "phase 1: " << r.iterations_phase1 << " iterations, intermediate rho "
      << format_g9(r.intermediate_phase1) << '\n';
  out << "phase 2: " << r.iterations_phase2 << " iterations, intermediate rho "
      << format_g9(r.intermediate_phase2) << '\n';
  out << "thresholds: rho " << format_g9(r.thresholds.rho);
  for (double t : r.thresholds.eta) out << "  eta " << format_g9(t);
  out << '\n';
  for (std::size_t j = 0; j < k; ++j) {
    out << "state " << j + 1 << ": J " << format_g9(r.breakdown.pose_errors[j]) << '\n';
    print_targets(out, p, disc.mesh, j, r.states[j].u);
  }
  out << "connectivity: " << (r.connectivity.connected ? "connected" : "NOT connected") << ", "
      << r.connectivity.components << " solid component(s)\n";
  out << (r.converged ? "converged" : "not converged") << "; artifacts in " << a.out << '\n';
  return r.converged ? kExitOk : kExitNotConverged;
}

struct SimulateArgs {
  std::string design;
  std::string out = "simulate_out";
  std::optional<std::size_t> state;
  std::vector<double> eta;
  std::vector<double> u_p;
  double display_scale = 1.0;
  bool plane_strain = false;
};

int cmd_simulate(const SimulateArgs &a, std::ostream &out) {
  DesignRecord rec = load_design_file(a.design);
  if (a.plane_strain) rec.problem.material.plane_strain = true;
  const std::size_t k = rec.problem.num_states();
  const std::size_t n = rec.problem.mesh.cells;
  const std::size_t state = a.state.value_or(1);
  if (state < 1 || state > k) {
    throw ValidationError(ValidationKind::kInvalidValue, "--state",
                          "expected 1.." + std::to_string(k));
  }
  std::vector<double> eta = rec.design.eta[state - 1];
  if (!a.eta.empty()) {
    if (a.eta.size() != n) {
      throw ValidationError(ValidationKind::kInvalidValue, "--eta",
                            "expected " + std::to_string(n) + " values, got " +
                                std::to_string(a.eta.size()));
    }
    for (double e : a.eta) {
      if (!(e >= 0.0 && e <= 1.0)) {
        throw ValidationError(ValidationKind::kInvalidValue, "--eta", "values must lie in [0, 1]");
      }
    }
    eta = a.eta;
  }
  if (!a.u_p.empty()) {
    if (a.u_p.size() != 2) {
      throw ValidationError(ValidationKind::kInvalidValue, "--u-p", "expected dx,dy");
    }
    rec.problem.boundary.u_actuation = {a.u_p[0], a.u_p[1]};
  }

  const auto disc = rebuild_discretization(rec);
  const StateSolution s = simulate_state(rec.problem, disc->mesh, rec.design.rho, eta);

  StagedOutput staged(a.out);
  staged.write("targets.csv", csv_text(rec.problem, disc->mesh, state - 1, s.u));
  std::ostringstream nodes;
  nodes << "node,x,y,u_x,u_y\n";
  for (std::size_t v = 0; v < disc->mesh.vertices.size(); ++v) {
    const Point2 p = disc->mesh.vertices[v];
    nodes << v << ',' << format_g9(p.x) << ',' << format_g9(p.y) << ','
          << format_g9(s.u[2 * v]) << ',' << format_g9(s.u[2 * v + 1]) << '\n';
  }
  staged.write("nodes.csv", nodes.str());
  SvgStyle style;
  style.display_scale = a.display_scale;
  style.rho_floor = rec.problem.material.rho_floor;
  staged.write("deformed.svg",
               design_svg(disc->diagram, disc->mesh, rec.design.rho, eta, &s.u, style));
  staged.commit();

  out << "targets of state " << state << (a.eta.empty() ? "" : " (custom heating)") << ":\n";
  print_targets(out, rec.problem, disc->mesh, state - 1, s.u);
  out << "artifacts in " << a.out << '\n';
  return kExitOk;
}

struct GradcheckArgs {
  std::string problem;
  std::size_t cells = 6;
  std::uint64_t seed = 1;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs &a, std::ostream &out) {
  if (a.cells < 1 || a.cells > 12) {
    throw ValidationError(ValidationKind::kInvalidValue, "--cells", "expected 1..12 cells");
  }
  const ProblemSpec p = a.problem.empty() ? random_problem(a.seed) : load_problem_arg(a.problem);
  GradientCheckOptions o;
  o.cells = a.cells;
  o.seed = a.seed;
  o.corrupt_gradient = a.corrupt;
  const GradientCheckReport r = gradient_check(p, o);
  for (const FamilyCheck &f : r.families) {
    out << f.family << ": max relative error " << format_g9(f.max_relative_error)
        << "  worst index " << f.worst_index << "  adjoint " << format_g9(f.adjoint_at_worst)
        << "  fd " << format_g9(f.fd_at_worst) << '\n';
  }
  out << "phi: richardson ratio " << format_g9(r.phi_richardson_ratio) << "  steps";
  for (double h : r.phi_steps) out << ' ' << format_g9(h);
  out << '\n' << (r.passed ? "PASS" : "FAIL") << '\n';
  return r.passed ? kExitOk : kExitError;
}

struct TessellateArgs {
  std::string domain;
  std::size_t cells = 16;
  std::vector<double> phi;
  std::uint64_t seed = 1;
  std::string out = "tessellate_out";
};

int cmd_tessellate(const TessellateArgs &a, std::ostream &out) {
  const Polygon domain = load_domain_arg(a.domain);
  if (a.cells < 1) throw ValidationError(ValidationKind::kInvalidValue, "--cells", "expected >= 1");
  std::vector<double> phi = a.phi;
  if (phi.empty()) phi.assign(a.cells, 1.0);
  if (phi.size() != a.cells) {
    throw ValidationError(ValidationKind::kInvalidValue, "--phi",
                          "expected " + std::to_string(a.cells) + " values");
  }
  const double area = polygon_area(domain);
  const auto targets = relative_to_physical_volumes(phi, area);
  StagedOutput staged(a.out);
  const auto sites = random_sites(domain, a.cells, a.seed);
  VcpdResult r;
  try {
    r = solve_centroidal_vcpd(domain, targets, sites, {}, VcpdOptions{});
  } catch (const NonConvergence &e) {
    out << "volume solve did not converge: worst residual " << format_g9(e.worst_residual())
        << '\n';
    return kExitNotConverged;
  }
  staged.write("tessellation.svg", diagram_svg(r.diagram));
  staged.commit();
  out << "cells " << a.cells << '\n'
      << "max volume error " << format_g9(r.max_volume_error) << '\n'
      << "site gradient norm " << format_g9(r.gradient_norm) << '\n'
      << "threshold " << format_g9(r.threshold) << '\n'
      << "site updates " << r.site_updates << '\n'
      << (r.converged ? "converged" : "not converged") << "; artifacts in " << a.out << '\n';
  return r.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Multi-state compliant structure design on power-diagram meshes"};
  app.require_subcommand(1);

  OptimizeArgs oa;
  auto *opt = app.add_subcommand("optimize", "Run the two-phase optimization");
  opt->add_option("problem", oa.problem, "Problem file or bundled example name")->required();
  opt->add_option("--out", oa.out, "Output directory")->capture_default_str();
  opt->add_option("--seed", oa.seed, "Override the optimizer seed");
  opt->add_option("--phase1-max", oa.phase1_max, "Phase-1 iteration cap")->check(CLI::NonNegativeNumber);
  opt->add_option("--phase2-max", oa.phase2_max, "Phase-2 iteration cap")->check(CLI::NonNegativeNumber);
  opt->add_option("--alpha", oa.alpha, "Compliance weight");
  opt->add_option("--display-scale", oa.display_scale, "Displacement factor for deformed SVGs")
      ->capture_default_str();
  opt->add_flag("--plane-strain", oa.plane_strain, "Plane strain instead of plane stress");
  opt->add_flag("-q,--quiet", oa.quiet, "No per-iteration output");

  SimulateArgs sa;
  auto *sim = app.add_subcommand("simulate", "Forward solve of a stored design");
  sim->add_option("design", sa.design, "design.json")->required();
  sim->add_option("--out", sa.out, "Output directory")->capture_default_str();
  sim->add_option("--state", sa.state, "State index (1-based) whose heating is used");
  sim->add_option("--eta", sa.eta, "Explicit heating per cell")->delimiter(',');
  sim->add_option("--u-p", sa.u_p, "Override the actuation displacement dx,dy")->delimiter(',');
  sim->add_option("--display-scale", sa.display_scale, "Displacement factor for the SVG")
      ->capture_default_str();
  sim->add_flag("--plane-strain", sa.plane_strain, "Plane strain instead of plane stress");

  GradcheckArgs ga;
  auto *gc = app.add_subcommand("gradcheck", "Adjoint gradients against finite differences");
  gc->add_option("problem", ga.problem, "Problem file or bundled example (random when omitted)");
  gc->add_option("--cells", ga.cells, "Cell count (at most 12)")->capture_default_str();
  gc->add_option("--seed", ga.seed, "Seed for the design and sites")->capture_default_str();
  gc->add_flag("--corrupt-gradient", ga.corrupt, "Perturb the adjoint gradient (self-test)");

  TessellateArgs ta;
  auto *tess = app.add_subcommand("tessellate", "Centroidal volume-constrained power diagram");
  tess->add_option("domain", ta.domain, "Polygon (JSON text or file), problem file, or bundled example")->required();
  tess->add_option("--cells", ta.cells, "Cell count")->capture_default_str();
  tess->add_option("--phi", ta.phi, "Relative cell volumes")->delimiter(',');
  tess->add_option("--seed", ta.seed, "Seed for the start sites")->capture_default_str();
  tess->add_option("--out", ta.out, "Output directory")->capture_default_str();

  std::string example;
  auto *ex = app.add_subcommand("examples", "List bundled examples or print one");
  ex->add_option("name", example, "Example to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*opt) return cmd_optimize(oa, out);
    if (*sim) return cmd_simulate(sa, out);
    if (*gc) return cmd_gradcheck(ga, out);
    if (*tess) return cmd_tessellate(ta, out);
    if (*ex) {
      if (example.empty()) {
        for (const std::string &name : bundled_example_names()) out << name << '\n';
      } else {
        out << bundled_example_source(example);
      }
      return kExitOk;
    }
  } catch (const ValidationError &e) {
    err << "error: invalid input at " << e.path() << ": " << e.message() << '\n';
    return kExitError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace morph
