#include "morph/power_diagram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Sparse>

#include "morph/errors.hpp"

namespace morph {

double domain_length(const Polygon &domain) {
  return bounding_box(domain.vertices).max_extent();
}

double weld_tolerance(const Polygon &domain) { return 1e-9 * domain_length(domain); }

std::vector<double> PowerDiagram::cell_areas() const {
  std::vector<double> a(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) a[i] = cells[i].area;
  return a;
}

bool PowerDiagram::has_empty_cell() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const PowerCell &c) { return c.empty(); });
}

Polygon PowerDiagram::cell_polygon(std::size_t i) const {
  const auto &pieces = cells.at(i).pieces;
  if (pieces.empty()) return {};
  auto it = std::max_element(pieces.begin(), pieces.end(),
                             [](const auto &a, const auto &b) {
                               return signed_area(a.vertices) <
                                      signed_area(b.vertices);
                             });
  return {it->vertices};
}

namespace {

HalfPlane bisector(Point2 xi, double wi, Point2 xj, double wj, int label) {
  const Point2 d = xj - xi;
  const double len = norm(d);
  const Point2 n{d.x / len, d.y / len};
  // |x - xi|^2 - wi <= |x - xj|^2 - wj  <=>  2 (xj - xi) . x <= |xj|^2 - |xi|^2 - wj + wi
  const double off = (dot(xj, xj) - dot(xi, xi) - wj + wi) / (2.0 * len);
  return {n, off, label};
}

PowerCell make_cell(std::size_t i, std::span<const Point2> sites,
                    std::span<const double> weights,
                    const LabeledPolygon &domain_poly, const BoundingBox &box,
                    double tol) {
  const std::size_t n = sites.size();
  const Point2 xi = sites[i];

  struct Candidate {
    double t;
    HalfPlane h;
  };
  std::vector<Candidate> cand;
  cand.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    HalfPlane h = bisector(xi, weights[i], sites[j], weights[j],
                           static_cast<int>(j));
    cand.push_back({h.offset - dot(h.normal, xi), h});
  }
  std::sort(cand.begin(), cand.end(),
            [](const Candidate &a, const Candidate &b) { return a.t < b.t; });

  LabeledPolygon convex{{box.lo, {box.hi.x, box.lo.y}, box.hi, {box.lo.x, box.hi.y}},
                        {-1, -1, -1, -1}};
  auto radius = [&](const LabeledPolygon &p) {
    double r = 0.0;
    for (const Point2 &v : p.vertices) r = std::max(r, distance(v, xi));
    return r;
  };
  double r = radius(convex);
  std::map<int, HalfPlane> used;
  for (const Candidate &c : cand) {
    if (c.t > r) break;
    auto out = clip_halfplane(convex, c.h, tol);
    if (out.empty()) return {};
    convex = std::move(out.front());
    r = radius(convex);
  }
  for (int label : convex.labels) {
    if (label >= 0) used.emplace(label, HalfPlane{});
  }
  for (const Candidate &c : cand) {
    auto it = used.find(c.h.label);
    if (it != used.end()) it->second = c.h;
  }
  std::vector<HalfPlane> planes;
  planes.reserve(used.size());
  for (const auto &[label, h] : used) planes.push_back(h);

  PowerCell cell;
  cell.pieces = clip_pieces(domain_poly, planes, tol);
  std::map<int, double> shared;
  double cx = 0.0, cy = 0.0;
  for (const auto &piece : cell.pieces) {
    const double a = signed_area(piece.vertices);
    const Point2 c = polygon_centroid({piece.vertices});
    cell.area += a;
    cx += a * c.x;
    cy += a * c.y;
    cell.second_moment += polygon_second_moment(piece.vertices, xi);
    const std::size_t m = piece.vertices.size();
    for (std::size_t k = 0; k < m; ++k) {
      if (piece.labels[k] < 0) continue;
      shared[piece.labels[k]] +=
          distance(piece.vertices[k], piece.vertices[(k + 1) % m]);
    }
  }
  if (cell.area > 0.0) cell.centroid = {cx / cell.area, cy / cell.area};
  for (const auto &[j, len] : shared) {
    cell.neighbors.push_back({j, len, distance(xi, sites[j])});
  }
  return cell;
}

}  // namespace

PowerDiagram build_power_diagram(std::span<const Point2> sites,
                                 std::span<const double> weights,
                                 const Polygon &domain) {
  const std::size_t n = sites.size();
  if (n == 0) throw InvalidInput("power diagram needs at least one site");
  if (weights.size() != n) {
    throw InvalidInput("weights/sites size mismatch");
  }
  if (domain.size() < 3) throw InvalidGeometry("domain needs 3 vertices");
  const double weld = weld_tolerance(domain);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(sites[i].x) || !std::isfinite(sites[i].y)) {
      throw InvalidInput("non-finite site " + std::to_string(i));
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(sites[i], sites[j]) <= weld) {
        throw InvalidInput("duplicate sites " + std::to_string(i) + " and " +
                           std::to_string(j));
      }
    }
  }

  BoundingBox box = bounding_box(domain.vertices);
  const double L = box.max_extent();
  const double pad = 0.1 * L;
  box.lo = box.lo - Point2{pad, pad};
  box.hi = box.hi + Point2{pad, pad};
  const double tol = 1e-11 * L;

  LabeledPolygon domain_poly{domain.vertices, {}};
  for (std::size_t e = 0; e < domain.size(); ++e) {
    domain_poly.labels.push_back(-1 - static_cast<int>(e));
  }

  PowerDiagram d;
  d.domain = domain;
  d.sites.assign(sites.begin(), sites.end());
  d.weights.assign(weights.begin(), weights.end());
  d.cells.resize(n);
  if (n == 1) {
    PowerCell &c = d.cells[0];
    c.pieces.push_back(domain_poly);
    c.area = signed_area(domain.vertices);
    c.centroid = polygon_centroid(domain);
    c.second_moment = polygon_second_moment(domain.vertices, sites[0]);
    return d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    d.cells[i] = make_cell(i, sites, weights, domain_poly, box, tol);
  }
  // Both sides measure the same boundary; average so the neighbor graph is
  // exactly symmetric.
  std::map<std::pair<int, int>, double> len;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto &nb : d.cells[i].neighbors) {
      len[{static_cast<int>(i), nb.cell}] = nb.shared_length;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (auto &nb : d.cells[i].neighbors) {
      auto it = len.find({nb.cell, static_cast<int>(i)});
      const double other = it == len.end() ? 0.0 : it->second;
      nb.shared_length = 0.5 * (nb.shared_length + other);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto &[key, l] : len) {
      if (key.second != static_cast<int>(i)) continue;
      const int j = key.first;
      auto &nbs = d.cells[i].neighbors;
      const bool present = std::any_of(nbs.begin(), nbs.end(),
                                       [j](const auto &nb) { return nb.cell == j; });
      if (!present) nbs.push_back({j, 0.5 * l, distance(sites[i], sites[j])});
    }
  }
  return d;
}

double transport_energy(const PowerDiagram &d, std::span<const double> targets) {
  double e = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    e += d.cells[i].second_moment - d.weights[i] * (d.cells[i].area - targets[i]);
  }
  return e;
}

double site_gradient_norm(const PowerDiagram &d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const PowerCell &c = d.cells[i];
    if (c.empty()) continue;
    const double g = 2.0 * c.area * distance(d.sites[i], c.centroid);
    s += g * g;
  }
  return std::sqrt(s);
}

double vcpd_threshold(const Polygon &domain, std::size_t n) {
  const double v_mean = std::abs(polygon_area(domain)) / static_cast<double>(n);
  return 1e-4 * domain_length(domain) * v_mean * std::sqrt(8.0 * static_cast<double>(n));
}

namespace {

double max_abs_residual(const PowerDiagram &d, std::span<const double> targets) {
  double r = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    r = std::max(r, std::abs(d.cells[i].area - targets[i]));
  }
  return r;
}

double residual_norm(const PowerDiagram &d, std::span<const double> targets) {
  double r = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = d.cells[i].area - targets[i];
    r += e * e;
  }
  return std::sqrt(r);
}

// Newton direction for dV/dW * delta = V_t - V with delta_0 = 0.
std::optional<Eigen::VectorXd> newton_direction(const PowerDiagram &d,
                                                std::span<const double> targets) {
  const int n = static_cast<int>(d.size());
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (const auto &nb : d.cells[i].neighbors) {
      if (nb.site_distance <= 0.0) continue;
      const double h = nb.shared_length / (2.0 * nb.site_distance);
      diag[i] += h;
      if (i > 0 && nb.cell > 0) trip.emplace_back(i - 1, nb.cell - 1, -h);
    }
  }
  double scale = 0.0;
  for (int i = 1; i < n; ++i) scale = std::max(scale, diag[i]);
  for (int i = 1; i < n; ++i) {
    trip.emplace_back(i - 1, i - 1, diag[i] + 1e-14 * scale);
  }
  Eigen::SparseMatrix<double> jac(n - 1, n - 1);
  jac.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs(n - 1);
  for (int i = 1; i < n; ++i) rhs[i - 1] = targets[i] - d.cells[i].area;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(jac);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
  Eigen::VectorXd delta(n);
  delta[0] = 0.0;
  delta.tail(n - 1) = x;
  return delta;
}

}  // namespace

VolumeSolveResult solve_volume_constraints(const PowerDiagram &diagram,
                                           std::span<const double> targets,
                                           const VolumeSolveOptions &opts) {
  const std::size_t n = diagram.size();
  if (targets.size() != n) throw InvalidInput("targets/cells size mismatch");
  const double area = std::abs(polygon_area(diagram.domain));
  double sum = 0.0;
  for (double t : targets) {
    if (!(t > 0.0)) throw InvalidInput("target volumes must be positive");
    sum += t;
  }
  if (std::abs(sum - area) > 1e-9 * area) {
    throw InvalidInput("target volumes must sum to the domain area");
  }

  VolumeSolveResult res{diagram, 0, max_abs_residual(diagram, targets), {}};
  if (n == 1) return res;
  if (res.diagram.has_empty_cell()) {
    // Newton has no curvature for an empty cell; restart from the Voronoi
    // diagram, where every site owns a neighborhood of itself.
    res.diagram = build_power_diagram(diagram.sites, std::vector<double>(n, 0.0),
                                      diagram.domain);
    res.max_residual = max_abs_residual(res.diagram, targets);
  }

  const double contract = opts.tolerance * area / static_cast<double>(n);
  const double tight = opts.tight_tolerance * area / static_cast<double>(n);
  const double energy_noise = 1e-13 * area * domain_length(diagram.domain) *
                              domain_length(diagram.domain);
  double energy = transport_energy(res.diagram, targets);
  if (opts.record_energy) res.energy_history.push_back(energy);
  int slow_steps = 0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res.max_residual <= tight) break;
    if (res.max_residual <= contract && slow_steps >= 2) break;
    const auto delta = newton_direction(res.diagram, targets);
    if (!delta) break;
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      slope += (targets[i] - res.diagram.cells[i].area) * (*delta)[i];
    }
    const double rnorm = residual_norm(res.diagram, targets);
    bool accepted = false;
    double t = 1.0;
    // Inside the contract tolerance a stalled step is roundoff; give up early.
    const int max_halvings = res.max_residual <= contract ? 3 : 40;
    for (int ls = 0; ls < max_halvings; ++ls, t *= 0.5) {
      std::vector<double> w(res.diagram.weights);
      for (std::size_t i = 0; i < n; ++i) w[i] += t * (*delta)[i];
      PowerDiagram trial = build_power_diagram(res.diagram.sites, w, diagram.domain);
      if (trial.has_empty_cell()) continue;
      const double e_new = transport_energy(trial, targets);
      const double r_new = residual_norm(trial, targets);
      const bool ascent = e_new >= energy + 1e-4 * t * slope;
      const bool in_noise = std::abs(e_new - energy) <= energy_noise &&
                            r_new < rnorm;
      if (!ascent && !in_noise) continue;
      const double prev = res.max_residual;
      res.diagram = std::move(trial);
      res.max_residual = max_abs_residual(res.diagram, targets);
      energy = std::max(e_new, energy);
      if (opts.record_energy) res.energy_history.push_back(e_new);
      slow_steps = res.max_residual > 0.5 * prev ? slow_steps + 1 : 0;
      accepted = true;
      break;
    }
    res.iterations = it + 1;
    if (!accepted) break;
  }
  if (res.max_residual > contract) {
    throw NonConvergence("volume constraint solve did not converge (worst residual " +
                             std::to_string(res.max_residual) + ")",
                         res.max_residual);
  }
  return res;
}

namespace {

Point2 site_target(const PowerDiagram &d, std::size_t i, double tol) {
  const PowerCell &c = d.cells[i];
  if (c.empty()) return d.sites[i];
  if (point_in_polygon(d.domain.vertices, c.centroid, tol)) return c.centroid;
  const Polygon piece = d.cell_polygon(i);
  const Point2 pc = polygon_centroid(piece);
  if (point_in_polygon(d.domain.vertices, pc, tol)) return pc;
  return d.sites[i];
}

}  // namespace

VcpdResult solve_centroidal_vcpd(const Polygon &domain,
                                 std::span<const double> targets,
                                 std::span<const Point2> initial_sites,
                                 std::span<const double> initial_weights,
                                 const VcpdOptions &opts) {
  const std::size_t n = initial_sites.size();
  if (targets.size() != n) throw InvalidInput("targets/sites size mismatch");
  std::vector<double> w(initial_weights.begin(), initial_weights.end());
  if (w.empty()) w.assign(n, 0.0);
  if (w.size() != n) throw InvalidInput("weights/sites size mismatch");

  VcpdResult out;
  out.threshold = opts.threshold_scale * vcpd_threshold(domain, n);
  const double tol = weld_tolerance(domain);

  PowerDiagram d = build_power_diagram(initial_sites, w, domain);
  double best = std::numeric_limits<double>::infinity();
  const int cap = opts.fixed_steps ? *opts.fixed_steps : opts.max_outer_iterations;
  for (int outer = 0;; ++outer) {
    d = solve_volume_constraints(d, targets, opts.volume).diagram;
    const double g = site_gradient_norm(d);
    if (g < best || opts.fixed_steps) {
      best = g;
      out.diagram = d;
      out.gradient_norm = g;
      out.site_updates = outer;
    }
    if (!opts.fixed_steps && g < out.threshold) {
      out.converged = true;
      break;
    }
    if (outer >= cap) break;

    std::vector<Point2> x(d.sites);
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 c = site_target(d, i, tol);
      x[i] = opts.update == SiteUpdate::kLloyd
                 ? c
                 : x[i] + opts.descent_step * (c - x[i]);
    }
    d = build_power_diagram(x, d.weights, domain);
  }
  if (opts.fixed_steps) out.converged = out.gradient_norm < out.threshold;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err = std::max(err, std::abs(out.diagram.cells[i].area - targets[i]));
  }
  out.max_volume_error = err;
  return out;
}

std::vector<Point2> random_sites(const Polygon &domain, std::size_t n,
                                 std::uint64_t seed) {
  const BoundingBox box = bounding_box(domain.vertices);
  const double margin = 1e-6 * box.max_extent();
  const double weld = weld_tolerance(domain);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x);
  std::uniform_real_distribution<double> uy(box.lo.y, box.hi.y);
  std::vector<Point2> pts;
  pts.reserve(n);
  std::size_t attempts = 0;
  while (pts.size() < n) {
    if (++attempts > 1000 * (n + 10)) {
      throw InvalidGeometry("could not sample sites inside the domain");
    }
    const Point2 p{ux(rng), uy(rng)};
    if (!point_in_polygon(domain.vertices, p, margin)) continue;
    const bool dup = std::any_of(pts.begin(), pts.end(),
                                 [&](Point2 q) { return distance(p, q) <= weld; });
    if (!dup) pts.push_back(p);
  }
  return pts;
}

std::vector<double> relative_to_physical_volumes(std::span<const double> phi,
                                                 double total) {
  double sum = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!(phi[i] > 0.0)) {
      throw InvalidInput("relative volume " + std::to_string(i) + " must be positive");
    }
    sum += phi[i];
  }
  std::vector<double> v(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) v[i] = phi[i] / sum * total;
  return v;
}

std::vector<double> clamp_volumes(std::span<const double> volumes, double v_min,
                                  double v_max, double total) {
  const std::size_t n = volumes.size();
  const double dn = static_cast<double>(n);
  if (v_min > v_max || dn * v_min > total * (1 + 1e-12) ||
      dn * v_max < total * (1 - 1e-12)) {
    throw InvalidInput("volume bounds cannot be met for the domain area");
  }
  std::vector<double> v(volumes.begin(), volumes.end());
  std::vector<int> state(n, 0);  // -1 at v_min, +1 at v_max
  for (std::size_t pass = 0; pass <= n; ++pass) {
    double fixed = 0.0, free_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] < 0) fixed += v_min;
      else if (state[i] > 0) fixed += v_max;
      else free_sum += v[i];
    }
    if (free_sum > 0.0) {
      const double s = (total - fixed) / free_sum;
      for (std::size_t i = 0; i < n; ++i) {
        if (state[i] == 0) v[i] *= s;
      }
    }
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] != 0) {
        v[i] = state[i] < 0 ? v_min : v_max;
        continue;
      }
      if (v[i] < v_min) {
        state[i] = -1;
        v[i] = v_min;
        changed = true;
      } else if (v[i] > v_max) {
        state[i] = 1;
        v[i] = v_max;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return v;
}

}  // namespace morph
