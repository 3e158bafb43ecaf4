#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "morph/geom.hpp"

namespace morph {

// Shared boundary between two cells: total length of e*_ij and the distance
// |e_ij| between the two sites.
struct CellNeighbor {
  int cell = -1;
  double shared_length = 0.0;
  double site_distance = 0.0;
};

// A power cell clipped to the domain. Clipping against a non-convex domain
// can leave several disjoint pieces; edge labels >= 0 name the neighbor cell
// across that edge, labels < 0 mark domain boundary edges.
struct PowerCell {
  std::vector<LabeledPolygon> pieces;
  double area = 0.0;
  Point2 centroid;
  double second_moment = 0.0;  // integral of |x - site|^2
  std::vector<CellNeighbor> neighbors;

  bool empty() const { return pieces.empty(); }
};

struct PowerDiagram {
  Polygon domain;
  std::vector<Point2> sites;
  std::vector<double> weights;
  std::vector<PowerCell> cells;

  std::size_t size() const { return sites.size(); }
  std::vector<double> cell_areas() const;
  bool has_empty_cell() const;
  /// Largest piece of cell i as a plain polygon.
  Polygon cell_polygon(std::size_t i) const;
};

/// Max bounding-box edge of the domain.
double domain_length(const Polygon &domain);

/// Vertices closer than this are the same vertex.
double weld_tolerance(const Polygon &domain);

/// Cells {x in domain : |x - x_i|^2 - w_i <= |x - x_j|^2 - w_j for all j}.
/// Throws InvalidInput on size mismatch, n = 0 or duplicate sites.
PowerDiagram build_power_diagram(std::span<const Point2> sites,
                                 std::span<const double> weights,
                                 const Polygon &domain);

/// Volume-constraint energy
///   sum_i int_{V_i} |x - x_i|^2 dx - sum_i w_i (V_i - V_t,i).
/// Concave in the weights; maximized exactly where V = V_t.
double transport_energy(const PowerDiagram &d, std::span<const double> targets);

/// sqrt(sum_i (2 V_i |x_i - c_i|)^2): the norm of the energy gradient with
/// respect to the sites.
double site_gradient_norm(const PowerDiagram &d);

/// 1e-4 * L_domain * V_mean * sqrt(8 n).
double vcpd_threshold(const Polygon &domain, std::size_t n);

struct VolumeSolveOptions {
  int max_iterations = 100;
  // Contract: |V_i - V_t,i| <= tolerance * area / n.
  double tolerance = 1e-6;
  // Newton keeps iterating toward this while it still makes progress, so
  // that finite differences through the solve see a clean map.
  double tight_tolerance = 1e-13;
  // Record the energy after every accepted step.
  bool record_energy = false;
};

struct VolumeSolveResult {
  PowerDiagram diagram;
  int iterations = 0;
  double max_residual = 0.0;
  std::vector<double> energy_history;
};

/// Newton iteration on the weights so every cell reaches its target area.
/// Weights are pinned by w_0 staying fixed. Throws NonConvergence (carrying
/// the worst residual) after max_iterations.
VolumeSolveResult solve_volume_constraints(const PowerDiagram &diagram,
                                           std::span<const double> targets,
                                           const VolumeSolveOptions &opts = {});

enum class SiteUpdate { kLloyd, kGradientDescent };

struct VcpdOptions {
  int max_outer_iterations = 500;
  SiteUpdate update = SiteUpdate::kLloyd;
  double descent_step = 0.5;  // fraction of the way to the centroid
  // When set, run exactly this many site updates instead of testing the
  // gradient threshold. Used to replay a solve under perturbed targets.
  std::optional<int> fixed_steps;
  // Multiplies the default threshold.
  double threshold_scale = 1.0;
  VolumeSolveOptions volume;
};

struct VcpdResult {
  PowerDiagram diagram;
  bool converged = false;
  int site_updates = 0;
  double gradient_norm = 0.0;
  double threshold = 0.0;
  double max_volume_error = 0.0;
};

/// Centroidal volume-constrained power diagram: alternate the volume solve
/// and a site update until the site gradient drops below the threshold.
/// Hitting the cap returns the best diagram seen with converged = false.
VcpdResult solve_centroidal_vcpd(const Polygon &domain,
                                 std::span<const double> targets,
                                 std::span<const Point2> initial_sites,
                                 std::span<const double> initial_weights = {},
                                 const VcpdOptions &opts = {});

/// Rejection sampling of n distinct sites inside the domain.
std::vector<Point2> random_sites(const Polygon &domain, std::size_t n,
                                 std::uint64_t seed);

/// V_i = phi_i / sum(phi) * V_total. Throws InvalidInput if any phi_i <= 0.
std::vector<double> relative_to_physical_volumes(std::span<const double> phi,
                                                 double total);

/// Clamp each volume into [v_min, v_max] and rescale the unclamped ones so the
/// sum stays `total`. Throws InvalidInput when the bounds are infeasible.
std::vector<double> clamp_volumes(std::span<const double> volumes, double v_min,
                                  double v_max, double total);

}  // namespace morph
