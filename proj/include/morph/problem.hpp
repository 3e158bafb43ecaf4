#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morph/boundary.hpp"
#include "morph/fem.hpp"
#include "morph/geom.hpp"

namespace morph {

struct MeshConfig {
  int cells = 40;
  std::optional<double> v_min;  // mm^2, default 0.25 * area / n
  std::optional<double> v_max;  // mm^2, default 4 * area / n
  friend bool operator==(const MeshConfig &, const MeshConfig &) = default;
};

struct OptimizerConfig {
  double alpha = 1.0;
  std::uint64_t seed = 1;
  int max_iter_phase1 = 300;
  int max_iter_phase2 = 300;
  double beta_rmax = 1.0;
  friend bool operator==(const OptimizerConfig &, const OptimizerConfig &) = default;
};

struct ProblemSpec {
  std::string name;
  Polygon domain;  // mm, counter-clockwise
  BoundarySpec boundary;
  std::string material_name;  // empty for an explicit material
  MaterialParams material;
  MeshConfig mesh;
  OptimizerConfig optimizer;

  std::size_t num_states() const { return boundary.states.size(); }
  double u_in() const { return norm(boundary.u_actuation); }
  double area() const { return polygon_area(domain); }
  double v_min() const;
  double v_max() const;

  friend bool operator==(const ProblemSpec &, const ProblemSpec &) = default;
};

/// Parse and validate a problem document (JSON). Orientation is normalized to
/// counter-clockwise, boundary points are snapped onto the domain outline and
/// inserted as outline vertices. Throws ValidationError with a JSON pointer to
/// the offending field.
ProblemSpec load_problem(std::string_view text);
ProblemSpec load_problem_file(const std::filesystem::path &path);

/// Normalize and validate an in-memory spec the same way load_problem does.
ProblemSpec normalize_problem(ProblemSpec spec);

nlohmann::json problem_to_json(const ProblemSpec &spec);
ProblemSpec problem_from_json(const nlohmann::json &doc);

/// Dithered-material table: "AG50", "VW", "AG". Throws LookupError listing
/// the known keys.
MaterialParams builtin_material(std::string_view name);
std::vector<std::string> builtin_material_names();

std::vector<ProblemSpec> bundled_examples();
ProblemSpec bundled_example(std::string_view name);
std::vector<std::string> bundled_example_names();
/// Raw document text of a bundled example.
std::string bundled_example_source(std::string_view name);

}  // namespace morph
