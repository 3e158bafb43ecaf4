#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "morph/optimize.hpp"

namespace morph {

/// printf "%.9g".
std::string format_g9(double v);

struct SvgStyle {
  double display_scale = 1.0;  // multiplies the displacement field
  bool outline_cells = true;
  bool show_sites = false;
  double rho_floor = 0.001;
};

/// Cells filled white (void) to blue (solid) by rho, cells with eta > 0.5
/// hatched orange, drawn on the mesh moved by display_scale * u when `u` is
/// given. Empty rho draws every cell solid; empty eta draws none heated.
std::string design_svg(const PowerDiagram &diagram, const FeMesh &mesh,
                       std::span<const double> rho, std::span<const double> eta,
                       const Eigen::VectorXd *u, const SvgStyle &style = {});

/// Cell outlines and sites of a diagram.
std::string diagram_svg(const PowerDiagram &diagram);

/// One row per target of state j: name,x,y,uT_x,uT_y,usim_x,usim_y.
void write_state_csv(std::ostream &os, const ProblemSpec &problem, const FeMesh &mesh,
                     std::size_t state, const Eigen::VectorXd &u);

/// iteration,phase,F,J_1..J_k,C_1..C_k,R,grad_inf.
void write_convergence_csv(std::ostream &os, std::span<const ConvergenceRow> rows,
                           std::size_t states);

// Everything a later forward solve needs: the problem, the design and the
// diagram it lives on.
struct DesignRecord {
  ProblemSpec problem;
  DesignVariables design;
  std::vector<Point2> sites;
  std::vector<double> weights;
  std::optional<ThresholdChoice> thresholds;
  double r_max = 0.0;
  bool converged = false;

  friend bool operator==(const DesignRecord &, const DesignRecord &) = default;
};

DesignRecord make_design_record(const ProblemSpec &problem, const OptimizationResult &r);
nlohmann::json design_to_json(const DesignRecord &rec);
/// Throws ValidationError with a JSON pointer on malformed input.
DesignRecord design_from_json(const nlohmann::json &doc);
DesignRecord load_design_file(const std::filesystem::path &path);

/// Rebuilds the stored diagram and its mesh.
std::shared_ptr<const Discretization> rebuild_discretization(const DesignRecord &rec);

// Files written to a staging directory and moved into place on commit, so a
// failed run leaves nothing behind.
class StagedOutput {
 public:
  /// Throws Error when the staging directory cannot be created.
  explicit StagedOutput(std::filesystem::path target);
  ~StagedOutput();
  StagedOutput(const StagedOutput &) = delete;
  StagedOutput &operator=(const StagedOutput &) = delete;

  /// Writes `contents` to `relative` under the staging directory.
  void write(const std::filesystem::path &relative, const std::string &contents);
  /// Moves every staged file into the target directory.
  void commit();

  const std::filesystem::path &target() const { return target_; }

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

}  // namespace morph
