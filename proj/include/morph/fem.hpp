#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "morph/boundary.hpp"
#include "morph/fe_mesh.hpp"

namespace morph {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Moduli in MPa. eta = 0 is room temperature (stiff, e_max); eta = 1 is
// heated above the glass transition (soft, e_min).
struct MaterialParams {
  double e_max = 120.0;
  double e_min = 2.9;
  double nu = 0.35;
  double rho_floor = 0.001;
  double penalty = 3.0;
  bool plane_strain = false;
  double thickness = 1.0;  // mm

  friend bool operator==(const MaterialParams &, const MaterialParams &) = default;
};

/// Throws InvalidInput unless e_max > e_min > 0, 0 < nu < 0.5,
/// 0 < rho_floor < 1 and penalty >= 1.
void validate(const MaterialParams &m);

/// E = rho^p [(1 - eta^p) e_max + eta^p e_min].
double interpolate_modulus(double rho, double eta, const MaterialParams &m);

struct ModulusGradient {
  double d_rho = 0.0;
  double d_eta = 0.0;
};
ModulusGradient modulus_gradient(double rho, double eta, const MaterialParams &m);

// Unit-modulus constant-strain triangle matrices for a fixed mesh; assembling
// K for a design only rescales them by the cell modulus.
class ElasticModel {
 public:
  ElasticModel(const FeMesh &mesh, const MaterialParams &material);

  int num_dofs() const { return 2 * static_cast<int>(mesh_->vertices.size()); }
  const FeMesh &mesh() const { return *mesh_; }
  const Matrix6d &unit_element(std::size_t t) const { return unit_[t]; }

  /// Global stiffness for one modulus per cell. Throws AssemblyError for an
  /// inverted triangle.
  SparseMatrix assemble(std::span<const double> cell_modulus) const;

  /// Per cell: sum over its triangles of a_e^T K0_e b_e.
  std::vector<double> cell_products(const Eigen::VectorXd &a,
                                    const Eigen::VectorXd &b) const;

  /// Element stress (sxx, syy, sxy) for displacement u and modulus E.
  Eigen::Vector3d stress(std::size_t t, const Eigen::VectorXd &u, double modulus) const;

  /// Strain energy 1/2 u^T K u.
  double strain_energy(const Eigen::VectorXd &u, std::span<const double> cell_modulus) const;

 private:
  const FeMesh *mesh_;
  Eigen::Matrix3d unit_d_;
  std::vector<Matrix6d> unit_;
  std::vector<Eigen::Matrix<double, 3, 6>> strain_;
};

struct StateSolution {
  Eigen::VectorXd u;          // mm
  Eigen::VectorXd reactions;  // N, nonzero only on Dirichlet dofs
  std::vector<double> eta;
};

// Partitioned solve: Dirichlet dofs are eliminated, the free block is
// factorized once and reused for any number of right-hand sides.
class ConstrainedSolver {
 public:
  ConstrainedSolver(SparseMatrix k, std::vector<int> dirichlet_dofs);

  /// `prescribed` carries the Dirichlet values (other entries ignored).
  StateSolution solve(const Eigen::VectorXd &f, const Eigen::VectorXd &prescribed) const;

  /// Solves K_FF x = rhs_F; returns a full-length vector, zero on Dirichlet dofs.
  Eigen::VectorXd solve_homogeneous(const Eigen::VectorXd &rhs) const;

  const SparseMatrix &stiffness() const { return k_; }

 private:
  SparseMatrix k_;
  std::vector<int> free_;
  std::vector<int> position_;  // dof -> free index or -1
  SparseMatrix k_ff_;
  SparseMatrix k_fd_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

enum class LoadCase { kActuation, kConnectivity };

struct DirichletData {
  std::vector<int> dofs;
  Eigen::VectorXd values;  // full length
};

/// Actuation: zero on fixed nodes, u_actuation on actuated nodes.
/// Connectivity: zero on both.
DirichletData dirichlet_conditions(const FeMesh &mesh, const BoundarySpec &bc,
                                   LoadCase load_case);

/// Unit loads opposing each target displacement: -u_T / |u_T|.
/// Throws InvalidInput for a zero target vector.
Vec2 connectivity_load(Vec2 u_target);
std::vector<Vec2> build_connectivity_loads(std::span<const Vec2> u_targets);

/// Nodal load vector of state j's connectivity case. Targets with zero
/// displacement carry no load.
Eigen::VectorXd connectivity_load_vector(const FeMesh &mesh, const BoundarySpec &bc,
                                         std::size_t state);

StateSolution solve_state(const SparseMatrix &k, const FeMesh &mesh,
                          const BoundarySpec &bc, LoadCase load_case,
                          std::size_t state = 0);

/// || L_u (u_T - u) || over the listed dofs.
double pose_error(const Eigen::VectorXd &u, std::span<const int> target_dofs,
                  std::span<const double> target_values);
double pose_error(const Eigen::VectorXd &u, const FeMesh &mesh, const BoundarySpec &bc,
                  std::size_t state);

/// Target dofs and values of state j, in target order (x then y).
void target_dofs(const FeMesh &mesh, const BoundarySpec &bc, std::size_t state,
                 std::vector<int> &dofs, std::vector<double> &values);

/// C = f_c^T u_c.
double compliance(const Eigen::VectorXd &u_c, const Eigen::VectorXd &f_c);

}  // namespace morph
