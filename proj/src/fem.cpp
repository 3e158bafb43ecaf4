#include "morph/fem.hpp"

#include <cmath>
#include <string>

#include "morph/errors.hpp"

namespace morph {

void validate(const MaterialParams &m) {
  if (!(m.e_min > 0.0) || !(m.e_max > m.e_min)) {
    throw InvalidInput("material requires e_max > e_min > 0");
  }
  if (!(m.nu > 0.0 && m.nu < 0.5)) throw InvalidInput("Poisson ratio must be in (0, 0.5)");
  if (!(m.rho_floor > 0.0 && m.rho_floor < 1.0)) {
    throw InvalidInput("rho_floor must be in (0, 1)");
  }
  if (!(m.penalty >= 1.0)) throw InvalidInput("SIMP penalty must be >= 1");
  if (!(m.thickness > 0.0)) throw InvalidInput("thickness must be positive");
}

namespace {

void check_bounds(double rho, double eta, const MaterialParams &m) {
  // A little slack so that rho_floor itself round-trips.
  if (!(rho >= m.rho_floor * (1.0 - 1e-12) && rho <= 1.0)) {
    throw InvalidInput("density " + std::to_string(rho) + " outside [rho_floor, 1]");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw InvalidInput("thermal state " + std::to_string(eta) + " outside [0, 1]");
  }
}

}  // namespace

double interpolate_modulus(double rho, double eta, const MaterialParams &m) {
  check_bounds(rho, eta, m);
  const double ep = std::pow(eta, m.penalty);
  return std::pow(rho, m.penalty) * ((1.0 - ep) * m.e_max + ep * m.e_min);
}

ModulusGradient modulus_gradient(double rho, double eta, const MaterialParams &m) {
  check_bounds(rho, eta, m);
  const double p = m.penalty;
  const double ep = std::pow(eta, p);
  const double mix = (1.0 - ep) * m.e_max + ep * m.e_min;
  ModulusGradient g;
  g.d_rho = p * std::pow(rho, p - 1.0) * mix;
  g.d_eta = std::pow(rho, p) * p * std::pow(eta, p - 1.0) * (m.e_min - m.e_max);
  return g;
}

ElasticModel::ElasticModel(const FeMesh &mesh, const MaterialParams &material)
    : mesh_(&mesh) {
  validate(material);
  const double nu = material.nu;
  if (material.plane_strain) {
    const double s = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
    unit_d_ << s * (1.0 - nu), s * nu, 0.0,
               s * nu, s * (1.0 - nu), 0.0,
               0.0, 0.0, s * (1.0 - 2.0 * nu) / 2.0;
  } else {
    const double s = 1.0 / (1.0 - nu * nu);
    unit_d_ << s, s * nu, 0.0,
               s * nu, s, 0.0,
               0.0, 0.0, s * (1.0 - nu) / 2.0;
  }
  unit_.resize(mesh.triangles.size());
  strain_.resize(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto &tri = mesh.triangles[t];
    const Point2 p1 = mesh.vertices[tri[0]];
    const Point2 p2 = mesh.vertices[tri[1]];
    const Point2 p3 = mesh.vertices[tri[2]];
    const double area = 0.5 * cross(p2 - p1, p3 - p1);
    if (!(area > 0.0)) {
      throw AssemblyError("triangle " + std::to_string(t) +
                          " is inverted or degenerate (area " +
                          std::to_string(area) + ")");
    }
    const double b1 = p2.y - p3.y, b2 = p3.y - p1.y, b3 = p1.y - p2.y;
    const double c1 = p3.x - p2.x, c2 = p1.x - p3.x, c3 = p2.x - p1.x;
    Eigen::Matrix<double, 3, 6> b;
    b << b1, 0, b2, 0, b3, 0,
         0, c1, 0, c2, 0, c3,
         c1, b1, c2, b2, c3, b3;
    b /= 2.0 * area;
    strain_[t] = b;
    unit_[t] = material.thickness * area * b.transpose() * unit_d_ * b;
  }
}

SparseMatrix ElasticModel::assemble(std::span<const double> cell_modulus) const {
  const auto &mesh = *mesh_;
  if (cell_modulus.size() != mesh.num_cells()) {
    throw AssemblyError("expected one modulus per cell");
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double e = cell_modulus[mesh.tri_cell[t]];
    const auto &tri = mesh.triangles[t];
    for (int a = 0; a < 6; ++a) {
      const int ga = 2 * tri[a / 2] + a % 2;
      for (int b = 0; b < 6; ++b) {
        const int gb = 2 * tri[b / 2] + b % 2;
        trip.emplace_back(ga, gb, e * unit_[t](a, b));
      }
    }
  }
  SparseMatrix k(num_dofs(), num_dofs());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

namespace {

Eigen::Matrix<double, 6, 1> gather(const Eigen::VectorXd &u, const std::array<int, 3> &tri) {
  Eigen::Matrix<double, 6, 1> ue;
  for (int a = 0; a < 3; ++a) {
    ue[2 * a] = u[2 * tri[a]];
    ue[2 * a + 1] = u[2 * tri[a] + 1];
  }
  return ue;
}

}  // namespace

std::vector<double> ElasticModel::cell_products(const Eigen::VectorXd &a,
                                                const Eigen::VectorXd &b) const {
  const auto &mesh = *mesh_;
  std::vector<double> out(mesh.num_cells(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto ae = gather(a, mesh.triangles[t]);
    const auto be = gather(b, mesh.triangles[t]);
    out[mesh.tri_cell[t]] += ae.dot(unit_[t] * be);
  }
  return out;
}

Eigen::Vector3d ElasticModel::stress(std::size_t t, const Eigen::VectorXd &u,
                                     double modulus) const {
  return modulus * unit_d_ * strain_[t] * gather(u, mesh_->triangles[t]);
}

double ElasticModel::strain_energy(const Eigen::VectorXd &u,
                                   std::span<const double> cell_modulus) const {
  const auto prod = cell_products(u, u);
  double e = 0.0;
  for (std::size_t c = 0; c < prod.size(); ++c) e += cell_modulus[c] * prod[c];
  return 0.5 * e;
}

ConstrainedSolver::ConstrainedSolver(SparseMatrix k, std::vector<int> dirichlet_dofs)
    : k_(std::move(k)) {
  const int n = static_cast<int>(k_.rows());
  std::vector<char> is_dirichlet(n, 0);
  for (int d : dirichlet_dofs) is_dirichlet.at(d) = 1;
  position_.assign(n, -1);
  std::vector<int> dpos(n, -1);
  int nd = 0;
  for (int i = 0; i < n; ++i) {
    if (is_dirichlet[i]) {
      dpos[i] = nd++;
    } else {
      position_[i] = static_cast<int>(free_.size());
      free_.push_back(i);
    }
  }
  const int nf = static_cast<int>(free_.size());
  std::vector<Eigen::Triplet<double>> ff, fd;
  for (int col = 0; col < k_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(k_, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (position_[r] < 0) continue;
      if (position_[c] >= 0) {
        ff.emplace_back(position_[r], position_[c], it.value());
      } else {
        fd.emplace_back(position_[r], dpos[c], it.value());
      }
    }
  }
  k_ff_.resize(nf, nf);
  k_ff_.setFromTriplets(ff.begin(), ff.end());
  k_fd_.resize(nf, nd);
  k_fd_.setFromTriplets(fd.begin(), fd.end());
  if (nf == 0) return;
  ldlt_.compute(k_ff_);
  if (ldlt_.info() != Eigen::Success) {
    throw SolverError("factorization of the constrained stiffness failed");
  }
  const Eigen::VectorXd diag = ldlt_.vectorD();
  const double dmax = diag.cwiseAbs().maxCoeff();
  const double dmin = diag.minCoeff();
  if (!(dmin > 1e-14 * dmax)) {
    throw SolverError("constrained stiffness is singular or indefinite (pivot ratio " +
                      std::to_string(dmin / dmax) +
                      "); a region is likely disconnected from the supports");
  }
}

StateSolution ConstrainedSolver::solve(const Eigen::VectorXd &f,
                                       const Eigen::VectorXd &prescribed) const {
  const int n = static_cast<int>(k_.rows());
  const int nf = static_cast<int>(free_.size());
  Eigen::VectorXd ud(k_fd_.cols());
  for (int i = 0, d = 0; i < n; ++i) {
    if (position_[i] < 0) ud[d++] = prescribed[i];
  }
  Eigen::VectorXd rhs(nf);
  for (int q = 0; q < nf; ++q) rhs[q] = f[free_[q]];
  rhs -= k_fd_ * ud;
  StateSolution s;
  s.u = prescribed;
  if (nf > 0) {
    const Eigen::VectorXd uf = ldlt_.solve(rhs);
    for (int q = 0; q < nf; ++q) s.u[free_[q]] = uf[q];
  }
  s.reactions = k_ * s.u - f;
  for (int q = 0; q < nf; ++q) s.reactions[free_[q]] = 0.0;
  return s;
}

Eigen::VectorXd ConstrainedSolver::solve_homogeneous(const Eigen::VectorXd &rhs) const {
  const int nf = static_cast<int>(free_.size());
  Eigen::VectorXd r(nf);
  for (int q = 0; q < nf; ++q) r[q] = rhs[free_[q]];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k_.rows());
  if (nf == 0) return out;
  const Eigen::VectorXd x = ldlt_.solve(r);
  for (int q = 0; q < nf; ++q) out[free_[q]] = x[q];
  return out;
}

DirichletData dirichlet_conditions(const FeMesh &mesh, const BoundarySpec &bc,
                                   LoadCase load_case) {
  const std::size_t nv = mesh.vertices.size();
  DirichletData d;
  d.values = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(nv));
  for (std::size_t v = 0; v < nv; ++v) {
    const bool fixed = mesh.fixed.size() == nv && mesh.fixed[v];
    const bool actuated = mesh.actuated.size() == nv && mesh.actuated[v];
    if (!fixed && !actuated) continue;
    const int dx = 2 * static_cast<int>(v);
    d.dofs.push_back(dx);
    d.dofs.push_back(dx + 1);
    if (!fixed && load_case == LoadCase::kActuation) {
      d.values[dx] = bc.u_actuation.x;
      d.values[dx + 1] = bc.u_actuation.y;
    }
  }
  return d;
}

Vec2 connectivity_load(Vec2 u_target) {
  const double len = norm(u_target);
  if (!(len > 0.0)) {
    throw InvalidInput("connectivity load needs a nonzero target displacement");
  }
  return {-u_target.x / len, -u_target.y / len};
}

std::vector<Vec2> build_connectivity_loads(std::span<const Vec2> u_targets) {
  std::vector<Vec2> f;
  f.reserve(u_targets.size());
  for (const Vec2 &u : u_targets) f.push_back(connectivity_load(u));
  return f;
}

Eigen::VectorXd connectivity_load_vector(const FeMesh &mesh, const BoundarySpec &bc,
                                         std::size_t state) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.vertices.size()));
  const auto &targets = bc.states.at(state).targets;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (norm(targets[t].u_target) == 0.0) continue;
    const Vec2 load = connectivity_load(targets[t].u_target);
    const int v = mesh.target_nodes.at(state).at(t);
    f[2 * v] += load.x;
    f[2 * v + 1] += load.y;
  }
  return f;
}

StateSolution solve_state(const SparseMatrix &k, const FeMesh &mesh,
                          const BoundarySpec &bc, LoadCase load_case,
                          std::size_t state) {
  DirichletData d = dirichlet_conditions(mesh, bc, load_case);
  const ConstrainedSolver solver(k, d.dofs);
  const Eigen::VectorXd f = load_case == LoadCase::kConnectivity
                                ? connectivity_load_vector(mesh, bc, state)
                                : Eigen::VectorXd::Zero(k.rows());
  return solver.solve(f, d.values);
}

void target_dofs(const FeMesh &mesh, const BoundarySpec &bc, std::size_t state,
                 std::vector<int> &dofs, std::vector<double> &values) {
  dofs.clear();
  values.clear();
  const auto &targets = bc.states.at(state).targets;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const int v = mesh.target_nodes.at(state).at(t);
    dofs.push_back(2 * v);
    dofs.push_back(2 * v + 1);
    values.push_back(targets[t].u_target.x);
    values.push_back(targets[t].u_target.y);
  }
}

double pose_error(const Eigen::VectorXd &u, std::span<const int> target_dofs,
                  std::span<const double> target_values) {
  if (target_dofs.empty()) throw InvalidInput("pose error needs at least one target dof");
  if (target_dofs.size() != target_values.size()) {
    throw InvalidInput("target dofs/values size mismatch");
  }
  double s = 0.0;
  for (std::size_t q = 0; q < target_dofs.size(); ++q) {
    const double r = target_values[q] - u[target_dofs[q]];
    s += r * r;
  }
  return std::sqrt(s);
}

double pose_error(const Eigen::VectorXd &u, const FeMesh &mesh, const BoundarySpec &bc,
                  std::size_t state) {
  std::vector<int> dofs;
  std::vector<double> values;
  target_dofs(mesh, bc, state, dofs, values);
  return pose_error(u, dofs, values);
}

double compliance(const Eigen::VectorXd &u_c, const Eigen::VectorXd &f_c) {
  return f_c.dot(u_c);
}

}  // namespace morph
