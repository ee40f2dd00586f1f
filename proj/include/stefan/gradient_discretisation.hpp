// Mass-lumped P1 gradient discretisation on a triangulation of the unit square.
//
// Pi_D v = sum_i v_i 1_{Theta_i} with |Theta_i| one third of the area of the
// triangles around vertex i, grad_D v is the P1 gradient. Dirichlet vertices
// are eliminated; the remaining vertices are the free degrees of freedom.

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "stefan/mesh.hpp"

namespace stefan {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class GradientDiscretisation {
 public:
  GradientDiscretisation(std::shared_ptr<const Mesh> mesh, std::vector<int> dirichlet);
  GradientDiscretisation(const GradientDiscretisation&) = delete;
  GradientDiscretisation& operator=(const GradientDiscretisation&) = delete;

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  std::size_t num_dofs() const { return mesh_->num_vertices(); }

  const Vector& lumped_mass() const { return mass_; }
  const Vector& inverse_mass() const { return inv_mass_; }
  /// Full P1 stiffness over all vertices.
  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Stiffness restricted to free rows and columns.
  const SparseMatrix& stiffness_free() const { return stiffness_ff_; }
  const Vector& lumped_mass_free() const { return mass_ff_; }

  /// Gradients of the three barycentric basis functions of each triangle.
  const std::vector<std::array<Eigen::Vector2d, 3>>& cell_gradients() const { return grads_; }
  const std::vector<double>& cell_areas() const { return areas_; }

  const std::vector<int>& free_dofs() const { return free_; }
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_; }
  bool is_dirichlet(std::size_t i) const { return free_index_[i] < 0; }
  /// Position of vertex i among free dofs, -1 for Dirichlet vertices.
  int free_index(std::size_t i) const { return free_index_[i]; }
  /// 1 on free vertices, 0 on Dirichlet vertices.
  const Vector& free_mask() const { return free_mask_; }
  /// 1/m_i on free vertices, 0 on Dirichlet vertices.
  const Vector& free_inverse_mass() const { return free_inv_mass_; }

  Vector restrict_free(const Vector& full) const;
  /// Writes free values into `full`, leaving Dirichlet entries untouched.
  void scatter_free(const Vector& free, Vector& full) const;

  /// Cholesky factor of the free stiffness block, built on first use.
  const Eigen::SimplicialLLT<SparseMatrix>& stiffness_free_factor() const;

  /// Discrete Poincare constant C_D = max ||Pi_D v|| / ||grad_D v|| over free
  /// fields, estimated on first use by power iteration.
  double poincare_constant() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  Vector mass_, inv_mass_, mass_ff_, free_mask_, free_inv_mass_;
  SparseMatrix stiffness_, stiffness_ff_;
  std::vector<std::array<Eigen::Vector2d, 3>> grads_;
  std::vector<double> areas_;
  std::vector<int> free_, dirichlet_, free_index_;

  mutable std::once_flag factor_once_, poincare_once_;
  mutable std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> factor_;
  mutable double poincare_ = 0.0;
};

using GdPtr = std::shared_ptr<const GradientDiscretisation>;

/// Throws std::invalid_argument for a degenerate or clockwise triangle or a
/// Dirichlet index that is not a boundary vertex.
GdPtr build_gd(std::shared_ptr<const Mesh> mesh, std::vector<int> dirichlet);
/// All boundary vertices Dirichlet.
GdPtr build_gd(std::shared_ptr<const Mesh> mesh);

/// One value per vertex, bound to a discretisation.
class DiscreteField {
 public:
  explicit DiscreteField(GdPtr gd);
  DiscreteField(GdPtr gd, Vector values);

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  const GradientDiscretisation& gd() const { return *gd_; }
  const GdPtr& gd_ptr() const { return gd_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  GdPtr gd_;
  Vector values_;
};

/// Vertex sampling of a pointwise function.
DiscreteField interpolate(const GdPtr& gd, const std::function<double(double, double)>& f);

/// ||Pi_D v|| with the lumped mass.
double l2_norm(const GradientDiscretisation& gd, const Vector& v);
double l2_norm(const DiscreteField& v);
/// ||grad_D v||.
double h1_seminorm(const GradientDiscretisation& gd, const Vector& v);
double h1_seminorm(const DiscreteField& v);

/// sup { int v Pi_D w : w free, ||grad_D w|| = 1 }, via the discrete Poisson
/// problem <grad G, grad psi> = <Pi v, Pi psi>. `v` must vanish on Dirichlet
/// vertices.
double dual_norm(const GradientDiscretisation& gd, const Vector& v);
double dual_norm(const DiscreteField& v);
/// The Poisson solution G on all vertices (zero on Dirichlet vertices).
Vector dual_norm_representer(const GradientDiscretisation& gd, const Vector& v);

/// Power iteration for the largest generalised eigenvalue of (M, K) on free
/// dofs; returns its square root.
double estimate_poincare_constant(const GradientDiscretisation& gd, double rel_tol = 1e-8,
                                  std::size_t max_iterations = 10000);

/// sqrt((L + dt/C_D^2) ||Pi_D v||^2 + dt ||grad_D v||^2)
double x_norm_from_parts(double l2, double grad, double L, double dt, double poincare);
double x_norm(const GradientDiscretisation& gd, const Vector& v, double L, double dt);
double x_norm(const DiscreteField& v, double L, double dt);

}  // namespace stefan
