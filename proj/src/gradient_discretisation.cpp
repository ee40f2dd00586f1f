#include "stefan/gradient_discretisation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stefan/simd/kernels.hpp"

namespace stefan {

GradientDiscretisation::GradientDiscretisation(std::shared_ptr<const Mesh> mesh, std::vector<int> dirichlet)
    : mesh_(std::move(mesh)), dirichlet_(std::move(dirichlet)) {
  if (!mesh_) throw std::invalid_argument("GradientDiscretisation: null mesh");
  const Mesh& m = *mesh_;
  const auto n = static_cast<Eigen::Index>(m.num_vertices());

  std::sort(dirichlet_.begin(), dirichlet_.end());
  dirichlet_.erase(std::unique(dirichlet_.begin(), dirichlet_.end()), dirichlet_.end());
  for (int d : dirichlet_) {
    if (d < 0 || d >= n) throw std::invalid_argument("GradientDiscretisation: Dirichlet index out of range");
    if (!m.is_boundary(static_cast<std::size_t>(d)))
      throw std::invalid_argument("GradientDiscretisation: Dirichlet index is not a boundary vertex");
  }
  free_index_.assign(static_cast<std::size_t>(n), 0);
  for (int d : dirichlet_) free_index_[static_cast<std::size_t>(d)] = -1;
  for (std::size_t i = 0; i < free_index_.size(); ++i) {
    if (free_index_[i] < 0) continue;
    free_index_[i] = static_cast<int>(free_.size());
    free_.push_back(static_cast<int>(i));
  }
  free_mask_ = Vector::Zero(n);
  for (int f : free_) free_mask_[f] = 1.0;

  mass_ = Vector::Zero(n);
  grads_.resize(m.num_cells());
  areas_.resize(m.num_cells());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * m.num_cells());
  for (std::size_t t = 0; t < m.num_cells(); ++t) {
    const double area = m.signed_area(t);
    if (!(area > 0.0)) throw std::invalid_argument("GradientDiscretisation: degenerate or clockwise triangle");
    areas_[t] = area;
    const auto& tri = m.triangles()[t];
    auto& g = grads_[t];
    for (int k = 0; k < 3; ++k) {
      // grad lambda_k: inward normal of the opposite edge over twice the area.
      const Point2& p = m.vertex(tri[(k + 1) % 3]);
      const Point2& q = m.vertex(tri[(k + 2) % 3]);
      g[k] = Eigen::Vector2d(p.y - q.y, q.x - p.x) / (2.0 * area);
    }
    for (int a = 0; a < 3; ++a) {
      mass_[tri[a]] += area / 3.0;
      for (int b = 0; b < 3; ++b) trips.emplace_back(tri[a], tri[b], area * g[a].dot(g[b]));
    }
  }
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(trips.begin(), trips.end());
  stiffness_.makeCompressed();
  inv_mass_ = mass_.cwiseInverse();
  free_inv_mass_ = inv_mass_.cwiseProduct(free_mask_);

  const auto nf = static_cast<Eigen::Index>(free_.size());
  mass_ff_.resize(nf);
  for (Eigen::Index i = 0; i < nf; ++i) mass_ff_[i] = mass_[free_[static_cast<std::size_t>(i)]];
  std::vector<Eigen::Triplet<double>> ff;
  ff.reserve(static_cast<std::size_t>(stiffness_.nonZeros()));
  for (Eigen::Index c = 0; c < stiffness_.outerSize(); ++c) {
    const int fc = free_index_[static_cast<std::size_t>(c)];
    if (fc < 0) continue;
    for (SparseMatrix::InnerIterator it(stiffness_, c); it; ++it) {
      const int fr = free_index_[static_cast<std::size_t>(it.row())];
      if (fr >= 0) ff.emplace_back(fr, fc, it.value());
    }
  }
  stiffness_ff_.resize(nf, nf);
  stiffness_ff_.setFromTriplets(ff.begin(), ff.end());
  stiffness_ff_.makeCompressed();
}

Vector GradientDiscretisation::restrict_free(const Vector& full) const {
  if (full.size() != static_cast<Eigen::Index>(num_dofs()))
    throw std::invalid_argument("restrict_free: size mismatch");
  Vector out(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t i = 0; i < free_.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[free_[i]];
  return out;
}

void GradientDiscretisation::scatter_free(const Vector& free, Vector& full) const {
  if (free.size() != static_cast<Eigen::Index>(free_.size()) ||
      full.size() != static_cast<Eigen::Index>(num_dofs()))
    throw std::invalid_argument("scatter_free: size mismatch");
  for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = free[static_cast<Eigen::Index>(i)];
}

const Eigen::SimplicialLLT<SparseMatrix>& GradientDiscretisation::stiffness_free_factor() const {
  std::call_once(factor_once_, [this] {
    auto f = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(stiffness_ff_);
    if (f->info() != Eigen::Success)
      throw std::runtime_error("stiffness_free_factor: free stiffness is not positive definite");
    factor_ = std::move(f);
  });
  return *factor_;
}

double GradientDiscretisation::poincare_constant() const {
  std::call_once(poincare_once_, [this] { poincare_ = estimate_poincare_constant(*this); });
  return poincare_;
}

GdPtr build_gd(std::shared_ptr<const Mesh> mesh, std::vector<int> dirichlet) {
  return std::make_shared<const GradientDiscretisation>(std::move(mesh), std::move(dirichlet));
}

GdPtr build_gd(std::shared_ptr<const Mesh> mesh) {
  if (!mesh) throw std::invalid_argument("build_gd: null mesh");
  auto d = mesh->boundary_vertices();
  return build_gd(std::move(mesh), std::move(d));
}

DiscreteField::DiscreteField(GdPtr gd) : gd_(std::move(gd)) {
  if (!gd_) throw std::invalid_argument("DiscreteField: null discretisation");
  values_ = Vector::Zero(static_cast<Eigen::Index>(gd_->num_dofs()));
}

DiscreteField::DiscreteField(GdPtr gd, Vector values) : gd_(std::move(gd)), values_(std::move(values)) {
  if (!gd_) throw std::invalid_argument("DiscreteField: null discretisation");
  if (values_.size() != static_cast<Eigen::Index>(gd_->num_dofs()))
    throw std::invalid_argument("DiscreteField: one value per vertex required");
}

DiscreteField interpolate(const GdPtr& gd, const std::function<double(double, double)>& f) {
  DiscreteField out(gd);
  const Mesh& m = gd->mesh();
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    out.values()[static_cast<Eigen::Index>(i)] = f(m.vertex(i).x, m.vertex(i).y);
  return out;
}

namespace {

void check_size(const GradientDiscretisation& gd, const Vector& v) {
  if (v.size() != static_cast<Eigen::Index>(gd.num_dofs()))
    throw std::invalid_argument("field size does not match the discretisation");
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

double l2_norm(const GradientDiscretisation& gd, const Vector& v) {
  check_size(gd, v);
  return std::sqrt(simd::weighted_sum_squares(as_span(gd.lumped_mass()), as_span(v)));
}

double l2_norm(const DiscreteField& v) { return l2_norm(v.gd(), v.values()); }

double h1_seminorm(const GradientDiscretisation& gd, const Vector& v) {
  check_size(gd, v);
  const Vector kv = gd.stiffness() * v;
  return std::sqrt(std::max(0.0, v.dot(kv)));
}

double h1_seminorm(const DiscreteField& v) { return h1_seminorm(v.gd(), v.values()); }

Vector dual_norm_representer(const GradientDiscretisation& gd, const Vector& v) {
  check_size(gd, v);
  const Vector b = gd.lumped_mass_free().cwiseProduct(gd.restrict_free(v));
  const Vector g = gd.stiffness_free_factor().solve(b);
  Vector full = Vector::Zero(v.size());
  gd.scatter_free(g, full);
  return full;
}

double dual_norm(const GradientDiscretisation& gd, const Vector& v) {
  check_size(gd, v);
  const Vector b = gd.lumped_mass_free().cwiseProduct(gd.restrict_free(v));
  const Vector g = gd.stiffness_free_factor().solve(b);
  return std::sqrt(std::max(0.0, g.dot(b)));
}

double dual_norm(const DiscreteField& v) { return dual_norm(v.gd(), v.values()); }

double estimate_poincare_constant(const GradientDiscretisation& gd, double rel_tol,
                                  std::size_t max_iterations) {
  const Vector& m = gd.lumped_mass_free();
  if (m.size() == 0) throw std::invalid_argument("estimate_poincare_constant: no free dofs");
  const auto& K = gd.stiffness_free_factor();
  Vector x = Vector::Ones(m.size());
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const Vector mx = m.cwiseProduct(x);
    Vector y = K.solve(mx);
    // Rayleigh quotient of the pencil (M, K) at y: y'My / y'Ky, with Ky = Mx.
    const double num = y.dot(m.cwiseProduct(y));
    const double den = y.dot(mx);
    const double next = num / den;
    x = y / std::sqrt(num);
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return std::sqrt(next);
    lambda = next;
  }
  return std::sqrt(lambda);
}

double x_norm_from_parts(double l2, double grad, double L, double dt, double poincare) {
  return std::sqrt((L + dt / (poincare * poincare)) * l2 * l2 + dt * grad * grad);
}

double x_norm(const GradientDiscretisation& gd, const Vector& v, double L, double dt) {
  return x_norm_from_parts(l2_norm(gd, v), h1_seminorm(gd, v), L, dt, gd.poincare_constant());
}

double x_norm(const DiscreteField& v, double L, double dt) { return x_norm(v.gd(), v.values(), L, dt); }

}  // namespace stefan
