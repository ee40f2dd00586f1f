#include "stefan/noise.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/normal.hpp>

#include "stefan/simd/kernels.hpp"

namespace stefan {

std::string_view to_string(NoiseMode mode) {
  return mode == NoiseMode::zero ? "zero" : "multiplicative_zeta";
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "zero") return NoiseMode::zero;
  if (name == "multiplicative_zeta") return NoiseMode::multiplicative_zeta;
  throw std::invalid_argument("unknown noise mode '" + std::string(name) + "'");
}

QWienerModel::QWienerModel(GdPtr gd, std::vector<double> sqrt_eigenvalues, std::vector<Vector> basis)
    : gd_(std::move(gd)), sqrt_q_(std::move(sqrt_eigenvalues)), basis_(std::move(basis)) {
  if (!gd_) throw std::invalid_argument("QWienerModel: null discretisation");
  if (sqrt_q_.size() != basis_.size()) throw std::invalid_argument("QWienerModel: one eigenvalue per mode");
  for (std::size_t k = 0; k < sqrt_q_.size(); ++k) {
    if (!(sqrt_q_[k] > 0.0)) throw std::invalid_argument("QWienerModel: eigenvalues must be positive");
    if (k > 0 && !(sqrt_q_[k] < sqrt_q_[k - 1]))
      throw std::invalid_argument("QWienerModel: eigenvalues must be strictly decreasing");
    if (basis_[k].size() != static_cast<Eigen::Index>(gd_->num_dofs()))
      throw std::invalid_argument("QWienerModel: basis field size mismatch");
  }
}

QWienerModel QWienerModel::laplace_modes(GdPtr gd, std::size_t rank, double decay_exponent) {
  if (rank == 0) throw std::invalid_argument("laplace_modes: rank must be positive");
  if (!(decay_exponent > 1.0)) throw std::invalid_argument("laplace_modes: decay exponent must exceed 1");
  std::vector<std::pair<int, int>> modes;
  const int n = static_cast<int>(rank) + 1;
  for (int m = 1; m <= n; ++m)
    for (int l = 1; l <= n; ++l) modes.emplace_back(m, l);
  std::stable_sort(modes.begin(), modes.end(), [](auto a, auto b) {
    const int ka = a.first * a.first + a.second * a.second;
    const int kb = b.first * b.first + b.second * b.second;
    return ka != kb ? ka < kb : a.first < b.first;
  });
  const double pi = boost::math::constants::pi<double>();
  const Mesh& mesh = gd->mesh();
  std::vector<double> sqrt_q(rank);
  std::vector<Vector> basis(rank, Vector(static_cast<Eigen::Index>(mesh.num_vertices())));
  for (std::size_t k = 0; k < rank; ++k) {
    sqrt_q[k] = std::pow(static_cast<double>(k + 1), -0.5 * decay_exponent);
    const auto [m, l] = modes[k];
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
      const auto& p = mesh.vertex(i);
      basis[k][static_cast<Eigen::Index>(i)] = 2.0 * std::sin(m * pi * p.x) * std::sin(l * pi * p.y);
    }
  }
  return QWienerModel(std::move(gd), std::move(sqrt_q), std::move(basis));
}

double QWienerModel::trace() const {
  double t = 0.0;
  for (double s : sqrt_q_) t += s * s;
  return t;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double standard_normal(std::uint64_t seed, std::uint64_t realisation, std::uint64_t step, std::uint64_t k) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ realisation);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ k);
  // 53 random bits, centred in their cell so the uniform lies in (0, 1).
  const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, u);
}

WienerIncrement sample_increment(const QWienerModel& model, std::uint64_t seed, std::uint64_t realisation,
                                 std::uint64_t step, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be positive");
  WienerIncrement inc;
  inc.realisation = realisation;
  inc.step_index = step;
  inc.coefficients.resize(model.rank());
  const double sdt = std::sqrt(dt);
  for (std::size_t k = 0; k < model.rank(); ++k)
    inc.coefficients[k] = model.sqrt_eigenvalues()[k] * sdt * standard_normal(seed, realisation, step, k);
  return inc;
}

void apply_noise(const NoiseOperator& op, const QWienerModel& model, const Vector& zeta_values,
                 const WienerIncrement& inc, Vector& out) {
  const auto n = static_cast<Eigen::Index>(model.gd_ptr()->num_dofs());
  if (zeta_values.size() != n) throw std::invalid_argument("apply_noise: field size mismatch");
  if (inc.coefficients.size() != model.rank()) throw std::invalid_argument("apply_noise: increment rank mismatch");
  out.setZero(n);
  if (op.vanishes()) return;
  Vector sum = Vector::Zero(n);
  for (std::size_t k = 0; k < model.rank(); ++k)
    simd::axpy(inc.coefficients[k], {model.basis(k).data(), static_cast<std::size_t>(n)},
               {sum.data(), static_cast<std::size_t>(n)});
  simd::scaled_product(op.intensity, {zeta_values.data(), static_cast<std::size_t>(n)},
                       {sum.data(), static_cast<std::size_t>(n)}, {out.data(), static_cast<std::size_t>(n)});
}

DiscreteField apply_noise(const NoiseOperator& op, const QWienerModel& model, const Nonlinearity& zeta,
                          const DiscreteField& v, const WienerIncrement& inc) {
  if (v.gd_ptr() != model.gd_ptr()) throw std::invalid_argument("apply_noise: field bound to another discretisation");
  Vector z(static_cast<Eigen::Index>(v.size()));
  zeta.eval({v.values().data(), v.size()}, {z.data(), v.size()});
  Vector out;
  apply_noise(op, model, z, inc, out);
  return DiscreteField(v.gd_ptr(), std::move(out));
}

Vector mc_expectation(std::span<const Vector> fields) {
  if (fields.empty()) throw std::invalid_argument("mc_expectation: empty list");
  Vector mean = fields.front();
  for (std::size_t r = 1; r < fields.size(); ++r) {
    if (fields[r].size() != mean.size()) throw std::invalid_argument("mc_expectation: size mismatch");
    mean += (fields[r] - mean) / static_cast<double>(r + 1);
  }
  return mean;
}

DiscreteField mc_expectation(std::span<const DiscreteField> fields) {
  if (fields.empty()) throw std::invalid_argument("mc_expectation: empty list");
  std::vector<Vector> values;
  values.reserve(fields.size());
  for (const auto& f : fields) {
    if (f.gd_ptr() != fields.front().gd_ptr())
      throw std::invalid_argument("mc_expectation: fields bound to different discretisations");
    values.push_back(f.values());
  }
  return DiscreteField(fields.front().gd_ptr(), mc_expectation(std::span<const Vector>(values)));
}

void write_vertex_csv(std::ostream& os, const Vector& field) {
  os << "vertex_index,value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < field.size(); ++i) os << i << ',' << field[i] << '\n';
}

}  // namespace stefan
