#include "stefan/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace stefan {

PiecewiseLinear::PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> slopes)
    : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)) {
  if (breakpoints_.empty()) {
    if (slopes_.size() != 1) throw std::invalid_argument("PiecewiseLinear: linear function needs one slope");
    breakpoints_.push_back(0.0);
    slopes_.push_back(slopes_.front());
  }
  if (slopes_.size() != breakpoints_.size() + 1)
    throw std::invalid_argument("PiecewiseLinear: need one slope per piece");
  for (std::size_t k = 1; k < breakpoints_.size(); ++k)
    if (!(breakpoints_[k] > breakpoints_[k - 1]))
      throw std::invalid_argument("PiecewiseLinear: breakpoints must be strictly increasing");

  // Values at breakpoints from f(0) = 0, anchored in the piece containing 0.
  const std::size_t n = breakpoints_.size();
  values_.assign(n, 0.0);
  const std::size_t p0 = piece(0.0);
  const std::size_t a0 = p0 == 0 ? 0 : p0 - 1;
  values_[a0] = slopes_[p0] * breakpoints_[a0];
  for (std::size_t k = a0 + 1; k < n; ++k)
    values_[k] = values_[k - 1] + slopes_[k] * (breakpoints_[k] - breakpoints_[k - 1]);
  for (std::size_t k = a0; k-- > 0;)
    values_[k] = values_[k + 1] - slopes_[k + 1] * (breakpoints_[k + 1] - breakpoints_[k]);
}

std::size_t PiecewiseLinear::piece(double x) const {
  // upper_bound gives the first breakpoint > x, i.e. the count of breakpoints <= x.
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) -
                                  breakpoints_.begin());
}

double PiecewiseLinear::operator()(double x) const {
  const std::size_t p = piece(x);
  const std::size_t a = p == 0 ? 0 : p - 1;
  return values_[a] + slopes_[p] * (x - breakpoints_[a]);
}

double PiecewiseLinear::derivative(double x) const { return slopes_[piece(x)]; }

double PiecewiseLinear::primitive(double x) const {
  if (x == 0.0) return 0.0;
  const double lo = std::min(0.0, x);
  const double hi = std::max(0.0, x);
  std::vector<double> nodes{lo};
  for (double b : breakpoints_)
    if (b > lo && b < hi) nodes.push_back(b);
  nodes.push_back(hi);
  double s = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k)
    s += 0.5 * ((*this)(nodes[k - 1]) + (*this)(nodes[k])) * (nodes[k] - nodes[k - 1]);
  return x > 0.0 ? s : -s;
}

void PiecewiseLinear::eval(std::span<const double> x, std::span<double> y) const {
  simd::pwl_eval(view(), x, y);
}

void PiecewiseLinear::derivative(std::span<const double> x, std::span<double> y) const {
  simd::pwl_slope(view(), x, y);
}

double PiecewiseLinear::max_slope() const { return *std::max_element(slopes_.begin(), slopes_.end()); }
double PiecewiseLinear::min_slope() const { return *std::min_element(slopes_.begin(), slopes_.end()); }

PiecewiseLinear PiecewiseLinear::inverse() const {
  if (!strictly_increasing()) throw std::domain_error("PiecewiseLinear::inverse: function is not invertible");
  std::vector<double> inv_slopes(slopes_.size());
  std::transform(slopes_.begin(), slopes_.end(), inv_slopes.begin(), [](double s) { return 1.0 / s; });
  return PiecewiseLinear(values_, std::move(inv_slopes));
}

Nonlinearity::Nonlinearity(std::string name, PiecewiseLinear f)
    : name_(std::move(name)), f_(std::move(f)), lipschitz_(f_.max_slope()) {
  if (f_.min_slope() < 0.0) throw std::invalid_argument("Nonlinearity: must be non-decreasing");
  if (!(lipschitz_ > 0.0)) throw std::invalid_argument("Nonlinearity: Lipschitz constant must be positive");
}

RegularisedNonlinearity::RegularisedNonlinearity(Nonlinearity regularised, PiecewiseLinear inverse,
                                                 double epsilon)
    : reg_(std::move(regularised)), inv_(std::move(inverse)), epsilon_(epsilon) {}

Nonlinearity stefan_zeta() { return Nonlinearity("stefan", PiecewiseLinear({0.0, 1.0}, {1.0, 0.0, 1.0})); }

Nonlinearity identity_zeta() { return Nonlinearity("identity", PiecewiseLinear({}, {1.0})); }

RegularisedNonlinearity regularise(const Nonlinearity& base, double epsilon) {
  if (!(epsilon > 0.0) || epsilon > base.lipschitz())
    throw std::invalid_argument("regularise: need 0 < epsilon <= Lipschitz constant");
  const auto& f = base.function();
  std::vector<double> slopes = f.slopes();
  for (double& s : slopes) s = std::max(epsilon, s);
  PiecewiseLinear reg(f.breakpoints(), std::move(slopes));
  PiecewiseLinear inv = reg.inverse();
  return RegularisedNonlinearity(Nonlinearity(base.name() + "_eps", std::move(reg)), std::move(inv),
                                 epsilon);
}

double xi(const Nonlinearity& base, double v) { return base.primitive(v); }

namespace {

// Round-off allowance for inequalities that may hold with equality.
constexpr double kRelSlack = 1e-12;

InequalityCheck make_check(double a, double b, double L, double lhs, double rhs) {
  InequalityCheck c;
  c.samples = 1;
  c.a = a;
  c.b = b;
  c.L = L;
  c.lhs = lhs;
  c.rhs = rhs;
  c.holds = lhs <= rhs + kRelSlack * (std::abs(L) * (std::abs(a) + std::abs(b)) + 1e-300);
  return c;
}

template <class PerPair>
InequalityCheck sample_pairs(double L_min, double L_max, std::size_t samples, std::uint64_t seed,
                             double range, PerPair&& check) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ab(-range, range);
  std::uniform_real_distribution<double> lu(L_min, L_max);
  InequalityCheck summary;
  for (std::size_t s = 0; s < samples; ++s) {
    const double a = ab(rng);
    const double b = ab(rng);
    const double L = L_min == L_max ? L_min : lu(rng);
    InequalityCheck c = check(L, a, b);
    if (!c.holds) {
      c.samples = s + 1;
      return c;
    }
  }
  summary.samples = samples;
  return summary;
}

}  // namespace

InequalityCheck linearisation_bound_at(const PiecewiseLinear& zeta, double L, double a, double b) {
  const double lhs = std::abs(L * (a - b) - (zeta(a) - zeta(b)));
  return make_check(a, b, L, lhs, L * std::abs(a - b));
}

InequalityCheck shifted_linearisation_bound_at(const PiecewiseLinear& Z, double L_Z, double L,
                                               double a, double b) {
  const double lhs = std::abs(L * (a - b) - (Z(a) - Z(b)));
  return make_check(a, b, L, lhs, (L - L_Z) * std::abs(a - b));
}

InequalityCheck check_linearisation_bound(const Nonlinearity& zeta, double L_min, double L_max,
                                          std::size_t samples, std::uint64_t seed, double range) {
  if (L_min < 0.5 * zeta.lipschitz() || L_max < L_min)
    throw std::invalid_argument("check_linearisation_bound: need L >= L_zeta/2");
  return sample_pairs(L_min, L_max, samples, seed, range, [&](double L, double a, double b) {
    return linearisation_bound_at(zeta.function(), L, a, b);
  });
}

InequalityCheck check_inverse_linearisation_bound(const RegularisedNonlinearity& zeta_eps,
                                                  double L_min, double L_max, std::size_t samples,
                                                  std::uint64_t seed, double range) {
  const PiecewiseLinear& Z = zeta_eps.inverse_function();
  if (L_min < Z.max_slope() || L_max < L_min)
    throw std::invalid_argument("check_inverse_linearisation_bound: need L >= sup Z'");
  const double L_Z = 1.0 / zeta_eps.lipschitz();
  return sample_pairs(L_min, L_max, samples, seed, range, [&](double L, double a, double b) {
    return shifted_linearisation_bound_at(Z, L_Z, L, a, b);
  });
}

}  // namespace stefan
