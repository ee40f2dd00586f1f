#include "stefan/exact_solution.hpp"

#include <cmath>

namespace stefan {

double exact_u(double x1, double /*x2*/, double t) {
  const double e = std::exp(t - x1);
  return x1 < t ? 2.0 * e - 1.0 : e - 1.0;
}

double exact_zeta(double x1, double x2, double t) {
  const double u = exact_u(x1, x2, t);
  if (u <= 0.0) return u;
  if (u <= 1.0) return 0.0;
  return u - 1.0;
}

}  // namespace stefan
