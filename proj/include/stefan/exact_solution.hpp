// Travelling-front solution of the deterministic Stefan test:
//   u(x, t) = 2 exp(t - x1) - 1   for x1 <  t
//           =   exp(t - x1) - 1   for x1 >= t
// The interface x1 = t takes the second branch.

#pragma once

namespace stefan {

double exact_u(double x1, double x2, double t);
/// zeta(exact_u) for the Stefan zeta.
double exact_zeta(double x1, double x2, double t);

}  // namespace stefan
