#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

// Log-domain scalar helpers.  Distances in this project routinely exceed the
// range where cosh/sinh are representable in double (r > 710), so every
// trigonometric identity we use has a log form built from the functions here.

namespace hwalk {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2 = 0.69314718055994530942;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sq(double x) { return x * x; }

// log(e^a + e^b), tolerant of -inf arguments.
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -kInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(e^a - e^b) for a >= b; returns -inf when the difference underflows.
inline double log_sub_exp(double a, double b) {
  if (b == -kInf) return a;
  double d = b - a;  // <= 0
  if (d >= 0.0) return -kInf;
  return a + std::log1p(-std::exp(d));
}

// log(cosh x), exact for all x (for |x| > 20 the e^{-2|x|} tail underflows
// gracefully inside log1p).
inline double log_cosh(double x) {
  double ax = std::fabs(x);
  return ax - kLog2 + std::log1p(std::exp(-2.0 * ax));
}

// log(sinh x) for x >= 0; -inf at 0.
inline double log_sinh(double x) {
  if (x <= 0.0) return -kInf;
  if (x < 1e-3) return std::log(x) + std::log1p(x * x / 6.0);
  return x - kLog2 + std::log1p(-std::exp(-2.0 * x));
}

// acosh(1 + u) for u >= 0 without forming the argument; relative accuracy is
// uniform in u, which the plain acosh call loses badly for u near 0.
inline double acosh1p(double u) {
  if (u <= 0.0) return 0.0;
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

// d >= 0 with cosh d = e^L, given L = log cosh d >= 0.  Stable for all L:
// d = L + log(1 + sqrt(1 - e^{-2L})).
inline double acosh_of_log(double L) {
  if (L <= 0.0) return 0.0;
  double w = -std::expm1(-2.0 * L);  // 1 - e^{-2L}, exact near 0
  return L + std::log1p(std::sqrt(w));
}

// Hyperbolic law of cosines in log form.  Given a triangle with two sides a,
// b >= 0 meeting at angle gamma, returns the third side.  Uses
//   cosh c = cosh(a-b) + 2 sinh a sinh b sin^2(gamma/2),
// whose terms are both nonnegative, so there is no cancellation anywhere in
// the range.  Safe for a, b up to ~1e300 in the log domain.
//
// The _ls variant takes log|sin(gamma/2)| instead of gamma, for callers whose
// angle is too small to represent as a double (sector widths at extreme radii
// underflow near ring 745 but their logs stay exact).
inline double side_from_sides_angle_ls(double a, double b, double log_sin_half) {
  double cross = kLog2 + log_sinh(a) + log_sinh(b) + 2.0 * log_sin_half;
  if (a < 25.0 && b < 25.0) {
    double u = 2.0 * sq(std::sinh(0.5 * (a - b))) + std::exp(cross);
    return acosh1p(u);
  }
  return acosh_of_log(log_add_exp(log_cosh(a - b), cross));
}

inline double side_from_sides_angle(double a, double b, double gamma) {
  double s = std::fabs(std::sin(0.5 * gamma));
  return side_from_sides_angle_ls(a, b, s > 0.0 ? std::log(s) : -kInf);
}

// Angle at the common vertex of sides a and b whose opposite side is c,
// in [0, pi].  Uses the half-angle form
//   tan^2(gamma/2) = (cosh c - cosh(a-b)) / (cosh(a+b) - cosh c),
// evaluated in the log domain; both differences are nonnegative by the
// triangle inequality.
inline double angle_from_sides(double a, double b, double c) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  double lc = log_cosh(c);
  double num = log_sub_exp(lc, log_cosh(a - b));
  double den = log_sub_exp(log_cosh(a + b), lc);
  if (num == -kInf) return 0.0;
  if (den == -kInf) return kPi;
  return 2.0 * std::atan(std::exp(0.5 * (num - den)));
}

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double t) {
  t = std::remainder(t, 2.0 * kPi);
  if (t <= -kPi) t += 2.0 * kPi;
  return t;
}

}  // namespace hwalk
