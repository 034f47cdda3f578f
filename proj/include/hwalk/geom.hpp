#pragma once

#include <complex>
#include <stdexcept>

#include "hwalk/rng.hpp"
#include "hwalk/scalar.hpp"

// Hyperbolic geometry in the Poincare disk (curvature -1).  Points are
// complex numbers with |z| < 1; isometries are Moebius pairs.  Everything
// here is a pure function; far-field work (distances past ~35) goes through
// the log-domain helpers in scalar.hpp instead of disk coordinates.

namespace hwalk {

using cplx = std::complex<double>;

// Points with |z| > 1 - 1e-15 have no usable precision left in this model;
// reject them at module boundaries.
inline void check_point(cplx z) {
  if (!(std::abs(z) <= 1.0 - 1e-15))
    throw std::invalid_argument("point outside the open unit disk");
}

// Hyperbolic distance.  cosh d = 1 + 2|p-q|^2 / ((1-|p|^2)(1-|q|^2)); the
// acosh1p form is simultaneously accurate for nearby points and overflow-free
// when the naive cosh argument is astronomically large.
inline double dist(cplx p, cplx q) {
  double u = 2.0 * std::norm(p - q) / ((1.0 - std::norm(p)) * (1.0 - std::norm(q)));
  return acosh1p(u);
}

inline double dist_o(cplx z) { return 2.0 * std::atanh(std::abs(z)); }

// Point at arclength t along the geodesic ray from o toward e^{i theta}.
inline cplx exp_ray(double theta, double t) {
  if (t < 0.0) throw std::invalid_argument("exp_ray: negative arclength");
  return std::polar(std::tanh(0.5 * t), theta);
}

// Horofunction at boundary angle theta, normalized to 0 at o and to +t at
// exp_ray(theta, t): the limit of d(x, o) - d(x, z) as x -> e^{i theta}.
inline double busemann(double theta, cplx z) {
  return std::log((1.0 - std::norm(z)) / std::norm(z - std::polar(1.0, theta)));
}

// busemann + distance to o: nonnegative, zero on the ray opposite theta and
// 2t at exp_ray(theta, t); level sets are ellipse-like ovals around the ray
// toward theta.
inline double f_level(double theta, cplx z) {
  return busemann(theta, z) + dist_o(z);
}

// Half-aperture of the geodesic cone about the theta-ray that contains
// {f_level > r}.  Tends to 2 e^{-r/2}.
inline double cone_angle(double r) {
  if (r <= 0.0) throw std::invalid_argument("cone_angle: r must be positive");
  return 2.0 * std::atan(1.0 / std::sqrt(std::expm1(r)));
}

// Radius of the ball around the midpoint of p, q that every disk having both
// p and q on its boundary must contain; 0 when the pair is too close.
inline double ball_intersection_radius(cplx p, cplx q) {
  return std::max(0.0, 0.5 * dist(p, q) - 3.0);
}

// Disk automorphism z -> (a z + b) / (conj(b) z + conj(a)), |a|^2 - |b|^2 = 1.
struct Mobius {
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};

  cplx operator()(cplx z) const {
    return (a * z + b) / (std::conj(b) * z + std::conj(a));
  }
  double det() const { return std::norm(a) - std::norm(b); }
  Mobius inverse() const { return {std::conj(a), -b}; }

  // Composition acting as maps: (f * g)(z) = f(g(z)).  Renormalized so the
  // unit-determinant invariant survives long products.
  Mobius operator*(const Mobius& g) const {
    Mobius r{a * g.a + b * std::conj(g.b), a * g.b + b * std::conj(g.a)};
    double s = std::sqrt(r.det());
    r.a /= s;
    r.b /= s;
    return r;
  }

  // Rotation by phi about o.
  static Mobius rotation(double phi) {
    return {std::polar(1.0, 0.5 * phi), cplx{0.0, 0.0}};
  }
  // Translation by t along the positive real axis (o moves to tanh(t/2)).
  static Mobius translation(double t) {
    return {cplx{std::cosh(0.5 * t), 0.0}, cplx{std::sinh(0.5 * t), 0.0}};
  }
  // Translation along the axis through o and x taking o to x.
  static Mobius translate_to(cplx x) {
    double s = 1.0 / std::sqrt(1.0 - std::norm(x));
    return {cplx{s, 0.0}, x * s};
  }
};

// Hyperbolic midpoint of the segment [o, x].
inline cplx half_to(cplx x) {
  double r = std::abs(x);
  if (r == 0.0) return x;
  // |m| = tanh(atanh(r)/1... half the hyperbolic distance: r/(1+sqrt(1-r^2)).
  return x * (1.0 / (1.0 + std::sqrt(1.0 - r * r)));
}

inline cplx midpoint(cplx p, cplx q) {
  Mobius to_p = Mobius::translate_to(p);
  return to_p(half_to(to_p.inverse()(q)));
}

// Rotation by pi about the midpoint of [o, x]: swaps o and x, an involution.
// The identity at x = o (the continuous limit would be a pi rotation, but the
// exchanging property only pins the map up to stabilizer, and identity keeps
// re-rooting at the same vertex a no-op).
inline Mobius central_symmetry(cplx x) {
  if (x == cplx{0.0, 0.0}) return {};
  cplx m = half_to(x);
  double a2 = 1.0 / (1.0 - std::norm(m));
  cplx beta = m * std::sqrt(a2);
  // Conjugate the rotation z -> -z by the translation taking o to m.
  return {cplx{0.0, 1.0} * (a2 + std::norm(beta)),
          cplx{0.0, -2.0} * std::sqrt(a2) * beta};
}

// Moebius pair scaled as exp(s) * (a, b) with |a| kept near 1 and the unit
// determinant of the underlying map tracked analytically.  Long walk
// compositions leave the representable range of plain pairs (|a| ~ e^{d/2}
// overflows near d = 1420, and |a| - |b| underflows long before that); here
// the scale lives in s and d(o, G(o)) = 2 (s + log(|a| + |b|)) stays exact
// because |A| - |B| = 1/(|A| + |B|) for a determinant-one pair.
struct ScaledMobius {
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};
  double s{0.0};

  static ScaledMobius from(const Mobius& g) {
    double m = std::abs(g.a);
    return {g.a / m, g.b / m, std::log(m)};
  }

  ScaledMobius operator*(const ScaledMobius& g) const {
    cplx ra = a * g.a + b * std::conj(g.b);
    cplx rb = a * g.b + b * std::conj(g.a);
    double m = std::abs(ra);
    return {ra / m, rb / m, s + g.s + std::log(m)};
  }

  ScaledMobius inverse() const { return {std::conj(a), -b, s}; }

  // Apply to a point: the e^s scale cancels between numerator and
  // denominator, so this is valid even when the true pair is unrepresentable.
  cplx operator()(cplx z) const { return (a * z + b) / (std::conj(b) * z + std::conj(a)); }

  // d(o, G(o)) = 2 atanh(|B/A|) = 2 log(|A| + |B|), exact at any distance.
  double dist_o() const { return 2.0 * (s + std::log(std::abs(a) + std::abs(b))); }

  // Boundary angle of G(o) seen from o: arg(B / conj(A)).
  double angle_o() const { return std::arg(a * b); }

  // Direction from G(o) back toward o, expressed in the frame carried by G:
  // arg(G^{-1}(o)) = arg(-b / a).
  double angle_back() const { return std::arg(-b / a); }

  // Only meaningful while the map stays in representable range (s small).
  Mobius to_mobius() const {
    double m = std::exp(s);
    Mobius g{a * m, b * m};
    double n = std::sqrt(g.det());
    g.a /= n;
    g.b /= n;
    return g;
  }
};

// Volume of hyperbolic balls in dimension dim >= 2 (2 everywhere in this
// project; the general form exists for the profile sweeps).
struct VolumeProfile {
  int dim{2};

  explicit VolumeProfile(int d = 2) : dim(d) {
    if (d < 2 || d > 40) throw std::invalid_argument("VolumeProfile: dim out of range");
  }

  // Surface area of the unit (dim-1)-sphere.
  double sphere_area() const {
    return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim);
  }

  // v(r) = area of the boundary sphere of radius r.
  double density(double r) const {
    if (r <= 0.0) return 0.0;
    return std::exp(log_density(r));
  }
  double log_density(double r) const {
    return std::log(sphere_area()) + (dim - 1) * log_sinh(r);
  }

  // V(r) = volume of the ball of radius r; 0 for r <= 0.
  double volume(double r) const {
    if (r <= 0.0) return 0.0;
    if (dim == 2) return 4.0 * kPi * sq(std::sinh(0.5 * r));
    return std::exp(log_volume(r));
  }

  // Exact in the log domain for r up to 1e3: the sinh^{d-1} binomial
  // expansion integrates term by term, factored by e^{(d-1) r}.
  double log_volume(double r) const {
    if (r <= 0.0) return -kInf;
    int n = dim - 1;
    if (n == 1) return std::log(4.0 * kPi) + 2.0 * log_sinh(0.5 * r);
    double sum = 0.0;  // sum of C(n,k) (-1)^k * (e^{(n-2k)r} - 1)/(n-2k), scaled by e^{-nr}
    double binom = 1.0;
    for (int k = 0; k <= n; ++k) {
      double t;
      if (n == 2 * k) {
        t = r * std::exp(-static_cast<double>(n) * r);
      } else {
        t = (std::exp(-2.0 * k * r) - std::exp(-static_cast<double>(n) * r)) / (n - 2.0 * k);
      }
      sum += ((k & 1) ? -binom : binom) * t;
      binom *= static_cast<double>(n - k) / (k + 1.0);
    }
    return std::log(sphere_area()) - n * kLog2 + n * r + std::log(sum);
  }

  // Distance scale at which a ball starts holding ~1 point at intensity l.
  double r_lambda(double l) const { return 2.0 / (dim - 1) * std::log(1.0 / l); }
};

// Half-plane bridge.  cayley maps the upper half-plane to the disk with
// i -> 0 and infinity -> 1 (= boundary angle 0).
inline cplx cayley(cplx z) { return (z - cplx{0, 1}) / (z + cplx{0, 1}); }
inline cplx cayley_inv(cplx w) { return cplx{0, 1} * (1.0 + w) / (1.0 - w); }

inline double halfplane_dist(cplx z1, cplx z2) {
  return acosh1p(std::norm(z1 - z2) / (2.0 * z1.imag() * z2.imag()));
}

// Uniform random point in the hyperbolic ball B(o, R): inverse-CDF radius
// (area element ~ sinh), uniform angle.
inline cplx random_in_ball(Rng& rng, double R) {
  double r = acosh1p(rng.u01() * (std::cosh(R) - 1.0));
  return exp_ray(2.0 * kPi * rng.u01(), r);
}

}  // namespace hwalk
