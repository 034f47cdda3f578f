#include "hwalk/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "hwalk/scalar.hpp"

namespace hwalk {

Mobius bisector_frame(cplx p, cplx q) {
  const Mobius to_p = Mobius::translate_to(p).inverse();
  const cplx qa = to_p(q);
  const double d = dist_o(qa);
  if (!(d > 0)) throw std::invalid_argument("bisector_frame: coincident points");
  const Mobius f = Mobius::translation(-d / 2) * Mobius::rotation(-std::arg(qa)) * to_p;
  return f.inverse();
}

namespace {

// Signed clearance of point k from the disk centered at bisector arclength s:
// negative when k is strictly closer to the center than the pair is.
double clearance(const Mobius& w, double s, cplx pk, cplx pi) {
  const cplx c = w(cplx(0.0, std::tanh(s / 2)));
  return dist(c, pk) - dist(c, pi);
}

}  // namespace

std::vector<std::pair<int, int>> naive_delaunay(const std::vector<cplx>& points) {
  const int n = static_cast<int>(points.size());
  if (n > 200) throw std::invalid_argument("naive_delaunay: more than 200 points");
  for (const cplx& p : points)
    if (dist_o(p) > 10.0) throw std::invalid_argument("naive_delaunay: point farther than 10 from the origin");

  constexpr double kSpan = 30.0;
  constexpr double kTol = 1e-9;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Mobius w = bisector_frame(points[i], points[j]);
      double lo = -kSpan, hi = kSpan;
      bool feasible = true;
      for (int k = 0; k < n && feasible; ++k) {
        if (k == i || k == j) continue;
        double glo = clearance(w, lo, points[k], points[i]);
        double ghi = clearance(w, hi, points[k], points[i]);
        if (glo >= 0 && ghi >= 0) continue;
        if (glo < 0 && ghi < 0) {
          feasible = false;
          break;
        }
        // Two distinct geodesics cross at most once, so the clearance changes
        // sign exactly once on [lo, hi]; bisect to the crossing and keep the
        // side where k stays outside.
        double neg = glo < 0 ? lo : hi;
        double pos = glo < 0 ? hi : lo;
        for (int it = 0; it < 60; ++it) {
          const double mid = (neg + pos) / 2;
          if (clearance(w, mid, points[k], points[i]) < 0)
            neg = mid;
          else
            pos = mid;
        }
        if (glo < 0)
          lo = pos;
        else
          hi = pos;
        feasible = hi - lo > kTol;
      }
      if (feasible) edges.emplace_back(i, j);
    }
  }
  return edges;
}

double horofunction_limit(double theta, cplx z, double t) {
  if (!(t >= 0 && t <= 200)) throw std::out_of_range("horofunction_limit: t outside [0, 200]");
  const double r = dist_o(z);
  const double delta = wrap_angle(theta - std::arg(z));
  return t - side_from_sides_angle(t, r, delta);
}

}  // namespace hwalk
