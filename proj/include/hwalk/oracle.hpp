#pragma once

#include <utility>
#include <vector>

#include "hwalk/geom.hpp"

// Slow reference constructions that check the fast geometry engines by
// independent means.  Everything here favours directness over speed and
// rejects inputs outside the small regimes it is meant for.

namespace hwalk {

// Frame whose imaginary axis is the perpendicular bisector of (p, q): it maps
// 0 to the geodesic midpoint and i*tanh(s/2) to the bisector point at signed
// arclength s from it.  Requires p != q.
Mobius bisector_frame(cplx p, cplx q);

// Delaunay edges by direct definition: (i, j) is an edge exactly when some
// disk through p_i and p_j, centered on their bisector, contains no other
// input point.  Each third point excludes a half-line of bisector arclengths,
// found by bisection; the edge exists when a feasible interval survives in
// [-30, 30].  Quadratic per pair, so inputs are capped at n <= 200 points
// within distance 10 of the origin.
std::vector<std::pair<int, int>> naive_delaunay(const std::vector<cplx>& points);

// t - d(exp_ray(theta, t), z), which by the triangle inequality increases
// monotonically to busemann(theta, z) as t grows.  Requires 0 <= t <= 200.
double horofunction_limit(double theta, cplx z, double t);

}  // namespace hwalk
