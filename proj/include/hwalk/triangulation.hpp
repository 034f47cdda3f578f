#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "hwalk/geom.hpp"

// Euclidean Delaunay triangulation of points in the unit disk, which is also
// the hyperbolic Delaunay structure: hyperbolic disks of the Poincare model
// are Euclidean disks, so an edge certified by an empty Euclidean disk lying
// inside the unit disk is certified hyperbolically and vice versa.  Edges
// whose only witnessing disks spill outside the unit disk are artifacts of
// the bounded window; the graph layer filters them.
//
// Predicates run a three-stage ladder: evaluate in double with a forward
// error bound, retry in long double, then fall back to a symbolic
// perturbation ordered by vertex index (each vertex i is displaced by an
// infinitesimal (eps_i, eps_i^2) with eps_0 >> eps_1 >> ...), so ties such as
// exactly cocircular quadruples resolve deterministically and consistently
// across the whole build.

namespace hwalk {

// Orientation of the triangle (a, b, c) by point index into pts: +1 counter-
// clockwise, -1 clockwise.  Never returns 0; exact ties are broken by the
// index perturbation, whose ladder ends in a constant term.
int orient2d_sos(const std::vector<cplx>& pts, int a, int b, int c);

// +1 if d lies strictly inside the circle through (a, b, c) taken counter-
// clockwise, -1 outside; alternating in all four arguments.  Cocircular
// quadruples resolve at the first perturbation order (throws std::runtime_error
// for inputs degenerate beyond that, which generic and test inputs never are).
int in_circle_sos(const std::vector<cplx>& pts, int a, int b, int c, int d);

class Triangulation {
 public:
  // Builds the Delaunay triangulation of the input points together with a
  // far super-triangle (internal vertices 0..2); input point i is internal
  // vertex i + 3.  The super vertices sit at Euclidean radius 4, far enough
  // that no disk contained in the unit disk can reach them, so interior
  // structure is exact.
  explicit Triangulation(const std::vector<cplx>& points);

  struct Tri {
    std::array<int, 3> v;   // counterclockwise
    std::array<int, 3> nb;  // neighbor opposite v[i], or -1
  };

  size_t n_input() const { return pts_.size() - 3; }
  const std::vector<cplx>& vertices() const { return pts_; }  // includes super
  const std::vector<Tri>& triangles() const { return tris_; }

  static bool is_super(int internal_vertex) { return internal_vertex < 3; }
  bool has_super(int tri) const;

  // Unordered input-index edge list (i < j), super-incident edges excluded,
  // sorted lexicographically.
  std::vector<std::pair<int, int>> input_edges() const;

  // Ids of triangles incident to an input vertex.
  std::vector<int> vertex_triangles(int input_index) const;

  // True if the input vertex has a super-incident triangle (window hull).
  bool on_hull(int input_index) const;

  // Euclidean circumcircle of a real triangle.
  cplx circumcenter(int tri) const;
  double circumradius(int tri) const;

  // Triangles adjacent to the input edge (i, j): one or two ids.
  std::vector<int> edge_triangles(int i, int j) const;

 private:
  int locate(int vertex) const;
  void insert(int vertex);

  std::vector<cplx> pts_;
  std::vector<Tri> tris_;
  std::vector<char> alive_;
  std::vector<int> mark_;  // cavity search stamps, valid during construction
  int epoch_{0};
  mutable int hint_{0};
};

}  // namespace hwalk
