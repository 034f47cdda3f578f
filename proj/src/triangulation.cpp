#include "hwalk/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace hwalk {
namespace {

// Forward error bounds in the style of Shewchuk's filters: when the naive
// determinant exceeds the bound times the sum of term magnitudes, its sign is
// certain at that precision.
constexpr double kEpsD = std::numeric_limits<double>::epsilon() / 2;
constexpr double kOrientBoundD = (3 + 16 * kEpsD) * kEpsD;
constexpr double kCircleBoundD = (10 + 96 * kEpsD) * kEpsD;
constexpr long double kEpsL = std::numeric_limits<long double>::epsilon() / 2;
constexpr long double kOrientBoundL = (3 + 16 * kEpsL) * kEpsL;
constexpr long double kCircleBoundL = (10 + 96 * kEpsL) * kEpsL;

int sort3(int* v) {
  int s = 1;
  if (v[0] > v[1]) { std::swap(v[0], v[1]); s = -s; }
  if (v[1] > v[2]) { std::swap(v[1], v[2]); s = -s; }
  if (v[0] > v[1]) { std::swap(v[0], v[1]); s = -s; }
  return s;
}

int sort4(int* v) {
  int s = 1;
  for (int i = 1; i < 4; ++i)
    for (int j = i; j > 0 && v[j - 1] > v[j]; --j) {
      std::swap(v[j - 1], v[j]);
      s = -s;
    }
  return s;
}

// Orientation for ascending indices ia < ib < ic.  The perturbation attaches
// (eps_i, eps_i^2) to vertex i with eps decreasing steeply in the index, so
// the tie-break terms are the derivatives of the determinant in dominance
// order: d(eps_a) = by - cy, d(eps_a^2) = cx - bx, d(eps_b) = cy - ay, and
// then d(eps_a^2 eps_b) = -1, a constant, so the ladder always decides.
int orient_sorted(const std::vector<cplx>& p, int ia, int ib, int ic) {
  const double ax = p[ia].real(), ay = p[ia].imag();
  const double bx = p[ib].real(), by = p[ib].imag();
  const double cx = p[ic].real(), cy = p[ic].imag();

  const double t1 = (bx - ax) * (cy - ay);
  const double t2 = (by - ay) * (cx - ax);
  const double det = t1 - t2;
  const double mag = std::fabs(t1) + std::fabs(t2);
  if (std::fabs(det) > kOrientBoundD * mag) return det > 0 ? 1 : -1;

  const long double l1 = (static_cast<long double>(bx) - ax) * (static_cast<long double>(cy) - ay);
  const long double l2 = (static_cast<long double>(by) - ay) * (static_cast<long double>(cx) - ax);
  const long double ldet = l1 - l2;
  const long double lmag = fabsl(l1) + fabsl(l2);
  if (fabsl(ldet) > kOrientBoundL * lmag) return ldet > 0 ? 1 : -1;

  if (by != cy) return by > cy ? 1 : -1;
  if (cx != bx) return cx > bx ? 1 : -1;
  if (cy != ay) return cy > ay ? 1 : -1;
  return -1;
}

struct Det3 {
  long double val;
  long double perm;  // sum of the absolute products, for the error bound
};

Det3 det3(const long double* r0, const long double* r1, const long double* r2) {
  Det3 d;
  d.val = r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) -
          r0[1] * (r1[0] * r2[2] - r1[2] * r2[0]) +
          r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]);
  d.perm = fabsl(r0[0]) * (fabsl(r1[1] * r2[2]) + fabsl(r1[2] * r2[1])) +
           fabsl(r0[1]) * (fabsl(r1[0] * r2[2]) + fabsl(r1[2] * r2[0])) +
           fabsl(r0[2]) * (fabsl(r1[0] * r2[1]) + fabsl(r1[1] * r2[0]));
  return d;
}

int settled_sign(long double val, long double perm) {
  if (fabsl(val) > 64 * std::numeric_limits<long double>::epsilon() * perm) return val > 0 ? 1 : -1;
  return 0;
}

// In-circle for ascending indices ia < ib < ic < id.  The tie-break walks the
// first-order perturbation terms: for each vertex in index order, the
// derivative of the determinant with respect to its x then y displacement.
// Exactly cocircular quadruples (the only ties the generators and tests can
// produce) resolve at this depth; anything deeper is reported as degenerate.
int incircle_sorted(const std::vector<cplx>& p, int ia, int ib, int ic, int id) {
  const double dx = p[id].real(), dy = p[id].imag();
  const double adx = p[ia].real() - dx, ady = p[ia].imag() - dy;
  const double bdx = p[ib].real() - dx, bdy = p[ib].imag() - dy;
  const double cdx = p[ic].real() - dx, cdy = p[ic].imag() - dy;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;

  const double det = alift * (bdx * cdy - bdy * cdx) - blift * (adx * cdy - ady * cdx) +
                     clift * (adx * bdy - ady * bdx);
  const double perm = alift * (std::fabs(bdx * cdy) + std::fabs(bdy * cdx)) +
                      blift * (std::fabs(adx * cdy) + std::fabs(ady * cdx)) +
                      clift * (std::fabs(adx * bdy) + std::fabs(ady * bdx));
  if (std::fabs(det) > kCircleBoundD * perm) return det > 0 ? 1 : -1;

  const long double ladx = static_cast<long double>(p[ia].real()) - dx;
  const long double lady = static_cast<long double>(p[ia].imag()) - dy;
  const long double lbdx = static_cast<long double>(p[ib].real()) - dx;
  const long double lbdy = static_cast<long double>(p[ib].imag()) - dy;
  const long double lcdx = static_cast<long double>(p[ic].real()) - dx;
  const long double lcdy = static_cast<long double>(p[ic].imag()) - dy;
  const long double ra[3] = {ladx, lady, ladx * ladx + lady * lady};
  const long double rb[3] = {lbdx, lbdy, lbdx * lbdx + lbdy * lbdy};
  const long double rc[3] = {lcdx, lcdy, lcdx * lcdx + lcdy * lcdy};

  const long double lt1 = ra[2] * (rb[0] * rc[1] - rb[1] * rc[0]);
  const long double lt2 = rb[2] * (ra[0] * rc[1] - ra[1] * rc[0]);
  const long double lt3 = rc[2] * (ra[0] * rb[1] - ra[1] * rb[0]);
  const long double ldet = lt1 - lt2 + lt3;
  const long double lperm = ra[2] * (fabsl(rb[0] * rc[1]) + fabsl(rb[1] * rc[0])) +
                            rb[2] * (fabsl(ra[0] * rc[1]) + fabsl(ra[1] * rc[0])) +
                            rc[2] * (fabsl(ra[0] * rb[1]) + fabsl(ra[1] * rb[0]));
  if (fabsl(ldet) > kCircleBoundL * lperm) return ldet > 0 ? 1 : -1;

  // Rows with one row swapped for the derivative direction [1, 0, 2x] or
  // [0, 1, 2y].  The derivative with respect to the subtracted vertex is
  // minus the sum over rows.
  const long double dxa[3] = {1, 0, 2 * ra[0]}, dya[3] = {0, 1, 2 * ra[1]};
  const long double dxb[3] = {1, 0, 2 * rb[0]}, dyb[3] = {0, 1, 2 * rb[1]};
  const long double dxc[3] = {1, 0, 2 * rc[0]}, dyc[3] = {0, 1, 2 * rc[1]};

  Det3 terms[8];
  terms[0] = det3(dxa, rb, rc);
  terms[1] = det3(dya, rb, rc);
  terms[2] = det3(ra, dxb, rc);
  terms[3] = det3(ra, dyb, rc);
  terms[4] = det3(ra, rb, dxc);
  terms[5] = det3(ra, rb, dyc);
  terms[6] = {-(terms[0].val + terms[2].val + terms[4].val),
              terms[0].perm + terms[2].perm + terms[4].perm};
  terms[7] = {-(terms[1].val + terms[3].val + terms[5].val),
              terms[1].perm + terms[3].perm + terms[5].perm};

  for (const Det3& t : terms) {
    int s = settled_sign(t.val, t.perm);
    if (s != 0) return s;
  }
  throw std::runtime_error("in_circle: degenerate beyond first-order perturbation");
}

}  // namespace

int orient2d_sos(const std::vector<cplx>& pts, int a, int b, int c) {
  int v[3] = {a, b, c};
  const int parity = sort3(v);
  return parity * orient_sorted(pts, v[0], v[1], v[2]);
}

int in_circle_sos(const std::vector<cplx>& pts, int a, int b, int c, int d) {
  int v[4] = {a, b, c, d};
  const int parity = sort4(v);
  return parity * incircle_sorted(pts, v[0], v[1], v[2], v[3]);
}

Triangulation::Triangulation(const std::vector<cplx>& points) {
  pts_.reserve(points.size() + 3);
  // Super vertices at Euclidean radius 4: the equilateral triangle they span
  // has inradius 2, so it strictly contains the unit disk, and no disk that
  // fits inside the unit disk can reach them.
  for (int k = 0; k < 3; ++k) pts_.push_back(std::polar(4.0, kPi / 2 + k * 2 * kPi / 3));
  pts_.insert(pts_.end(), points.begin(), points.end());

  tris_.push_back({{0, 1, 2}, {-1, -1, -1}});
  alive_.push_back(1);

  // Insert outward in half-unit hyperbolic bands, sweeping the angle back
  // and forth, so consecutive insertions are geometric neighbors and the
  // locate walk stays short.  Plain radius order degrades badly here: points
  // uniform in hyperbolic area crowd into a thin Euclidean annulus where
  // same-radius neighbors sit at unrelated angles.  Vertex ids keep the
  // input order regardless.
  struct OrderKey {
    int band;
    double ang;
    int idx;
  };
  std::vector<OrderKey> order(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const double a = std::abs(points[i]);
    const int band = a < 1.0 ? static_cast<int>(4.0 * std::atanh(a)) : 1 << 24;
    const double ang = std::arg(points[i]);
    order[i] = {band, band % 2 ? -ang : ang, static_cast<int>(i)};
  }
  std::sort(order.begin(), order.end(), [](const OrderKey& x, const OrderKey& y) {
    if (x.band != y.band) return x.band < y.band;
    if (x.ang != y.ang) return x.ang < y.ang;
    return x.idx < y.idx;
  });
  for (const OrderKey& k : order) insert(k.idx + 3);

  // Compact away the triangles killed during construction.
  std::vector<int> remap(tris_.size(), -1);
  std::vector<Tri> live;
  live.reserve(tris_.size());
  for (size_t t = 0; t < tris_.size(); ++t) {
    if (!alive_[t]) continue;
    remap[t] = static_cast<int>(live.size());
    live.push_back(tris_[t]);
  }
  for (Tri& t : live)
    for (int& n : t.nb) n = n < 0 ? -1 : remap[n];
  tris_ = std::move(live);
  alive_.assign(tris_.size(), 1);
  hint_ = 0;
}

int Triangulation::locate(int vertex) const {
  int t = hint_;
  if (t < 0 || t >= static_cast<int>(tris_.size()) || !alive_[t]) {
    t = -1;
    for (size_t i = 0; i < tris_.size(); ++i)
      if (alive_[i]) { t = static_cast<int>(i); break; }
    if (t < 0) throw std::logic_error("locate: no live triangle");
  }

  // Remembering visibility walk; exact on a Delaunay triangulation.  The cap
  // plus exhaustive fallback guards against walk pathologies.
  int prev = -1;
  const size_t cap = 4 * tris_.size() + 64;
  for (size_t step = 0; step < cap; ++step) {
    const Tri& tr = tris_[t];
    int next = -1;
    for (int i = 0; i < 3; ++i) {
      if (tr.nb[i] == prev && prev != -1) continue;
      const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
      if (orient2d_sos(pts_, a, b, vertex) < 0) {
        next = tr.nb[i];
        break;
      }
    }
    if (next == -1) return t;
    prev = t;
    t = next;
    if (t < 0) throw std::logic_error("locate: walked out of the super triangle");
  }
  for (size_t i = 0; i < tris_.size(); ++i) {
    if (!alive_[i]) continue;
    const Tri& tr = tris_[i];
    bool inside = true;
    for (int e = 0; e < 3 && inside; ++e)
      inside = orient2d_sos(pts_, tr.v[(e + 1) % 3], tr.v[(e + 2) % 3], vertex) > 0;
    if (inside) return static_cast<int>(i);
  }
  throw std::logic_error("locate: point in no triangle");
}

void Triangulation::insert(int vertex) {
  const int t0 = locate(vertex);

  // Grow the cavity of triangles whose circumcircle contains the new vertex.
  mark_.resize(tris_.size(), 0);
  const int in_mark = 2 * ++epoch_, out_mark = in_mark + 1;
  std::vector<int> cavity{t0}, stack{t0};
  mark_[t0] = in_mark;
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    for (int n : tris_[t].nb) {
      if (n < 0 || mark_[n] == in_mark || mark_[n] == out_mark) continue;
      const Tri& tr = tris_[n];
      if (in_circle_sos(pts_, tr.v[0], tr.v[1], tr.v[2], vertex) > 0) {
        mark_[n] = in_mark;
        cavity.push_back(n);
        stack.push_back(n);
      } else {
        mark_[n] = out_mark;
      }
    }
  }

  // Rim edges, oriented as they appear in their cavity triangle so the new
  // vertex lies to their left.
  struct RimEdge {
    int a, b, outer, inner;
  };
  std::vector<RimEdge> rim;
  for (int t : cavity) {
    const Tri& tr = tris_[t];
    for (int i = 0; i < 3; ++i) {
      const int n = tr.nb[i];
      if (n >= 0 && mark_[n] == in_mark) continue;
      rim.push_back({tr.v[(i + 1) % 3], tr.v[(i + 2) % 3], n, t});
    }
  }
  for (int t : cavity) alive_[t] = 0;

  std::unordered_map<int, int> tri_from, tri_to;  // rim vertex -> new triangle
  tri_from.reserve(rim.size());
  tri_to.reserve(rim.size());
  const int base = static_cast<int>(tris_.size());
  for (size_t k = 0; k < rim.size(); ++k) {
    const RimEdge& e = rim[k];
    const int id = base + static_cast<int>(k);
    tris_.push_back({{e.a, e.b, vertex}, {-1, -1, e.outer}});
    alive_.push_back(1);
    if (e.outer >= 0) {
      Tri& out = tris_[e.outer];
      for (int j = 0; j < 3; ++j)
        if (out.nb[j] == e.inner) out.nb[j] = id;
    }
    tri_from[e.a] = id;
    tri_to[e.b] = id;
  }
  for (size_t k = 0; k < rim.size(); ++k) {
    const int id = base + static_cast<int>(k);
    tris_[id].nb[0] = tri_from.at(rim[k].b);  // across edge (b, vertex)
    tris_[id].nb[1] = tri_to.at(rim[k].a);    // across edge (vertex, a)
  }
  hint_ = base;
}

bool Triangulation::has_super(int tri) const {
  for (int v : tris_[tri].v)
    if (is_super(v)) return true;
  return false;
}

std::vector<std::pair<int, int>> Triangulation::input_edges() const {
  std::vector<std::pair<int, int>> edges;
  for (const Tri& t : tris_)
    for (int i = 0; i < 3; ++i) {
      const int a = t.v[i], b = t.v[(i + 1) % 3];
      if (a < 3 || b < 3) continue;
      edges.emplace_back(std::min(a, b) - 3, std::max(a, b) - 3);
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<int> Triangulation::vertex_triangles(int input_index) const {
  const int v = input_index + 3;
  std::vector<int> out;
  for (size_t t = 0; t < tris_.size(); ++t)
    if (tris_[t].v[0] == v || tris_[t].v[1] == v || tris_[t].v[2] == v)
      out.push_back(static_cast<int>(t));
  return out;
}

bool Triangulation::on_hull(int input_index) const {
  for (int t : vertex_triangles(input_index))
    if (has_super(t)) return true;
  return false;
}

cplx Triangulation::circumcenter(int tri) const {
  const cplx a = pts_[tris_[tri].v[0]];
  const cplx b = pts_[tris_[tri].v[1]] - a;
  const cplx c = pts_[tris_[tri].v[2]] - a;
  const double bl = std::norm(b), cl = std::norm(c);
  const double d = 2 * (b.real() * c.imag() - b.imag() * c.real());
  return a + cplx((c.imag() * bl - b.imag() * cl) / d, (b.real() * cl - c.real() * bl) / d);
}

double Triangulation::circumradius(int tri) const {
  return std::abs(circumcenter(tri) - pts_[tris_[tri].v[0]]);
}

std::vector<int> Triangulation::edge_triangles(int i, int j) const {
  const int a = i + 3, b = j + 3;
  std::vector<int> out;
  for (size_t t = 0; t < tris_.size(); ++t) {
    int hit = 0;
    for (int v : tris_[t].v) hit += (v == a) + (v == b);
    if (hit == 2) out.push_back(static_cast<int>(t));
  }
  return out;
}

}  // namespace hwalk
