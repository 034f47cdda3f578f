#include "hwalk/local_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace hwalk {
namespace {

constexpr double kInfty = std::numeric_limits<double>::infinity();

// Minimize the convex reach |c(u)| + |c(u) - p| over the witness interval by
// golden section; endpoints included since the minimum may sit there.
double min_reach_on(const cplx& m, const cplx& dir, const cplx& p, double lo, double hi) {
  const auto f = [&](double u) {
    const cplx c = m + u * dir;
    return std::abs(c) + std::abs(c - p);
  };
  if (!(lo < hi)) return f((lo + hi) / 2);  // collapsed by float ties
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 70; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({f(lo), f1, f2, f(hi)});
}

double witness_reach(const Triangulation& t, int i, int j, const int* adj, int n_adj) {
  const cplx p = t.vertices()[i + 3], q = t.vertices()[j + 3];
  const cplx m = (p + q) / 2.0;
  cplx dir = (q - p) * cplx(0.0, 1.0);
  dir /= std::abs(dir);

  // Witness centers c(u) = m + u*dir: the disk through (p, q) at u swallows
  // an adjacent apex exactly past that triangle's circumcenter, so the empty
  // interval is bounded by the left apex's circumcenter above and the right
  // apex's below.  Super apexes give harmless far bounds: disks reaching them
  // have reach > 4 anyway.
  if (n_adj != 2) throw std::logic_error("witness_reach: edge without two triangles");
  double lo = -kInfty, hi = kInfty;
  for (int a = 0; a < 2; ++a) {
    const auto& tr = t.triangles()[adj[a]];
    int apex = -1;
    for (int v : tr.v)
      if (v != i + 3 && v != j + 3) apex = v;
    const double u = ((t.circumcenter(adj[a]) - m) / dir).real();
    if (orient2d_sos(t.vertices(), i + 3, j + 3, apex) > 0)
      hi = u;  // apex left of p->q bounds above
    else
      lo = u;
  }
  if (lo == -kInfty || hi == kInfty)
    throw std::logic_error("witness_reach: adjacent apexes on one side");
  return min_reach_on(m, dir, p, lo, hi);
}

}  // namespace

double edge_witness_reach(const Triangulation& t, int i, int j) {
  const auto adj = t.edge_triangles(i, j);
  if (adj.size() != 2) throw std::invalid_argument("edge_witness_reach: not an edge");
  return witness_reach(t, i, j, adj.data(), 2);
}

LocalGraph build_local(const std::vector<cplx>& points, int root) {
  if (root < 0 || root >= static_cast<int>(points.size()))
    throw std::invalid_argument("build_local: root out of range");
  for (const cplx& p : points) check_point(p);

  LocalGraph g{points, root, Triangulation(points), {}};

  std::map<std::pair<int, int>, std::array<int, 2>> adj;
  const auto& ts = g.tri.triangles();
  for (size_t tid = 0; tid < ts.size(); ++tid) {
    for (int e = 0; e < 3; ++e) {
      const int a = ts[tid].v[e], b = ts[tid].v[(e + 1) % 3];
      if (a < 3 || b < 3) continue;
      auto [it, fresh] = adj.try_emplace({std::min(a, b) - 3, std::max(a, b) - 3},
                                         std::array<int, 2>{-1, -1});
      it->second[fresh ? 0 : 1] = static_cast<int>(tid);
    }
  }
  for (const auto& [edge, tris] : adj) {
    if (witness_reach(g.tri, edge.first, edge.second, tris.data(), tris[1] < 0 ? 1 : 2) < 1.0)
      g.edges.push_back(edge);
  }
  return g;
}

RootCertificate certify_fan(const Triangulation& tri, int root, double window_radius,
                            double margin) {
  RootCertificate c;
  c.needed_radius = kInfty;
  const auto fan = tri.vertex_triangles(root);
  if (fan.empty()) return c;
  for (int t : fan)
    if (tri.has_super(t)) return c;
  c.fan_closed = true;
  double need = 0;
  for (int t : fan) {
    const double reach = std::abs(tri.circumcenter(t)) + tri.circumradius(t);
    if (reach >= 1.0) return c;  // circumdisk escapes the unit disk
    need = std::max(need, 2.0 * std::atanh(reach));
  }
  c.needed_radius = need;
  c.certified = need <= window_radius - margin;
  return c;
}

RootCertificate certify_root(const LocalGraph& g, double window_radius, double margin) {
  return certify_fan(g.tri, g.root, window_radius, margin);
}

std::vector<int> fan_neighbors(const Triangulation& tri, int root) {
  std::vector<int> out;
  for (int t : tri.vertex_triangles(root))
    for (int v : tri.triangles()[t].v)
      if (v >= 3 && v - 3 != root) out.push_back(v - 3);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> root_neighbors(const LocalGraph& g) {
  std::vector<int> out;
  for (const auto& [a, b] : g.edges) {
    if (a == g.root) out.push_back(b);
    if (b == g.root) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

VertexGraph::VertexGraph(const LazyField& field, double lambda, double margin)
    : field_(&field), lambda_(lambda), margin_(margin) {
  if (!(lambda > 0) || lambda > field.lambda_max())
    throw std::invalid_argument("VertexGraph: lambda outside (0, lambda_max]");
  // Start where a window holds a handful of points and let certification
  // drive further growth.
  start_radius_ = std::acosh(1.0 + 6.0 / (2.0 * kPi * lambda)) + 4.0;
}

FieldPoint VertexGraph::plant(cplx pos, uint32_t serial) {
  check_point(pos);
  if (dist_o(pos) > 10.0) throw std::invalid_argument("plant: farther than 10 from the origin");
  for (const auto& [p, s] : planted_)
    if (s == serial) throw std::invalid_argument("plant: duplicate serial");
  planted_.emplace_back(pos, serial);
  return {ChunkKey{kSyntheticRing, SectorIndex::zero(0)}, serial, pos};
}

AnchoredFrame VertexGraph::frame_of(const FieldPoint& v) const {
  if (v.is_synthetic()) {
    for (const auto& [p, s] : planted_)
      if (s == v.index) {
        AnchoredFrame f = field_->origin_frame();
        f.local = f.local * Mobius::translate_to(p);
        return f;
      }
    throw std::invalid_argument("frame_of: unknown synthetic vertex");
  }
  return {v.chunk, Mobius::translate_to(field_->point_local(v.chunk, v.index))};
}

const std::vector<FieldPoint>& VertexGraph::neighbors(const FieldPoint& v) {
  const VKey key = key_of(v);
  if (auto it = adj_.find(key); it != adj_.end()) return it->second;

  const AnchoredFrame frame = frame_of(v);
  const double cap = std::min(field_->query_radius_max, LazyField::kMaxQueryRadius);
  for (double radius = std::min(start_radius_, cap);; radius = std::min(radius + 2.0, cap)) {
    auto pts = field_->query_disk(frame, radius, lambda_);

    // Synthetic vertices are not in the field; fold in the ones whose global
    // position lands inside this window.  Iterate in reverse so the prepends
    // leave planted points in serial registration order.
    const double frame_rho = field_->frame_polar(frame).rho;
    for (auto it = planted_.rbegin(); it != planted_.rend(); ++it) {
      if (frame_rho > radius + dist_o(it->first) + 1.0) continue;
      const Mobius to_origin = field_->anchor_from_origin(frame.anchor).inverse();
      const cplx w = frame.local.inverse()(to_origin(it->first));
      if (!(dist_o(w) <= radius)) continue;
      pts = insert_root(std::move(pts), w, it->second);
    }

    int root_idx = -1;
    for (size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].chunk == v.chunk && pts[i].index == v.index) {
        root_idx = static_cast<int>(i);
        break;
      }
    }
    if (root_idx < 0) throw std::logic_error("neighbors: vertex missing from its own window");

    std::vector<cplx> locals(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) locals[i] = pts[i].pos;
    const Triangulation tri(locals);
    if (certify_fan(tri, root_idx, radius, margin_).certified) {
      std::vector<FieldPoint> nbrs;
      for (int i : fan_neighbors(tri, root_idx)) nbrs.push_back(pts[i]);
      return adj_.emplace(key, std::move(nbrs)).first->second;
    }
    if (radius >= cap)
      throw std::runtime_error("neighbors: uncertifiable at the query radius cap");
  }
}

std::optional<int> VertexGraph::distance(const FieldPoint& a, const FieldPoint& b, int max_dist) {
  if (max_dist < 0) return std::nullopt;
  if (key_of(a) == key_of(b)) return 0;

  std::unordered_map<VKey, int, VKeyHash> da{{key_of(a), 0}}, db{{key_of(b), 0}};
  std::vector<FieldPoint> fa{a}, fb{b};
  int ra = 0, rb = 0;  // explored radii
  while (ra + rb < max_dist) {
    auto& frontier = fa.size() <= fb.size() ? fa : fb;
    auto& dist_own = fa.size() <= fb.size() ? da : db;
    auto& dist_other = fa.size() <= fb.size() ? db : da;
    int& r = fa.size() <= fb.size() ? ra : rb;

    std::vector<FieldPoint> next;
    for (const FieldPoint& v : frontier) {
      for (const FieldPoint& w : neighbors(v)) {
        const VKey k = key_of(w);
        if (dist_own.count(k)) continue;
        dist_own.emplace(k, r + 1);
        if (auto it = dist_other.find(k); it != dist_other.end()) {
          const int total = r + 1 + it->second;
          if (total <= max_dist) return total;
        }
        next.push_back(w);
      }
    }
    frontier = std::move(next);
    ++r;
    if (frontier.empty()) return std::nullopt;  // disconnected within horizon
  }
  return std::nullopt;
}

DegreeStats root_degree_stats(double lambda, int samples, uint64_t seed) {
  if (samples <= 0) throw std::invalid_argument("root_degree_stats: no samples");
  DegreeStats st;
  st.attempted = samples;
  for (int s = 0; s < samples; ++s) {
    const LazyField field(mix64(seed, static_cast<uint64_t>(s)), lambda);
    VertexGraph vg(field, lambda);
    const FieldPoint root = vg.plant(cplx(0.0, 0.0), 0);
    try {
      st.degrees.push_back(static_cast<int>(vg.neighbors(root).size()));
    } catch (const std::runtime_error&) {
      ++st.failed;
      if (st.failed * 100 > samples)
        throw std::runtime_error("root_degree_stats: over 1% of samples uncertifiable");
    }
  }
  for (int d : st.degrees) {
    st.mean += d;
    st.mean_log += std::log(static_cast<double>(d));
  }
  const double n = static_cast<double>(st.degrees.size());
  if (n > 0) {
    st.mean /= n;
    st.mean_log /= n;
  }
  return st;
}

EdgeProbability edge_probability(double lambda, double r, int trials, uint64_t seed) {
  if (!(r > 0) || r > 12.0) throw std::invalid_argument("edge_probability: r outside (0, 12]");
  if (trials <= 0) throw std::invalid_argument("edge_probability: no trials");
  EdgeProbability ep;
  ep.r = r;
  ep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const LazyField field(mix64(seed, static_cast<uint64_t>(t)), lambda);
    VertexGraph vg(field, lambda);
    const FieldPoint root = vg.plant(cplx(0.0, 0.0), 0);
    const FieldPoint partner = vg.plant(cplx(std::tanh(r / 2.0), 0.0), 1);
    for (const FieldPoint& nb : vg.neighbors(root)) {
      if (nb.is_synthetic() && nb.index == partner.index) {
        ++ep.edges;
        break;
      }
    }
  }
  ep.p_hat = static_cast<double>(ep.edges) / trials;
  ep.std_err = std::sqrt(std::max(ep.p_hat * (1.0 - ep.p_hat), 1.0 / trials) / trials);
  return ep;
}

}  // namespace hwalk
