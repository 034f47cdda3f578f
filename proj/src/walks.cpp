#include "hwalk/walks.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hwalk {

namespace {

double wrap_01_2pi(double t) {
  double w = wrap_angle(t);
  return w < 0.0 ? w + 2.0 * kPi : w;
}

// Direction in RP^1 as an angle in [0, pi).
double proj_angle(double x, double y) {
  double a = std::atan2(y, x);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

// Second accumulation of the same isometry composition, kept as raw complex
// products under exact power-of-two rescaling (the scale lives in an integer
// exponent, applied with ldexp, so rescaling contributes no rounding at
// all).  Its rounding stream is disjoint from the per-step |a| division
// inside ScaledMobius, which is what makes comparing the two distances a
// real precision check rather than an echo.
struct Pow2Mobius {
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};
  long e2{0};

  void compose(const Mobius& g) {
    cplx ra = a * g.a + b * std::conj(g.b);
    cplx rb = a * g.b + b * std::conj(g.a);
    double m = std::max(std::abs(ra), std::abs(rb));
    int shift = m > 0x1p500 ? -512 : (m < 0x1p-500 ? 512 : 0);
    if (shift != 0) {
      ra = {std::ldexp(ra.real(), shift), std::ldexp(ra.imag(), shift)};
      rb = {std::ldexp(rb.real(), shift), std::ldexp(rb.imag(), shift)};
      e2 -= shift;
    }
    a = ra;
    b = rb;
  }

  // d(o, G(o)) = 2 log(|A| + |B|) for the unit-determinant true pair
  // 2^{e2} (a, b).
  double dist_o() const {
    return 2.0 * (static_cast<double>(e2) * kLog2 + std::log(std::abs(a) + std::abs(b)));
  }
};

double rel_gap(double a, double b) { return std::fabs(a - b) / std::max(1.0, a); }

// Shared engine for the two lattice walks.  The vertices along the current
// arrival path form a stack; each entry stores the isometry of first arrival
// in both accumulations.  A draw equal to the entry's undo index walks back
// to the parent entry, and the state is restored from storage instead of
// multiplied on: a returning multiplication loses a factor e^{step length}
// of precision, so excursions would otherwise corrupt the trace
// exponentially fast.  Every frame rotation in these walks is an integer
// multiple of pi/m (m = 2 for quarter turns, m = q for the tessellation),
// so a restored frame differs from the stored one by an exactly known
// rotation and rounding error grows only with arrival-path depth.
//
// Entries also carry a chained identity: sigma = (km - undo) mod n_draws is
// a heading-independent label of the departing edge (undo tracks frame
// rotations, so sigma is the same whichever way the vertex is entered), and
// hashing sigma along the path identifies word-tree vertices across
// revisits.
struct LatticeWalk {
  struct Level {
    ScaledMobius sm;
    Pow2Mobius p2;
    uint64_t id{0};
    int rot{0};   // current frame = stored frame rotated by rot * pi / m
    int undo{0};  // draw that returns to the parent, in the current frame
    int came{0};  // draw that led here from the parent, in its frame then
  };

  int m;         // rotation grid pi / m
  int n_draws;   // draws are 0 .. n_draws - 1
  int draw_rot;  // one draw unit in pi / m units
  int undo_arrive;
  std::vector<Mobius> raw;  // step isometries by draw index
  std::vector<Level> path;

  LatticeWalk(int m_, int draw_rot_, int undo_arrive_, std::vector<Mobius> steps)
      : m(m_), n_draws(static_cast<int>(steps.size())), draw_rot(draw_rot_),
        undo_arrive(undo_arrive_), raw(std::move(steps)) {
    path.push_back({});
    path.back().undo = undo_arrive;
  }

  const Level& top() const { return path.back(); }
  int depth() const { return static_cast<int>(path.size()) - 1; }

  void reset() {
    path.resize(1);
    path[0] = Level{};
    path[0].undo = undo_arrive;
  }

  void step(int km) {
    Level& e = path.back();
    if (path.size() > 1 && km == e.undo) {
      int came = e.came;
      path.pop_back();
      Level& p = path.back();
      p.rot = (p.rot + draw_rot * (came + undo_arrive)) % (2 * m);
      p.undo = ((p.undo - came - undo_arrive) % n_draws + n_draws) % n_draws;
      return;
    }
    int sigma = ((km - e.undo) % n_draws + n_draws) % n_draws;
    Mobius rotstep =
        Mobius::rotation(e.rot * kPi / m) * raw[static_cast<size_t>(km)];
    Level next;
    next.sm = e.sm * ScaledMobius::from(rotstep);
    next.p2 = e.p2;
    next.p2.compose(rotstep);
    next.id = mix64(e.id, static_cast<uint64_t>(sigma) + 1);
    next.undo = undo_arrive;
    next.came = km;
    path.push_back(next);
  }
};

// Positional fingerprint for tessellation vertices: polar coordinates about
// the start, rounded on a 1e-8 grid.  Distinct vertices at radius rho differ
// by at least ~r_pq * e^{-rho} in angle or ~r_pq in radius, so buckets stay
// unambiguous while rho is under ~12; re-evaluations of the same vertex
// through different words jitter by ~1e-14, so a coordinate has to land
// within 1e-14 of a grid midpoint for the label to split, which at the
// sample sizes in use is a per-run probability below 1e-3.
uint64_t polar_site(double rho, double theta) {
  if (rho < 1e-9) return 0;
  auto q = [](double x) { return static_cast<uint64_t>(llround(x * 1e8)); };
  // Vertices on the positive real axis jitter between theta = +0 and
  // theta = 2 pi - epsilon; fold the top grid cell back onto zero.
  uint64_t qt = q(wrap_01_2pi(theta));
  if (qt >= q(2.0 * kPi)) qt = 0;
  return mix64(q(rho), qt);
}

}  // namespace

double trace_dist(const TraceStep& a, const TraceStep& b) {
  return side_from_sides_angle(a.rho, b.rho, wrap_angle(a.theta - b.theta));
}

void export_trace(const WalkTrace& t, std::ostream& os) {
  int flag = (t.valid && !t.truncated) ? 0 : 1;
  char buf[128];
  auto row = [&](int k, const TraceStep& s) {
    std::snprintf(buf, sizeof buf, "%d %.17g %d %.17g %d\n", k, s.rho, s.d_graph, s.theta,
                  flag);
    os << buf;
  };
  for (int i = static_cast<int>(t.past.size()); i-- > 0;) row(-(i + 1), t.past[i]);
  for (size_t k = 0; k < t.fwd.size(); ++k) row(static_cast<int>(k), t.fwd[k]);
}

WalkTrace right_angled_walk(double r, int n_steps, Rng& rng, int past_steps) {
  if (!(r > 0.0)) throw std::invalid_argument("right_angled_walk: r must be positive");
  if (n_steps < 0) throw std::invalid_argument("right_angled_walk: negative step count");
  if (past_steps < 0) past_steps = n_steps;

  // Turns by km quarter turns, km the draw itself; the draw is taken as
  // below(4) - 1 so that the stream maps to turns {-pi/2, 0, pi/2, pi} the
  // same way whichever accounting replays it.
  std::vector<Mobius> raw(4);
  for (int km = 0; km < 4; ++km)
    raw[static_cast<size_t>(km)] =
        Mobius::rotation(0.5 * kPi * km) * Mobius::translation(r);

  WalkTrace t;
  auto run = [&](std::vector<TraceStep>& out, int steps, bool with_start) {
    LatticeWalk w(2, 1, 2, raw);
    if (with_start) out.push_back({0.0, 0.0, 0.0, 0, 0});
    for (int k = 1; k <= steps; ++k) {
      int kv = static_cast<int>(rng.below(4)) - 1;
      w.step((kv + 4) % 4);
      double rho = w.top().sm.dist_o();
      t.route_gap = std::max(t.route_gap, rel_gap(rho, w.top().p2.dist_o()));
      out.push_back(
          {rho, wrap_01_2pi(w.top().sm.angle_o()), r, w.depth(), w.top().id});
    }
  };
  run(t.fwd, n_steps, true);
  run(t.past, past_steps, false);
  t.valid = t.route_gap <= kRouteTolerance;
  return t;
}

TessellationSpec::TessellationSpec(int p_, int q_) : p(p_), q(q_) {
  if (p < 3 || q < 3) throw std::invalid_argument("TessellationSpec: p, q must be >= 3");
  if (q * (p - 2) <= 2 * p)  // 1/p + 1/q < 1/2 in integers
    throw std::invalid_argument("TessellationSpec: tessellation is not hyperbolic");
  r_pq = 2.0 * std::acosh(std::cos(kPi / p) / std::sin(kPi / q));
}

WalkTrace pq_walk(const TessellationSpec& spec, int n_steps, Rng& rng, int past_steps) {
  if (n_steps < 0) throw std::invalid_argument("pq_walk: negative step count");
  if (past_steps < 0) past_steps = n_steps;
  const int q = spec.q;
  const double r = spec.r_pq;

  std::vector<Mobius> raw(static_cast<size_t>(q));
  for (int k = 0; k < q; ++k)
    raw[static_cast<size_t>(k)] = Mobius::rotation(2.0 * kPi * k / q) *
                                  Mobius::translation(r) * Mobius::rotation(kPi);

  WalkTrace t;
  auto run = [&](std::vector<TraceStep>& out, int steps, bool with_start) {
    LatticeWalk w(q, 2, 0, raw);
    if (with_start) out.push_back({0.0, 0.0, 0.0, 0, 0});
    for (int k = 1; k <= steps; ++k) {
      int kv = static_cast<int>(rng.below(static_cast<uint64_t>(q)));
      w.step(kv);
      double rho = w.top().sm.dist_o();
      double theta = wrap_01_2pi(w.top().sm.angle_o());
      t.route_gap = std::max(t.route_gap, rel_gap(rho, w.top().p2.dist_o()));
      out.push_back({rho, theta, r, k, polar_site(rho, theta)});
    }
  };
  run(t.fwd, n_steps, true);
  run(t.past, past_steps, false);
  t.valid = t.route_gap <= kRouteTolerance;
  return t;
}

void right_angled_endpoints(double r, int n_steps, int m, Rng& rng,
                            std::vector<uint64_t>& out) {
  if (!(r > 0.0)) throw std::invalid_argument("right_angled_endpoints: r must be positive");
  if (n_steps < 1 || m < 0)
    throw std::invalid_argument("right_angled_endpoints: bad batch shape");
  std::vector<Mobius> raw(4);
  for (int km = 0; km < 4; ++km)
    raw[static_cast<size_t>(km)] =
        Mobius::rotation(0.5 * kPi * km) * Mobius::translation(r);
  LatticeWalk w(2, 1, 2, raw);
  out.reserve(out.size() + static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    w.reset();
    for (int k = 0; k < n_steps; ++k) {
      int kv = static_cast<int>(rng.below(4)) - 1;
      w.step((kv + 4) % 4);
    }
    out.push_back(w.top().id);
  }
}

void pq_endpoints(const TessellationSpec& spec, int n_steps, int m, Rng& rng,
                  std::vector<uint64_t>& out) {
  if (n_steps < 1 || m < 0) throw std::invalid_argument("pq_endpoints: bad batch shape");
  const int q = spec.q;
  const double r = spec.r_pq;
  std::vector<Mobius> raw(static_cast<size_t>(q));
  for (int k = 0; k < q; ++k)
    raw[static_cast<size_t>(k)] = Mobius::rotation(2.0 * kPi * k / q) *
                                  Mobius::translation(r) * Mobius::rotation(kPi);
  LatticeWalk w(q, 2, 0, raw);
  out.reserve(out.size() + static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    w.reset();
    for (int k = 0; k < n_steps; ++k)
      w.step(static_cast<int>(rng.below(static_cast<uint64_t>(q))));
    double rho = w.top().sm.dist_o();
    out.push_back(polar_site(rho, wrap_01_2pi(w.top().sm.angle_o())));
  }
}

MatrixDist MatrixDist::uniform(std::vector<std::array<double, 4>> ms) {
  MatrixDist d;
  d.probs.assign(ms.size(), 1.0 / static_cast<double>(ms.size()));
  d.mats = std::move(ms);
  return d;
}

void MatrixDist::validate() const {
  if (mats.empty() || mats.size() != probs.size())
    throw std::invalid_argument("MatrixDist: empty or mismatched support");
  double sum = 0.0;
  for (size_t i = 0; i < mats.size(); ++i) {
    const auto& m = mats[i];
    double det = m[0] * m[3] - m[1] * m[2];
    if (std::fabs(det - 1.0) > 1e-10)
      throw std::invalid_argument("MatrixDist: matrix is not unit-determinant");
    if (!(probs[i] >= 0.0)) throw std::invalid_argument("MatrixDist: negative probability");
    sum += probs[i];
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("MatrixDist: probabilities do not sum to 1");
}

std::array<double, 4> sample_matrix(const MatrixDist& dist, Rng& rng) {
  double u = rng.u01();
  double acc = 0.0;
  for (size_t i = 0; i < dist.mats.size(); ++i) {
    acc += dist.probs[i];
    if (u < acc) return dist.mats[i];
  }
  return dist.mats.back();
}

std::pair<double, double> apply_direction(const std::array<double, 4>& m, double angle) {
  double x = std::cos(angle), y = std::sin(angle);
  double wx = m[0] * x + m[1] * y;
  double wy = m[2] * x + m[3] * y;
  return {proj_angle(wx, wy), std::log(std::hypot(wx, wy))};
}

// The disk-model twin of a matrix: conjugating SL(2, R) on the half-plane by
// the Cayley map gives the SU(1, 1) pair below, and the hyperbolic
// displacement d(o, A(o)) equals sqrt(2) times the quotient-metric distance.
// Composing these as scaled pairs is the independent route the QR
// accumulation is checked against.
static ScaledMobius disk_twin(const std::array<double, 4>& m) {
  Mobius g{{0.5 * (m[0] + m[3]), 0.5 * (m[1] - m[2])},
           {0.5 * (m[0] - m[3]), -0.5 * (m[1] + m[2])}};
  double n = std::sqrt(g.det());
  g.a /= n;
  g.b /= n;
  return ScaledMobius::from(g);
}

MatrixTrace matrix_walk(const MatrixDist& dist, int n_steps, Rng& rng,
                        std::array<double, 2> v0) {
  dist.validate();
  if (n_steps < 0) throw std::invalid_argument("matrix_walk: negative step count");
  if (!(std::hypot(v0[0], v0[1]) > 0.0))
    throw std::invalid_argument("matrix_walk: zero start vector");

  std::vector<ScaledMobius> twin(dist.mats.size());
  for (size_t i = 0; i < dist.mats.size(); ++i) twin[i] = disk_twin(dist.mats[i]);

  MatrixTrace t;
  t.steps.reserve(n_steps + 1);
  // The direction rides along as a unit vector, not an angle: rebuilding
  // cos/sin each step would nudge an exact eigendirection like (0, 1) off
  // itself and the expanding mode then swallows it.
  double nv = std::hypot(v0[0], v0[1]);
  double vx = v0[0] / nv, vy = v0[1] / nv;
  t.steps.push_back({0.0, 0.0, proj_angle(vx, vy), 0.0});

  // Product in QR form: P = Q U with Q in SO(2) and U upper triangular,
  // U = [[e^la, e^la t], [0, e^lc]]; la + lc is pinned back to 0 every step
  // (det P = 1), so sigma_1 sigma_2 = 1 holds exactly and only la leaves
  // order one.
  double q00 = 1.0, q01 = 0.0, q10 = 0.0, q11 = 1.0;
  double la = 0.0, lc = 0.0, tt = 0.0;
  ScaledMobius gd;

  for (int k = 1; k <= n_steps; ++k) {
    double u = rng.u01();
    size_t mi = 0;
    double acc = 0.0;
    for (; mi + 1 < dist.mats.size(); ++mi) {
      acc += dist.probs[mi];
      if (u < acc) break;
    }
    const auto& m = dist.mats[mi];

    double b00 = m[0] * q00 + m[1] * q10, b01 = m[0] * q01 + m[1] * q11;
    double b10 = m[2] * q00 + m[3] * q10, b11 = m[2] * q01 + m[3] * q11;
    double r = std::hypot(b00, b10);
    double c = b00 / r, s = b10 / r;
    double r12 = c * b01 + s * b11;
    double r22 = -s * b01 + c * b11;  // det(B) / r, positive for unimodular input
    if (!(r22 > 0.0)) throw std::runtime_error("matrix_walk: lost unimodularity");
    q00 = c;
    q01 = -s;
    q10 = s;
    q11 = c;
    tt += (r12 / r) * std::exp(lc - la);
    la += std::log(r);
    lc += std::log(r22);
    double drift = la + lc;
    t.det_drift = std::max(t.det_drift, std::fabs(drift));
    la -= 0.5 * drift;
    lc -= 0.5 * drift;

    double log_norm;
    if (lc - la > 150.0) {
      // Past this point g2 * g2 below would overflow; the correction to lc
      // is under e^{-300} anyway.
      log_norm = lc;  // the tracked column is the contracting one by a huge margin
    } else {
      double eps = std::exp(lc - la);
      double g2 = 1.0 + tt * tt + eps * eps;
      log_norm = la + 0.5 * std::log(0.5 * (g2 + std::sqrt(g2 * g2 - 4.0 * eps * eps)));
    }
    double quotient = std::sqrt(2.0) * log_norm;

    double wx = m[0] * vx + m[1] * vy;
    double wy = m[2] * vx + m[3] * vy;
    double wn = std::hypot(wx, wy);
    double gain = std::log(wn);
    vx = wx / wn;
    vy = wy / wn;

    gd = twin[mi] * gd;
    t.route_gap = std::max(t.route_gap, rel_gap(quotient, gd.dist_o() / std::sqrt(2.0)));
    t.steps.push_back({log_norm, quotient, proj_angle(vx, vy), gain});
  }
  t.valid = t.route_gap <= kRouteTolerance;
  return t;
}

PdWalkResult pd_walk_from(VertexGraph& vg, const FieldPoint& root, int n_steps, Rng& rng,
                          int past_steps, int graph_horizon) {
  if (n_steps < 0) throw std::invalid_argument("pd_walk: negative step count");
  if (past_steps < 0) past_steps = n_steps;
  const LazyField& field = vg.field();
  if (field.frame_polar(vg.frame_of(root)).rho > 1e-6)
    throw std::invalid_argument("pd_walk: the root must sit at the global origin");

  PdWalkResult res;
  WalkTrace& t = res.trace;

  try {
    res.root_degree = static_cast<int>(vg.neighbors(root).size());
  } catch (const std::runtime_error&) {
    t.fwd.push_back({0.0, 0.0, 0.0, 0, point_site(root)});
    t.truncated = true;
    return res;
  }

  std::vector<FieldPoint> chain;  // forward vertex handles, for the distance probe
  auto run = [&](std::vector<TraceStep>& out, int steps, bool with_start, bool keep) {
    FieldPoint v = root;
    double rho2 = 0.0;
    if (with_start) out.push_back({0.0, 0.0, 0.0, 0, point_site(root)});
    if (keep) chain.push_back(root);
    for (int k = 1; k <= steps; ++k) {
      const std::vector<FieldPoint>* nb;
      try {
        nb = &vg.neighbors(v);
      } catch (const std::runtime_error&) {
        t.truncated = true;
        break;
      }
      const FieldPoint& w = (*nb)[rng.below(nb->size())];
      double r = dist_o(w.pos);

      AnchoredFrame fv = vg.frame_of(v);
      double nrho2;
      if (rho2 < 1e-12) {
        nrho2 = r;
      } else {
        // Direction back to the global origin in v's frame, via the anchor:
        // the anchor frame is rotation(theta_c) o translation(rho_c), which
        // puts the origin at -tanh(rho_c / 2) in anchor coordinates.  The
        // magnitude saturates at far rings but the angle stays true.
        cplx zo = fv.local.inverse()(
            cplx{-std::tanh(0.5 * field.anchor_rho(fv.anchor.ring)), 0.0});
        double phi = std::fabs(wrap_angle(std::arg(w.pos) - std::arg(zo)));
        nrho2 = side_from_sides_angle(rho2, r, phi);
      }

      GlobalPolar pw = field.frame_polar(vg.frame_of(w));
      t.route_gap = std::max(t.route_gap, rel_gap(pw.rho, nrho2));
      out.push_back({pw.rho, wrap_01_2pi(pw.theta), r, k, point_site(w)});
      if (keep) chain.push_back(w);
      v = w;
      rho2 = nrho2;
    }
  };
  run(t.fwd, n_steps, true, true);
  run(t.past, past_steps, false, false);
  t.valid = t.route_gap <= kRouteTolerance;

  if (graph_horizon > 0 && static_cast<int>(chain.size()) > graph_horizon) {
    res.horizon = graph_horizon;
    try {
      auto d = vg.distance(root, chain[graph_horizon], graph_horizon + 1);
      if (d) res.d_graph_horizon = *d;
    } catch (const std::runtime_error&) {
      // an uncertifiable window inside the search leaves the probe unset
    }
  }
  return res;
}

PdWalkResult pd_walk(const LazyField& field, double lambda, int n_steps, Rng& rng,
                     int past_steps, int graph_horizon) {
  if (!(lambda >= 0.05 && lambda <= 1.0))
    throw std::invalid_argument("pd_walk: lambda outside [0.05, 1]");
  if (n_steps > 200) throw std::invalid_argument("pd_walk: n_steps above 200");
  VertexGraph vg(field, lambda);
  FieldPoint root = vg.plant(cplx{0.0, 0.0}, 0);
  return pd_walk_from(vg, root, n_steps, rng, past_steps, graph_horizon);
}

}  // namespace hwalk
