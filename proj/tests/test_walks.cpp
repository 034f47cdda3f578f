#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hwalk/walks.hpp"

using namespace hwalk;

namespace {

cplx from_polar(double rho, double theta) {
  return std::polar(std::tanh(0.5 * rho), theta);
}

double circ_gap(double a, double b) { return std::fabs(wrap_angle(a - b)); }

struct MeanSe {
  double mean{0};
  double se{0};
};

MeanSe mean_se(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

// Walking the boundary of one face closes up: p repeats of edge translation
// followed by the exterior turn pi - 2 pi / q come back to the identity.
Mobius face_closure(int p, int q, double r) {
  Mobius step = Mobius::translation(r) * Mobius::rotation(kPi - 2.0 * kPi / q);
  Mobius g;
  for (int i = 0; i < p; ++i) g = g * step;
  return g;
}

}  // namespace

TEST_CASE("tessellation side lengths satisfy the face construction") {
  CHECK(TessellationSpec(3, 7).r_pq == doctest::Approx(1.0905496635070871).epsilon(1e-15));
  CHECK(TessellationSpec(3, 20).r_pq == doctest::Approx(3.6593916823139514).epsilon(1e-15));
  CHECK(TessellationSpec(3, 50).r_pq == doctest::Approx(5.5279700146355966).epsilon(1e-15));
  CHECK(TessellationSpec(4, 5).r_pq == doctest::Approx(1.2537393258123561).epsilon(1e-15));

  for (auto [p, q] : {std::pair{3, 7}, {4, 5}, {3, 50}, {7, 3}, {5, 4}}) {
    TessellationSpec spec(p, q);
    Mobius g = face_closure(p, q, spec.r_pq);
    CHECK(std::abs(g(cplx{0, 0})) < 1e-9);
    CHECK(std::abs(g(cplx{0.3, 0.1}) - cplx{0.3, 0.1}) < 1e-9);
    Mobius bad = face_closure(p, q, spec.r_pq + 0.01);
    CHECK(std::abs(bad(cplx{0, 0})) > 1e-4);
  }

  // Triangle faces are equilateral with vertex angle 2 pi / q.
  for (int q : {7, 20, 50}) {
    TessellationSpec spec(3, q);
    cplx b = Mobius::translation(spec.r_pq)(cplx{0, 0});
    cplx c = Mobius::rotation(2.0 * kPi / q)(b);
    CHECK(dist(b, c) == doctest::Approx(spec.r_pq).epsilon(1e-12));
  }

  CHECK_THROWS_AS(TessellationSpec(3, 6), std::invalid_argument);
  CHECK_THROWS_AS(TessellationSpec(4, 4), std::invalid_argument);
  CHECK_THROWS_AS(TessellationSpec(3, 2), std::invalid_argument);
}

TEST_CASE("quarter-turn walk trace mechanics") {
  Rng rng(401);
  WalkTrace t = right_angled_walk(2.0, 200, rng);
  REQUIRE(t.fwd.size() == 201);
  REQUIRE(t.past.size() == 200);
  CHECK(t.valid);
  CHECK(t.route_gap < 1e-9);
  CHECK(t.fwd[0].rho == 0.0);
  CHECK(t.fwd[0].d_graph == 0);
  for (size_t k = 1; k < t.fwd.size(); ++k) {
    const TraceStep& s = t.fwd[k];
    CHECK(s.step_len == 2.0);
    CHECK(s.theta >= 0.0);
    CHECK(s.theta < 2.0 * kPi);
    CHECK(std::fabs(s.rho - t.fwd[k - 1].rho) <= 2.0 + 1e-9);
    CHECK(std::abs(s.d_graph - t.fwd[k - 1].d_graph) == 1);
    CHECK(s.d_graph >= 0);
  }
  for (const TraceStep& s : t.past) {
    CHECK(s.theta >= 0.0);
    CHECK(s.theta < 2.0 * kPi);
  }

  WalkTrace t0 = right_angled_walk(2.0, 0, rng);
  CHECK(t0.fwd.size() == 1);
  CHECK(t0.past.empty());

  CHECK_THROWS_AS(right_angled_walk(0.0, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(right_angled_walk(1.0, -1, rng), std::invalid_argument);
}

TEST_CASE("quarter-turn positions replay through plain isometries") {
  // Same seed, same draws: rebuild the positions by direct Mobius products
  // and compare every recorded coordinate and pairwise distance.
  const double r = 2.0;
  const int n = 8;
  Rng rng(402);
  WalkTrace t = right_angled_walk(r, n, rng, 0);

  Rng replay(402);
  std::vector<cplx> zs{cplx{0, 0}};
  Mobius g;
  for (int k = 0; k < n; ++k) {
    int kv = static_cast<int>(replay.below(4)) - 1;
    g = g * (Mobius::rotation(0.5 * kPi * kv) * Mobius::translation(r));
    zs.push_back(g(cplx{0, 0}));
  }
  for (int k = 0; k <= n; ++k) {
    CHECK(t.fwd[k].rho == doctest::Approx(dist_o(zs[k])).epsilon(1e-11));
    if (t.fwd[k].rho > 1e-9)
      CHECK(circ_gap(t.fwd[k].theta, std::arg(zs[k])) < 1e-10);
  }
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      CHECK(trace_dist(t.fwd[i], t.fwd[j]) ==
            doctest::Approx(dist(zs[i], zs[j])).epsilon(1e-9));
}

TEST_CASE("tree vertex identities agree with positions and graph metric") {
  const double r_tree = 1.7627471740390863;  // 2 acosh(sqrt 2)
  Rng rng(403);

  std::map<uint64_t, cplx> seen;
  std::map<uint64_t, std::vector<uint64_t>> adj;
  std::vector<WalkTrace> traces;
  for (int w = 0; w < 400; ++w) {
    WalkTrace t = right_angled_walk(r_tree, 8, rng, 0);
    REQUIRE(t.valid);
    for (size_t k = 0; k < t.fwd.size(); ++k) {
      const TraceStep& s = t.fwd[k];
      cplx z = from_polar(s.rho, s.theta);
      auto [it, fresh] = seen.emplace(s.site, z);
      if (!fresh) CHECK(std::abs(it->second - z) < 1e-9);
      if (k > 0) {
        adj[t.fwd[k - 1].site].push_back(s.site);
        adj[s.site].push_back(t.fwd[k - 1].site);
      }
    }
    traces.push_back(std::move(t));
  }

  // Distinct identities sit at distinct tessellation sites, never closer
  // than one edge length.
  std::vector<cplx> pts;
  pts.reserve(seen.size());
  for (auto& [site, z] : seen) pts.push_back(z);
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      CHECK(dist(pts[i], pts[j]) > r_tree - 1e-6);

  // d_graph matches breadth-first distance in the empirically observed graph.
  auto bfs = [&](uint64_t from, uint64_t to) {
    std::map<uint64_t, int> d{{from, 0}};
    std::queue<uint64_t> q;
    q.push(from);
    while (!q.empty()) {
      uint64_t v = q.front();
      q.pop();
      if (v == to) return d[v];
      for (uint64_t w : adj[v])
        if (!d.count(w)) {
          d[w] = d[v] + 1;
          q.push(w);
        }
    }
    return -1;
  };
  for (int w = 0; w < 40; ++w)
    for (size_t k = 0; k < traces[w].fwd.size(); ++k)
      CHECK(bfs(0, traces[w].fwd[k].site) == traces[w].fwd[k].d_graph);
}

TEST_CASE("graph drift on the embedded tree settles at one half") {
  const double r_tree = 1.7627471740390863;
  const int n = 2000;
  Rng rng(404);
  std::vector<double> xs;
  for (int w = 0; w < 300; ++w) {
    WalkTrace t = right_angled_walk(r_tree, n, rng, 0);
    REQUIRE(t.valid);
    xs.push_back(static_cast<double>(t.fwd[n].d_graph) / n);
  }
  auto [m, se] = mean_se(xs);
  CHECK(se < 0.002);
  CHECK(std::fabs(m - 0.5) < 3.0 * se);
}

TEST_CASE("quarter-turn ambient speed clears the cosh bound") {
  Rng rng(405);
  for (double r : {0.5, 2.0, 6.0}) {
    const int n = 200;
    std::vector<double> xs;
    for (int w = 0; w < 80; ++w) {
      WalkTrace t = right_angled_walk(r, n, rng, 0);
      REQUIRE(t.valid);
      xs.push_back(t.fwd[n].rho / n);
    }
    auto [m, se] = mean_se(xs);
    CHECK(m >= 0.5 * log_cosh(r) - 3.0 * se);
    CHECK(m <= r + 1e-12);
  }
}

TEST_CASE("boundary angle converges along the walk") {
  // Compare the angle at n steps with the angle at 2n steps; once n is past
  // the initial transient the gap falls under e^{-l n / 2} for nearly every
  // trace.
  const int n = 64;
  Rng rng(406);
  std::vector<WalkTrace> traces;
  double speed = 0;
  for (int w = 0; w < 300; ++w) {
    traces.push_back(right_angled_walk(2.0, 2 * n, rng, 0));
    speed += traces.back().fwd[2 * n].rho / (2 * n);
  }
  speed /= 300.0;
  double bound = std::exp(-0.5 * speed * n);
  int ok = 0;
  for (const WalkTrace& t : traces)
    if (circ_gap(t.fwd[n].theta, t.fwd[2 * n].theta) <= bound) ++ok;
  CHECK(ok >= 285);
}

TEST_CASE("tessellation walk stays on the vertex set") {
  TessellationSpec spec(3, 7);
  Rng rng(407);

  WalkTrace t = pq_walk(spec, 200, rng);
  REQUIRE(t.fwd.size() == 201);
  REQUIRE(t.past.size() == 200);
  CHECK(t.valid);
  CHECK(t.route_gap < 1e-8);
  for (size_t k = 1; k < t.fwd.size(); ++k) {
    CHECK(t.fwd[k].step_len == spec.r_pq);
    CHECK(t.fwd[k].d_graph == static_cast<int>(k));
    CHECK(std::fabs(t.fwd[k].rho - t.fwd[k - 1].rho) <= spec.r_pq + 1e-9);
  }

  // Positions across many walks either coincide (same site) or sit at least
  // one edge length apart, and some recorded pair is exactly adjacent.
  std::map<uint64_t, cplx> seen;
  double min_gap = 1e300;
  for (int w = 0; w < 200; ++w) {
    WalkTrace u = pq_walk(spec, 6, rng, 0);
    REQUIRE(u.valid);
    for (const TraceStep& s : u.fwd) {
      cplx z = from_polar(s.rho, s.theta);
      auto [it, fresh] = seen.emplace(s.site, z);
      if (!fresh) CHECK(std::abs(it->second - z) < 1e-9);
    }
  }
  std::vector<cplx> pts;
  for (auto& [site, z] : seen) pts.push_back(z);
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) min_gap = std::min(min_gap, dist(pts[i], pts[j]));
  CHECK(min_gap > spec.r_pq - 1e-6);
  CHECK(min_gap < spec.r_pq + 1e-6);
}

TEST_CASE("tessellation step convention backtracks for odd q") {
  // With the trailing half-turn, following any step by the k = 0 step undoes
  // it.  The literal turn-and-translate step admits no two-step return at
  // all when q is odd, which is why the half-turn is part of the step.
  TessellationSpec spec(3, 7);
  const double r = spec.r_pq;
  std::vector<Mobius> flip(7), plain(7);
  for (int k = 0; k < 7; ++k) {
    Mobius turn = Mobius::rotation(2.0 * kPi * k / 7.0);
    plain[k] = turn * Mobius::translation(r);
    flip[k] = plain[k] * Mobius::rotation(kPi);
  }
  double worst_return = 0;
  double best_plain = 1e300;
  for (int k1 = 0; k1 < 7; ++k1) {
    worst_return = std::max(worst_return, std::abs((flip[k1] * flip[0])(cplx{0, 0})));
    for (int k2 = 0; k2 < 7; ++k2)
      best_plain = std::min(best_plain, std::abs((plain[k1] * plain[k2])(cplx{0, 0})));
  }
  CHECK(worst_return < 1e-12);
  CHECK(best_plain > 0.1);
}

TEST_CASE("tessellation positions replay through plain isometries") {
  for (auto [q, n, tol] : {std::tuple{7, 10, 1e-10}, {50, 3, 1e-7}}) {
    TessellationSpec spec(3, q);
    Rng rng(408);
    WalkTrace t = pq_walk(spec, n, rng, 0);

    Rng replay(408);
    Mobius g;
    std::vector<cplx> zs{cplx{0, 0}};
    for (int k = 0; k < n; ++k) {
      int kv = static_cast<int>(replay.below(static_cast<uint64_t>(q)));
      g = g * (Mobius::rotation(2.0 * kPi * kv / q) * Mobius::translation(spec.r_pq) *
               Mobius::rotation(kPi));
      zs.push_back(g(cplx{0, 0}));
    }
    for (int k = 0; k <= n; ++k) {
      CHECK(t.fwd[k].rho == doctest::Approx(dist_o(zs[k])).epsilon(tol));
      if (t.fwd[k].rho > 1e-9) CHECK(circ_gap(t.fwd[k].theta, std::arg(zs[k])) < tol);
    }
    for (int k = 1; k <= n; ++k)
      CHECK(dist(zs[k - 1], zs[k]) == doctest::Approx(spec.r_pq).epsilon(1e-9));
    for (int i = 0; i + 1 <= n; ++i)
      CHECK(trace_dist(t.fwd[i], t.fwd[i + 1]) ==
            doctest::Approx(spec.r_pq).epsilon(1e-6));
  }
}

TEST_CASE("matrix distribution validation") {
  MatrixDist good = MatrixDist::uniform({{{2, 1, 1, 1}}, {{1, 1, 1, 2}}});
  good.validate();

  MatrixDist bad_det = MatrixDist::uniform({{{2, 0, 0, 1}}});
  CHECK_THROWS_AS(bad_det.validate(), std::invalid_argument);

  MatrixDist bad_probs = good;
  bad_probs.probs = {0.5, 0.4};
  CHECK_THROWS_AS(bad_probs.validate(), std::invalid_argument);

  MatrixDist empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("direction action of rotations and diagonals") {
  for (double phi : {0.3, 1.1, 2.9}) {
    std::array<double, 4> rot{std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi)};
    for (double a : {0.0, 0.7, 2.0}) {
      auto [na, gain] = apply_direction(rot, a);
      double expect = std::fmod(a + phi, kPi);
      CHECK(circ_gap(2.0 * na, 2.0 * expect) < 1e-12);  // compare in RP^1
      CHECK(std::fabs(gain) < 1e-12);
    }
  }
  std::array<double, 4> diag{std::exp(1.0), 0, 0, std::exp(-1.0)};
  CHECK(apply_direction(diag, 0.0).second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(apply_direction(diag, 0.5 * kPi).second == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("matrix walk: rotations stay at the identity coset") {
  auto rot = [](double phi) {
    return std::array<double, 4>{std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi)};
  };
  MatrixDist dist = MatrixDist::uniform({rot(0.7), rot(2.1)});
  Rng rng(409);
  MatrixTrace t = matrix_walk(dist, 400, rng);
  REQUIRE(t.steps.size() == 401);
  CHECK(t.valid);
  CHECK(t.det_drift < 1e-10);
  for (const MatrixStep& s : t.steps) {
    CHECK(std::fabs(s.log_norm) < 1e-8);
    CHECK(std::fabs(s.quotient_d) < 2e-8);
    CHECK(std::fabs(s.log_gain) < 1e-8);
  }
}

TEST_CASE("matrix walk: deterministic diagonal products") {
  // diag(e, 1/e) grows the tracked column; diag(1/e, e) shrinks it, driving
  // the accumulation through its far-separated branch as well.
  Rng rng(410);
  for (bool reversed : {false, true}) {
    double e1 = reversed ? std::exp(-1.0) : std::exp(1.0);
    MatrixDist dist = MatrixDist::uniform({{{e1, 0, 0, 1.0 / e1}}});
    MatrixTrace t = matrix_walk(dist, 400, rng);
    CHECK(t.valid);
    CHECK(t.det_drift < 1e-9);
    for (int k = 0; k <= 400; ++k) {
      CHECK(t.steps[k].log_norm == doctest::Approx(k).epsilon(1e-12));
      CHECK(t.steps[k].quotient_d ==
            doctest::Approx(std::sqrt(2.0) * k).epsilon(1e-12));
    }
  }

  MatrixDist dist = MatrixDist::uniform({{{std::exp(1.0), 0, 0, std::exp(-1.0)}}});
  MatrixTrace along = matrix_walk(dist, 50, rng, {1.0, 0.0});
  MatrixTrace across = matrix_walk(dist, 50, rng, {0.0, 1.0});
  for (int k = 1; k <= 50; ++k) {
    CHECK(along.steps[k].log_gain == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(along.steps[k].v_angle == doctest::Approx(0.0));
    CHECK(across.steps[k].log_gain == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(across.steps[k].v_angle == doctest::Approx(0.5 * kPi).epsilon(1e-12));
  }
}

TEST_CASE("matrix walk: growth rate is seed-stable") {
  MatrixDist dist = MatrixDist::uniform({{{2, 1, 1, 1}}, {{1, 1, 1, 2}}});
  const int n = 400;
  std::vector<MeanSe> runs;
  for (uint64_t seed : {411u, 412u, 413u}) {
    Rng rng(seed);
    std::vector<double> xs;
    for (int w = 0; w < 80; ++w) {
      MatrixTrace t = matrix_walk(dist, n, rng);
      REQUIRE(t.valid);
      CHECK(t.det_drift < 1e-9);
      xs.push_back(t.steps[n].log_norm / n);
    }
    runs.push_back(mean_se(xs));
  }
  for (size_t i = 0; i < runs.size(); ++i)
    for (size_t j = i + 1; j < runs.size(); ++j)
      CHECK(std::fabs(runs[i].mean - runs[j].mean) <
            3.0 * std::hypot(runs[i].se, runs[j].se));
  CHECK(runs[0].mean > 0.1);  // genuinely expanding products
}

TEST_CASE("field walk on the certified graph") {
  LazyField field(42001, 1.0);
  Rng rng(414);

  PdWalkResult r0 = pd_walk(field, 1.0, 0, rng);
  CHECK(r0.trace.fwd.size() == 1);
  CHECK(r0.root_degree >= 3);

  PdWalkResult res = pd_walk(field, 1.0, 10, rng, 10, 4);
  const WalkTrace& t = res.trace;
  REQUIRE(!t.truncated);
  REQUIRE(t.fwd.size() == 11);
  REQUIRE(t.past.size() == 10);
  CHECK(t.valid);
  CHECK(t.route_gap <= 1e-6);
  for (size_t k = 1; k < t.fwd.size(); ++k) {
    const TraceStep& s = t.fwd[k];
    CHECK(s.step_len > 0.0);
    CHECK(s.theta >= 0.0);
    CHECK(s.theta < 2.0 * kPi);
    CHECK(std::fabs(s.rho - t.fwd[k - 1].rho) <= s.step_len + 1e-9);
    CHECK(s.d_graph == static_cast<int>(k));
  }
  CHECK(res.horizon == 4);
  CHECK(res.d_graph_horizon >= 0);
  CHECK(res.d_graph_horizon <= 4);

  // Same field, same seed: the draw sequence and the graph are both
  // deterministic, so the trace reproduces bitwise.
  Rng ra(77), rb(77);
  PdWalkResult a = pd_walk(field, 1.0, 8, ra, 0);
  PdWalkResult b = pd_walk(field, 1.0, 8, rb, 0);
  REQUIRE(a.trace.fwd.size() == b.trace.fwd.size());
  for (size_t k = 0; k < a.trace.fwd.size(); ++k) {
    CHECK(a.trace.fwd[k].rho == b.trace.fwd[k].rho);
    CHECK(a.trace.fwd[k].theta == b.trace.fwd[k].theta);
    CHECK(a.trace.fwd[k].site == b.trace.fwd[k].site);
  }

  // Shared sites across walks in the same environment carry one position.
  std::map<uint64_t, double> site_rho;
  int overlaps = 0;
  Rng rw(415);
  for (int w = 0; w < 6; ++w) {
    PdWalkResult pr = pd_walk(field, 1.0, 30, rw, 0);
    for (const TraceStep& s : pr.trace.fwd) {
      auto [it, fresh] = site_rho.emplace(s.site, s.rho);
      if (!fresh) {
        CHECK(it->second == doctest::Approx(s.rho).epsilon(1e-9));
        ++overlaps;
      }
    }
  }
  CHECK(overlaps > 0);

  CHECK_THROWS_AS(pd_walk(field, 0.01, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(pd_walk(field, 1.5, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(pd_walk(field, 1.0, 300, rng), std::invalid_argument);
}

TEST_CASE("sparser fields take longer first steps") {
  std::vector<double> lo, hi;
  for (uint64_t i = 0; i < 50; ++i) {
    LazyField fa(50000 + i, 1.0);
    LazyField fb(51000 + i, 1.0);
    Rng ra(i + 1), rb(i + 1);
    lo.push_back(pd_walk(fa, 0.5, 1, ra, 0).trace.fwd[1].rho);
    hi.push_back(pd_walk(fb, 0.1, 1, rb, 0).trace.fwd[1].rho);
  }
  auto a = mean_se(lo), b = mean_se(hi);
  CHECK(b.mean > a.mean + 3.0 * std::hypot(a.se, b.se));
}

TEST_CASE("trace export format") {
  Rng rng(416);
  WalkTrace t = right_angled_walk(1.5, 3, rng, 2);
  std::ostringstream os;
  export_trace(t, os);

  std::istringstream is(os.str());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    rows.push_back(fields);
  }
  REQUIRE(rows.size() == 6);
  int expect_k[] = {-2, -1, 0, 1, 2, 3};
  for (size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 5);
    CHECK(std::stoi(rows[i][0]) == expect_k[i]);
    CHECK(rows[i][4] == "0");
  }
  CHECK(std::stod(rows[2][1]) == 0.0);
  // 17 significant digits round-trip doubles exactly.
  CHECK(std::stod(rows[5][1]) == t.fwd[3].rho);
  CHECK(std::stod(rows[5][3]) == t.fwd[3].theta);
}
