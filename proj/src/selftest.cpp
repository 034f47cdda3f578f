#include "hwalk/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hwalk/estimate.hpp"
#include "hwalk/local_graph.hpp"
#include "hwalk/oracle.hpp"
#include "hwalk/report.hpp"
#include "hwalk/walks.hpp"

namespace hwalk {

namespace {

struct CheckContext {
  std::function<double(double, cplx)> busemann_eval;
};

struct Check {
  const char* name;
  std::function<std::string(const CheckContext&)> run;  // empty = pass
};

std::string fail(const std::string& msg) { return msg; }

std::string check_busemann_rays(const CheckContext& ctx) {
  // Disk coordinates lose ~e^t * eps near the boundary, so the tolerance
  // is absolute 1e-7 out to t = 20; a sign error would miss by 2t.
  for (double t : {0.5, 2.0, 7.0, 20.0})
    for (double theta : {0.0, 1.3, 4.0}) {
      double fwd = ctx.busemann_eval(theta, exp_ray(theta, t));
      if (std::fabs(fwd - t) > 1e-7)
        return fail("toward the boundary point: got " + format_g17(fwd) +
                    ", want " + format_g17(t));
      double bwd = ctx.busemann_eval(theta, exp_ray(theta + kPi, t));
      if (std::fabs(bwd + t) > 1e-7)
        return fail("away from the boundary point: got " + format_g17(bwd) +
                    ", want " + format_g17(-t));
      if (std::fabs(ctx.busemann_eval(theta, cplx{0.0, 0.0})) > 1e-15)
        return fail("not normalized at the origin");
    }
  return "";
}

std::string check_busemann_limit(const CheckContext& ctx) {
  Rng rng(7001);
  for (int i = 0; i < 50; ++i) {
    cplx z = random_in_ball(rng, 3.0);
    double theta = 2.0 * kPi * rng.u01();
    double lim = horofunction_limit(theta, z, 60.0);
    double b = ctx.busemann_eval(theta, z);
    if (std::fabs(lim - b) > 1e-9)
      return fail("horofunction limit " + format_g17(lim) + " vs " + format_g17(b));
  }
  return "";
}

std::string check_cone_containment(const CheckContext& ctx) {
  Rng rng(7002);
  for (double r : {2.0, 6.0, 10.0}) {
    double aperture = cone_angle(r);
    for (int i = 0; i < 2000; ++i) {
      cplx z = random_in_ball(rng, 14.0);
      double theta = 2.0 * kPi * rng.u01();
      double f = ctx.busemann_eval(theta, z) + dist_o(z);
      if (f <= r) continue;
      double gap = std::fabs(wrap_angle(std::arg(z) - theta));
      if (gap > aperture + 1e-9)
        return fail("point with f = " + format_g17(f) + " leaves the cone by " +
                    format_g17(gap - aperture));
    }
  }
  return "";
}

std::string check_volume_profile(const CheckContext&) {
  VolumeProfile vp(2);
  for (double r : {0.5, 2.0, 8.0}) {
    double closed = 2.0 * kPi * (std::cosh(r) - 1.0);
    if (std::fabs(vp.volume(r) - closed) > 1e-9 * closed)
      return fail("V(" + format_g17(r) + ") = " + format_g17(vp.volume(r)) +
                  ", closed form " + format_g17(closed));
    // Simpson integral of the boundary-sphere area.
    int steps = 2000;
    double h = r / steps, acc = 0.0;
    for (int k = 0; k <= steps; ++k) {
      double w = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * vp.density(k * h);
    }
    acc *= h / 3.0;
    if (std::fabs(acc - closed) > 1e-6 * closed)
      return fail("density integral drifts from the volume");
  }
  return "";
}

std::string check_ball_containment(const CheckContext&) {
  Rng rng(7003);
  const double d = 8.0;
  for (int i = 0; i < 300; ++i) {
    cplx p = random_in_ball(rng, 4.0);
    Mobius step = Mobius::translate_to(p) * Mobius::rotation(2.0 * kPi * rng.u01()) *
                  Mobius::translation(d);
    cplx q = step(cplx{0.0, 0.0});
    cplx m = midpoint(p, q);
    Mobius frame = bisector_frame(p, q);
    double s = -30.0 + 60.0 * rng.u01();
    cplx c = frame(cplx{0.0, 1.0} * std::tanh(0.5 * s));
    double radius = dist(c, p);
    if (std::fabs(radius - dist(c, q)) > 1e-8)
      return fail("bisector point not equidistant");
    if (dist(m, c) + ball_intersection_radius(p, q) > radius + 1e-8)
      return fail("disk through the pair misses the midpoint ball at arclength " +
                  format_g17(s));
  }
  return "";
}

std::string check_delaunay_reference(const CheckContext&) {
  Rng rng(7004);
  for (int inst = 0; inst < 25; ++inst) {
    std::vector<cplx> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(random_in_ball(rng, 3.0));
    LocalGraph g = build_local(pts, 0);
    if (g.edges != naive_delaunay(pts))
      return fail("instance " + std::to_string(inst) +
                  " disagrees with the direct construction");
  }
  return "";
}

std::string check_walk_routes(const CheckContext&) {
  Rng rng(7005);
  for (int i = 0; i < 20; ++i) {
    WalkTrace t = right_angled_walk(2.0, 100, rng, 0);
    if (!t.valid || t.route_gap > 1e-9)
      return fail("right-angled trace gap " + format_g17(t.route_gap));
  }
  TessellationSpec spec(3, 7);
  for (int i = 0; i < 20; ++i) {
    WalkTrace t = pq_walk(spec, 100, rng, 0);
    if (!t.valid || t.route_gap > 1e-9)
      return fail("tessellation trace gap " + format_g17(t.route_gap));
  }
  return "";
}

std::string check_edge_probability(const CheckContext&) {
  EdgeProbability ep = edge_probability(1.0, 2.0, 400, 7006);
  VolumeProfile vp(2);
  double lower = std::exp(-vp.volume(1.0));
  if (ep.p_hat < lower - 4.0 * ep.std_err)
    return fail("p_hat " + format_g17(ep.p_hat) + " under the volume bound " +
                format_g17(lower));
  if (ep.p_hat > 1.0) return fail("probability above one");
  return "";
}

std::string check_config_roundtrip(const CheckContext&) {
  Config c = Config::from_string("alpha = 1.5\n# comment\nname=walks \n grid = 1,2.5,4\n");
  Config back = Config::from_string(c.echo());
  if (back.kv != c.kv) return fail("echo does not round-trip");
  if (c.get_num("alpha", 0.0) != 1.5) return fail("numeric getter");
  if (c.get("name", "") != "walks") return fail("string getter");
  std::vector<double> g = c.get_grid("grid", {});
  if (g != std::vector<double>{1.0, 2.5, 4.0}) return fail("grid getter");
  bool threw = false;
  try {
    Config::from_string("no equals sign here\n");
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  if (!threw) return fail("malformed line accepted");
  return "";
}

std::string check_g17_roundtrip(const CheckContext&) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -2.718281828459045}) {
    std::string s = format_g17(x);
    if (std::stod(s) != x) return fail("format loses " + s);
  }
  return "";
}

}  // namespace

int run_selftest(const SelftestInjection& inj, std::ostream& os) {
  CheckContext ctx;
  bool flip = inj.busemann_sign_flip;
  ctx.busemann_eval = [flip](double theta, cplx z) {
    double b = busemann(theta, z);
    return flip ? -b : b;
  };

  const std::vector<Check> checks = {
      {"busemann-ray-values", check_busemann_rays},
      {"busemann-horofunction-limit", check_busemann_limit},
      {"cone-containment", check_cone_containment},
      {"volume-profile", check_volume_profile},
      {"ball-containment", check_ball_containment},
      {"delaunay-reference", check_delaunay_reference},
      {"walk-route-agreement", check_walk_routes},
      {"edge-probability-bound", check_edge_probability},
      {"config-roundtrip", check_config_roundtrip},
      {"float-format-roundtrip", check_g17_roundtrip},
  };

  int failures = 0;
  for (const Check& c : checks) {
    std::string msg = c.run(ctx);
    if (msg.empty()) {
      os << "ok   " << c.name << "\n";
    } else {
      ++failures;
      os << "FAIL " << c.name << ": " << msg << "\n";
    }
  }
  os << "selftest: " << checks.size() << " checks, " << failures << " failed\n";
  return failures;
}

}  // namespace hwalk
