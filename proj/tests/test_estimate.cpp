#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hwalk/estimate.hpp"

using namespace hwalk;

namespace {

// Straight-line trace: x_k at distance rate*k from the start, graph
// distance climbing by graph_rate per step.
WalkTrace ray_trace(int n, double rate, int graph_rate) {
  WalkTrace t;
  for (int k = 0; k <= n; ++k)
    t.fwd.push_back({rate * k, 0.0, k > 0 ? rate : 0.0, graph_rate * k, 0});
  return t;
}

// One forward step of length t along theta = 0 with the past branch laid
// out on the opposite ray, so every past point scores the step exactly.
WalkTrace collinear_trace(double t, int past_n) {
  WalkTrace tr;
  tr.fwd.push_back({0.0, 0.0, 0.0, 0, 0});
  tr.fwd.push_back({t, 0.0, t, 1, 0});
  for (int i = 0; i < past_n; ++i)
    tr.past.push_back({1.0 + 0.05 * i, kPi, 0.0, 0, 0});
  return tr;
}

double hypot3sigma(const EstimateReport& a, const EstimateReport& b) {
  return 3.0 * std::hypot(a.std_error, b.std_error);
}

}  // namespace

TEST_CASE("weighted report closed forms and refusals") {
  EstimateReport plain = report_from_samples({1.0, 2.0, 3.0, 4.0}, {}, "plain");
  CHECK(plain.value == doctest::Approx(2.5));
  CHECK(plain.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(plain.n_samples == 4);
  CHECK(plain.diagnostics.at("n_eff") == doctest::Approx(4.0));

  EstimateReport wtd = report_from_samples({1.0, 2.0}, {1.0, 3.0}, "wtd");
  CHECK(wtd.value == doctest::Approx(1.75));
  CHECK(wtd.diagnostics.at("n_eff") == doctest::Approx(1.6));
  CHECK(wtd.std_error == doctest::Approx(std::sqrt(0.0703125 * 1.6 / 0.6)));

  CHECK_THROWS_AS(report_from_samples({1.0, 2.0}, {1.0}, "m"), std::invalid_argument);
  CHECK_THROWS_AS(report_from_samples({1.0}, {}, "m"), std::invalid_argument);
  CHECK_THROWS_AS(report_from_samples({1.0, 2.0}, {1.0, -1.0}, "m"), std::invalid_argument);
  CHECK_THROWS_AS(report_from_samples({1.0, 2.0}, {0.0, 0.0}, "m"), std::invalid_argument);
  CHECK_THROWS_AS(report_from_samples({1.0, 2.0, 3.0}, {}, "m", 4), std::invalid_argument);
}

TEST_CASE("direct speed on synthetic traces") {
  std::vector<WalkTrace> traces(40, ray_trace(10, 0.7, 2));
  traces[5].valid = false;
  traces[17].truncated = true;
  traces[30].valid = false;

  EstimateReport amb = speed_kingman(traces);
  CHECK(amb.value == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(amb.std_error < 1e-12);
  CHECK(amb.n_samples == 37);
  CHECK(amb.diagnostics.at("invalid_traces") == doctest::Approx(3.0));
  CHECK(amb.diagnostics.at("n_steps") == doctest::Approx(10.0));

  EstimateReport gr = speed_kingman_graph(traces);
  CHECK(gr.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(gr.std_error < 1e-12);

  std::vector<WalkTrace> few(29, ray_trace(10, 0.7, 2));
  CHECK_THROWS_AS(speed_kingman(few), std::invalid_argument);

  std::vector<WalkTrace> mixed(35, ray_trace(10, 0.7, 2));
  mixed.push_back(ray_trace(11, 0.7, 2));
  CHECK_THROWS_AS(speed_kingman(mixed), std::invalid_argument);

  std::vector<WalkTrace> empty_trace(35);
  for (auto& t : empty_trace) t.fwd.push_back({0.0, 0.0, 0.0, 0, 0});
  CHECK_THROWS_AS(speed_kingman(empty_trace), std::invalid_argument);
}

TEST_CASE("lattice speed clears the translation-length lower bound") {
  Rng rng(61001);
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    std::vector<WalkTrace> traces;
    for (int i = 0; i < 100; ++i) traces.push_back(right_angled_walk(r, 200, rng, 0));
    EstimateReport rep = speed_kingman(traces);
    CHECK(rep.value >= 0.5 * std::log(std::cosh(r)) - 3.0 * rep.std_error);
    CHECK(rep.value <= r + 1e-12);
    CHECK(rep.diagnostics.at("invalid_traces") == doctest::Approx(0.0));
  }
}

TEST_CASE("tree walk graph speed is one half") {
  const double r_tree = 1.7627471740390863;  // 2 acosh(sqrt 2)
  Rng rng(61002);
  std::vector<WalkTrace> traces;
  for (int i = 0; i < 120; ++i) traces.push_back(right_angled_walk(r_tree, 400, rng, 0));
  EstimateReport rep = speed_kingman_graph(traces);
  CHECK(rep.std_error < 0.01);
  CHECK(std::fabs(rep.value - 0.5) <= 3.0 * rep.std_error);
}

TEST_CASE("horofunction speed is exact on collinear traces") {
  std::vector<WalkTrace> traces(3, collinear_trace(0.8, 60));
  EstimateReport rep = speed_furstenberg(traces);
  CHECK(rep.value == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(rep.std_error < 1e-9);
  CHECK(rep.diagnostics.at("past_points") == doctest::Approx(60.0));

  std::vector<WalkTrace> shallow(3, collinear_trace(0.8, 49));
  CHECK_THROWS_AS(speed_furstenberg(shallow), std::invalid_argument);
  CHECK_NOTHROW(speed_furstenberg(shallow, {}, 40));

  std::vector<WalkTrace> no_step(3, collinear_trace(0.8, 60));
  for (auto& t : no_step) t.fwd.resize(1);
  CHECK_THROWS_AS(speed_furstenberg(no_step), std::invalid_argument);
}

TEST_CASE("horofunction and direct speed agree on the lattice") {
  Rng rng(61003);
  std::vector<WalkTrace> traces;
  for (int i = 0; i < 250; ++i) traces.push_back(right_angled_walk(2.0, 150, rng));
  EstimateReport king = speed_kingman(traces);
  EstimateReport fur = speed_furstenberg(traces);
  CHECK(std::fabs(king.value - fur.value) <= hypot3sigma(king, fur));
  CHECK(fur.value > 0.5);
}

TEST_CASE("tessellation speed sits just under the far-field drift") {
  TessellationSpec spec(3, 50);
  Rng rng(777);
  std::vector<WalkTrace> traces;
  for (int i = 0; i < 200; ++i) traces.push_back(pq_walk(spec, 200, rng, 0));
  EstimateReport rep = speed_kingman(traces);
  double far = 2.0 * std::log(std::cosh(0.5 * spec.r_pq));
  CHECK(rep.value >= far - 0.08);
  CHECK(rep.value <= far + 0.02);
}

TEST_CASE("entropy mechanics on synthetic samplers") {
  EntropyConfig cfg;
  cfg.n = 10;
  cfg.m_build = 10000;
  cfg.m_eval = 200;

  EndpointSampler constant = [](uint64_t, int, int m_build, int m_eval,
                                std::vector<uint64_t>& build, std::vector<uint64_t>& eval) {
    build.assign(static_cast<size_t>(m_build), 42u);
    eval.assign(static_cast<size_t>(m_eval), 42u);
  };
  EstimateReport c = entropy(constant, cfg, 9);
  CHECK(c.value == doctest::Approx(0.0));
  CHECK(c.std_error == doctest::Approx(0.0));
  CHECK(c.n_samples == 20);
  CHECK(c.diagnostics.at("coverage") == doctest::Approx(1.0));
  CHECK(c.diagnostics.at("biased_high") == doctest::Approx(0.0));

  // Every second eval endpoint was never built: it is charged 1/m_build,
  // so the mean is log(m_build)/(2n) and the coverage flag trips.
  EndpointSampler half_miss = [](uint64_t, int, int m_build, int m_eval,
                                 std::vector<uint64_t>& build, std::vector<uint64_t>& eval) {
    build.assign(static_cast<size_t>(m_build), 7u);
    eval.clear();
    for (int i = 0; i < m_eval; ++i) eval.push_back(i % 2 == 0 ? 7u : 1000u + i);
  };
  EstimateReport h = entropy(half_miss, cfg, 9);
  CHECK(h.value == doctest::Approx(std::log(10000.0) / 20.0));
  CHECK(h.diagnostics.at("coverage") == doctest::Approx(0.5));
  CHECK(h.diagnostics.at("coverage_min") == doctest::Approx(0.5));
  CHECK(h.diagnostics.at("biased_high") == doctest::Approx(1.0));

  EntropyConfig bad = cfg;
  bad.environments = 19;
  CHECK_THROWS_AS(entropy(constant, bad, 9), std::invalid_argument);
  bad = cfg;
  bad.m_build = 9999;
  CHECK_THROWS_AS(entropy(constant, bad, 9), std::invalid_argument);
  bad = cfg;
  bad.m_eval = 99;
  CHECK_THROWS_AS(entropy(constant, bad, 9), std::invalid_argument);

  EndpointSampler short_batch = [](uint64_t, int, int m_build, int m_eval,
                                   std::vector<uint64_t>& build, std::vector<uint64_t>& eval) {
    build.assign(static_cast<size_t>(m_build) - 1, 1u);
    eval.assign(static_cast<size_t>(m_eval), 1u);
  };
  CHECK_THROWS_AS(entropy(short_batch, cfg, 9), std::runtime_error);
}

TEST_CASE("endpoint samplers are deterministic per environment") {
  const double r_tree = 1.7627471740390863;
  EndpointSampler lat = lattice_endpoint_sampler(r_tree);
  std::vector<uint64_t> b1, e1, b2, e2;
  lat(555, 6, 300, 80, b1, e1);
  lat(555, 6, 300, 80, b2, e2);
  CHECK(b1.size() == 300);
  CHECK(e1.size() == 80);
  CHECK(b1 == b2);
  CHECK(e1 == e2);
  CHECK(b1 != e1);  // build and eval draw from disjoint streams

  EndpointSampler tes = tessellation_endpoint_sampler(TessellationSpec(3, 7));
  std::vector<uint64_t> tb, te;
  tes(556, 6, 120, 40, tb, te);
  CHECK(tb.size() == 120);
  CHECK(te.size() == 40);

  EndpointSampler fld = field_endpoint_sampler(0.3);
  std::vector<uint64_t> fb1, fe1, fb2, fe2;
  fld(557, 2, 40, 12, fb1, fe1);
  fld(557, 2, 40, 12, fb2, fe2);
  CHECK(fb1.size() == 40);
  CHECK(fe1.size() == 12);
  CHECK(fb1 == fb2);
  CHECK(fe1 == fe2);
}

TEST_CASE("tree entropy extrapolates to the known rate") {
  const double r_tree = 1.7627471740390863;
  EntropyConfig cfg;
  cfg.n = 4;
  cfg.m_build = 20000;
  cfg.m_eval = 2000;
  EstimateReport rep = entropy_extrapolated(lattice_endpoint_sampler(r_tree), cfg, 31001);
  // The plug-in rate keeps a small positive finite-length residual at
  // these short lengths, so the band is wider than 3 sigma around
  // (1/2) log 3 = 0.5493.
  CHECK(rep.value > 0.48);
  CHECK(rep.value < 0.67);
  CHECK(rep.std_error < 0.03);
  CHECK(rep.n_samples == 60);
  CHECK(rep.diagnostics.at("coverage") > 0.99);
  CHECK(rep.diagnostics.at("biased_high") == doctest::Approx(0.0));
  // The raw plug-in rate decreases toward the limit as lengths grow.
  CHECK(rep.diagnostics.at("h_n1") > rep.diagnostics.at("h_n2"));
  CHECK(rep.diagnostics.at("h_n2") > rep.diagnostics.at("h_n3"));
}

TEST_CASE("lyapunov exponents vanish on rotations and agree on a hyperbolic pair") {
  MatrixDist rots = MatrixDist::uniform({
      {std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3)},
      {std::cos(1.1), -std::sin(1.1), std::sin(1.1), std::cos(1.1)},
  });
  Rng rng(61004);
  std::vector<MatrixTrace> rot_traces;
  for (int i = 0; i < 40; ++i) rot_traces.push_back(matrix_walk(rots, 50, rng));
  EstimateReport rd = lyapunov_direct(rot_traces);
  CHECK(std::fabs(rd.value) <= 0.01);
  EstimateReport rf = lyapunov_furstenberg(rots, 400, 50, 61005);
  CHECK(std::fabs(rf.value) <= 0.01);
  EstimateReport rq = matrix_quotient_speed(rot_traces);
  CHECK(std::fabs(rq.value) <= 0.01);

  MatrixDist pair = MatrixDist::uniform({
      {2.0, 1.0, 1.0, 1.0},
      {1.0, 1.0, 1.0, 2.0},
  });
  std::vector<MatrixTrace> traces;
  for (int i = 0; i < 300; ++i) traces.push_back(matrix_walk(pair, 300, rng));
  EstimateReport direct = lyapunov_direct(traces);
  EstimateReport fur = lyapunov_furstenberg(pair, 4000, 400, 61006);
  CHECK(direct.value > 0.5);
  CHECK(std::fabs(direct.value - fur.value) <= hypot3sigma(direct, fur));

  EstimateReport quot = matrix_quotient_speed(traces);
  double target = std::sqrt(2.0) * direct.value;
  double band = 3.0 * std::hypot(quot.std_error, std::sqrt(2.0) * direct.std_error);
  CHECK(std::fabs(quot.value - target) <= band);

  CHECK_THROWS_AS(lyapunov_furstenberg(pair, 1, 50, 1), std::invalid_argument);
  CHECK_THROWS_AS(lyapunov_furstenberg(pair, 100, 0, 1), std::invalid_argument);
}

TEST_CASE("correlation dimension of uniform and atomic boundary samples") {
  Rng rng(61007);
  BoundarySample uni;
  uni.truncation_bound = 1e-4;
  for (int i = 0; i < 20000; ++i) uni.angles.push_back(rng.u01() * 2.0 * kPi);
  std::vector<double> scales;
  for (int j = 0; j < 8; ++j)
    scales.push_back(1.5e-3 * std::pow(0.09 / 1.5e-3, j / 7.0));
  EstimateReport u = dimension_correlation(uni, scales);
  CHECK(std::fabs(u.value - 1.0) <= 0.05);
  CHECK(u.n_samples == 20000);
  CHECK(u.diagnostics.at("n_scales") == doctest::Approx(8.0));
  CHECK(u.diagnostics.at("scale_min") >= 10.0 * uni.truncation_bound);

  BoundarySample atom;
  atom.truncation_bound = 1e-4;
  atom.angles.assign(10000, 1.234);
  EstimateReport a = dimension_correlation(atom, scales);
  CHECK(a.value == doctest::Approx(0.0));
  CHECK(a.std_error == doctest::Approx(0.0));

  BoundarySample small = uni;
  small.angles.resize(9999);
  CHECK_THROWS_AS(dimension_correlation(small, scales), std::invalid_argument);

  BoundarySample coarse = uni;
  coarse.truncation_bound = 0.05;  // usable window [0.5, 0.1] is empty
  CHECK_THROWS_AS(dimension_correlation(coarse, scales), std::invalid_argument);
}

TEST_CASE("weighted ks distance and effective sizes") {
  Rng rng(61008);
  std::vector<double> a;
  for (int i = 0; i < 500; ++i) a.push_back(rng.u01());

  KsResult same = weighted_ks(a, {}, a, {});
  CHECK(same.d_stat == doctest::Approx(0.0));
  CHECK(same.pass);
  CHECK(same.n_eff_a == doctest::Approx(500.0));
  CHECK(same.threshold == doctest::Approx(1.8177 * std::sqrt(1000.0 / 250000.0)));

  std::vector<double> big, shifted;
  for (int i = 0; i < 1000; ++i) {
    double x = rng.u01();
    big.push_back(x);
    shifted.push_back(x + 0.15);
  }
  CHECK_FALSE(weighted_ks(big, {}, shifted, {}).pass);

  // Integer weights mean the same thing as duplicated points.
  std::vector<double> twice(a), dup(a);
  dup.insert(dup.end(), a.begin(), a.end());
  KsResult w2 = weighted_ks(twice, std::vector<double>(500, 2.0), dup, {});
  CHECK(w2.d_stat == doctest::Approx(0.0));
  CHECK(w2.n_eff_a == doctest::Approx(500.0));
  CHECK(w2.n_eff_b == doctest::Approx(1000.0));

  CHECK_THROWS_AS(weighted_ks({}, {}, a, {}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_ks(a, {1.0}, a, {}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_ks({1.0, 2.0}, {1.0, -1.0}, a, {}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_ks({1.0, 2.0}, {0.0, 0.0}, a, {}), std::invalid_argument);
}

TEST_CASE("pd step distances are stationary under degree bias") {
  std::vector<double> first, second, w;
  int dropped = 0;
  for (int i = 0; i < 120; ++i) {
    LazyField field(81000 + i, 0.3);
    Rng rng(mix64(3100, static_cast<uint64_t>(i)));
    PdWalkResult res = pd_walk(field, 0.3, 2, rng, 0);
    if (!res.trace.valid || res.trace.truncated) {
      ++dropped;
      continue;
    }
    first.push_back(res.trace.fwd[1].rho);
    second.push_back(res.trace.fwd[2].step_len);
    w.push_back(static_cast<double>(res.root_degree));
  }
  CHECK(dropped <= 5);
  REQUIRE(first.size() >= 100);
  KsResult ks = weighted_ks(first, w, second, w);
  CHECK(ks.pass);
}
