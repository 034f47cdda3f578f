#include "hwalk/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "hwalk/report.hpp"
#include "hwalk/runner.hpp"

namespace hwalk {

namespace {

double effective_n(const std::vector<double>& w) {
  double s = 0.0, s2 = 0.0;
  for (double x : w) {
    s += x;
    s2 += x * x;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

// Pulls the per-trace value xs[i] for every valid trace, carrying the
// matching weight, and enforces the common-n precondition.
struct TraceSamples {
  std::vector<double> xs;
  std::vector<double> ws;
  int n{0};
  int invalid{0};
};

template <typename ValueFn>
TraceSamples collect_traces(const std::vector<WalkTrace>& traces,
                            const std::vector<double>& weights, ValueFn value) {
  if (!weights.empty() && weights.size() != traces.size())
    throw std::invalid_argument("estimate: one weight per trace required");
  TraceSamples s;
  for (size_t i = 0; i < traces.size(); ++i) {
    const WalkTrace& t = traces[i];
    if (!t.valid || t.truncated) {
      ++s.invalid;
      continue;
    }
    int n = static_cast<int>(t.fwd.size()) - 1;
    if (n < 1) throw std::invalid_argument("estimate: empty trace");
    if (s.xs.empty()) s.n = n;
    if (n != s.n) throw std::invalid_argument("estimate: traces must share a common n");
    s.xs.push_back(value(t, n));
    s.ws.push_back(weights.empty() ? 1.0 : weights[i]);
  }
  return s;
}

}  // namespace

std::string report_to_text(const EstimateReport& r) {
  std::ostringstream os;
  os << "method: " << r.method << "\n";
  os << "value: " << format_g17(r.value) << "\n";
  os << "std_error: " << format_g17(r.std_error) << "\n";
  os << "n_samples: " << r.n_samples << "\n";
  for (const auto& [k, v] : r.diagnostics) os << "diag." << k << ": " << format_g17(v) << "\n";
  return os.str();
}

EstimateReport report_from_samples(const std::vector<double>& xs,
                                   const std::vector<double>& ws,
                                   const std::string& method, size_t min_samples) {
  if (!ws.empty() && ws.size() != xs.size())
    throw std::invalid_argument("report_from_samples: mismatched weights");
  if (xs.size() < min_samples || xs.size() < 2)
    throw std::invalid_argument("report_from_samples: too few samples for " + method);
  std::vector<double> w = ws.empty() ? std::vector<double>(xs.size(), 1.0) : ws;
  double wsum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0))
      throw std::invalid_argument("report_from_samples: negative weight");
    wsum += x;
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("report_from_samples: zero total weight");

  double mean = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) mean += w[i] / wsum * xs[i];
  double var = 0.0;  // variance of the weighted mean, before the n_eff correction
  for (size_t i = 0; i < xs.size(); ++i) {
    double wn = w[i] / wsum;
    var += wn * wn * (xs[i] - mean) * (xs[i] - mean);
  }
  double n_eff = effective_n(w);
  double se = n_eff > 1.0 ? std::sqrt(var * n_eff / (n_eff - 1.0)) : std::sqrt(var);

  EstimateReport r;
  r.value = mean;
  r.std_error = se;
  r.n_samples = static_cast<int>(xs.size());
  r.method = method;
  r.diagnostics["n_eff"] = n_eff;
  return r;
}

EstimateReport speed_kingman(const std::vector<WalkTrace>& traces,
                             const std::vector<double>& weights) {
  TraceSamples s = collect_traces(traces, weights, [](const WalkTrace& t, int n) {
    return t.fwd.back().rho / n;
  });
  if (s.xs.size() < 30)
    throw std::invalid_argument("speed_kingman: fewer than 30 valid traces");
  EstimateReport r = report_from_samples(s.xs, s.ws, "speed_kingman");
  r.diagnostics["n_steps"] = s.n;
  r.diagnostics["invalid_traces"] = s.invalid;
  return r;
}

EstimateReport speed_kingman_graph(const std::vector<WalkTrace>& traces,
                                   const std::vector<double>& weights) {
  TraceSamples s = collect_traces(traces, weights, [](const WalkTrace& t, int n) {
    return static_cast<double>(t.fwd.back().d_graph) / n;
  });
  if (s.xs.size() < 30)
    throw std::invalid_argument("speed_kingman_graph: fewer than 30 valid traces");
  EstimateReport r = report_from_samples(s.xs, s.ws, "speed_kingman_graph");
  r.diagnostics["n_steps"] = s.n;
  r.diagnostics["invalid_traces"] = s.invalid;
  return r;
}

EstimateReport speed_furstenberg(const std::vector<WalkTrace>& traces,
                                 const std::vector<double>& weights, size_t min_past) {
  if (!weights.empty() && weights.size() != traces.size())
    throw std::invalid_argument("estimate: one weight per trace required");
  std::vector<double> xs;
  std::vector<double> ws;
  int invalid = 0;
  size_t past_len = 0;
  for (size_t i = 0; i < traces.size(); ++i) {
    const WalkTrace& t = traces[i];
    if (!t.valid || t.truncated) {
      ++invalid;
      continue;
    }
    if (t.past.size() < min_past)
      throw std::invalid_argument("speed_furstenberg: past branch shorter than required");
    if (t.fwd.size() < 2)
      throw std::invalid_argument("speed_furstenberg: missing first forward step");
    past_len = t.past.size();
    double acc = 0.0;
    for (const TraceStep& p : t.past) acc += trace_dist(p, t.fwd[1]) - p.rho;
    xs.push_back(acc / static_cast<double>(t.past.size()));
    ws.push_back(weights.empty() ? 1.0 : weights[i]);
  }
  EstimateReport r = report_from_samples(xs, ws, "speed_furstenberg");
  r.diagnostics["past_points"] = static_cast<double>(past_len);
  r.diagnostics["invalid_traces"] = invalid;
  return r;
}

namespace {

EstimateReport entropy_at(const EndpointSampler& sampler, const EntropyConfig& cfg,
                          int n, uint64_t seed) {
  if (cfg.environments < 20)
    throw std::invalid_argument("entropy: at least 20 environments required");
  if (n <= 30 && cfg.m_build < 10000)
    throw std::invalid_argument("entropy: m_build too small for short walks");
  if (cfg.m_eval < 100) throw std::invalid_argument("entropy: m_eval too small");

  std::vector<double> h_env(static_cast<size_t>(cfg.environments));
  std::vector<double> cov_env(static_cast<size_t>(cfg.environments));
  parallel_for(cfg.environments, cfg.workers, [&](int e) {
    uint64_t env_seed = mix64(seed, static_cast<uint64_t>(e) + 1);
    std::vector<uint64_t> build, eval;
    sampler(env_seed, n, cfg.m_build, cfg.m_eval, build, eval);
    if (static_cast<int>(build.size()) != cfg.m_build ||
        static_cast<int>(eval.size()) != cfg.m_eval)
      throw std::runtime_error("entropy: sampler returned wrong batch sizes");

    std::unordered_map<uint64_t, int> hist;
    hist.reserve(build.size());
    for (uint64_t site : build) ++hist[site];

    /* An endpoint never seen in the build phase is charged the count it
       would need to appear at all, one in m_build.  Dropping misses would
       select toward high-probability endpoints and pull the estimate down,
       the opposite of the inflation the coverage flag announces. */
    double acc = 0.0;
    int hits = 0;
    for (uint64_t site : eval) {
      auto it = hist.find(site);
      double count = 1.0;
      if (it != hist.end()) {
        count = static_cast<double>(it->second);
        ++hits;
      }
      acc += -std::log(count / cfg.m_build) / n;
    }
    h_env[static_cast<size_t>(e)] = acc / cfg.m_eval;
    cov_env[static_cast<size_t>(e)] = static_cast<double>(hits) / cfg.m_eval;
  });

  double coverage_sum = 0.0;
  double coverage_min = 1.0;
  for (double c : cov_env) {
    coverage_sum += c;
    coverage_min = std::min(coverage_min, c);
  }
  EstimateReport r = report_from_samples(h_env, {}, "entropy");
  double coverage = coverage_sum / cfg.environments;
  r.diagnostics["n_steps"] = n;
  r.diagnostics["m_build"] = cfg.m_build;
  r.diagnostics["m_eval"] = cfg.m_eval;
  r.diagnostics["coverage"] = coverage;
  r.diagnostics["coverage_min"] = coverage_min;
  r.diagnostics["biased_high"] = coverage < cfg.coverage_floor ? 1.0 : 0.0;
  return r;
}

}  // namespace

EstimateReport entropy(const EndpointSampler& sampler, const EntropyConfig& cfg,
                       uint64_t seed) {
  return entropy_at(sampler, cfg, cfg.n, seed);
}

// The plug-in rate converges like h(n) = h + (log n)/(2n) + c/n + O(1/n^2):
// the logarithmic term is the Shannon entropy of the walk's radial
// fluctuation, a one-dimensional CLT spread over ~sqrt(n) distance shells,
// and plain 1/n extrapolation would turn it into a log(2)/(2n) residual.
// The known log term is subtracted first, and the remaining polynomial is
// extrapolated to 1/n = 0 quadratically through lengths {n, n+2, n+4}.
// The arithmetic schedule keeps the longest walk short enough for the
// build histogram to cover its endpoint support, and preserves step
// parity on bipartite graphs.  Build sizes grow with the measured rate
// so coverage stays roughly length-independent.
EstimateReport entropy_extrapolated(const EndpointSampler& sampler,
                                    const EntropyConfig& cfg, uint64_t seed) {
  const int n[3] = {cfg.n, cfg.n + 2, cfg.n + 4};
  EstimateReport rep[3];
  rep[0] = entropy_at(sampler, cfg, n[0], mix64(seed, 101));
  double g0 = rep[0].value - 0.5 * std::log(static_cast<double>(n[0])) / n[0];
  for (int i = 1; i < 3; ++i) {
    EntropyConfig ci = cfg;
    double scale = std::exp(g0 * (n[i] - n[0]));
    ci.m_build = static_cast<int>(cfg.m_build * std::min(scale, 64.0));
    rep[i] = entropy_at(sampler, ci, n[i], mix64(seed, 101 * (i + 1)));
  }

  double x[3], g[3];
  for (int i = 0; i < 3; ++i) {
    x[i] = 1.0 / n[i];
    g[i] = rep[i].value - 0.5 * std::log(static_cast<double>(n[i])) / n[i];
  }
  EstimateReport r;
  r.method = "entropy_extrapolated";
  double var = 0.0;
  for (int i = 0; i < 3; ++i) {
    double li = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) li *= x[j] / (x[j] - x[i]);
    r.value += li * g[i];
    var += li * li * rep[i].std_error * rep[i].std_error;
    r.n_samples += rep[i].n_samples;
  }
  r.std_error = std::sqrt(var);
  r.diagnostics["n_steps"] = cfg.n;
  r.diagnostics["h_n1"] = rep[0].value;
  r.diagnostics["h_n2"] = rep[1].value;
  r.diagnostics["h_n3"] = rep[2].value;
  r.diagnostics["m_build_n3"] = rep[2].diagnostics.at("m_build");
  double cov = 1.0, covmin = 1.0, flag = 0.0;
  for (const EstimateReport& e : rep) {
    cov = std::min(cov, e.diagnostics.at("coverage"));
    covmin = std::min(covmin, e.diagnostics.at("coverage_min"));
    flag = std::max(flag, e.diagnostics.at("biased_high"));
  }
  r.diagnostics["coverage"] = cov;
  r.diagnostics["coverage_min"] = covmin;
  r.diagnostics["biased_high"] = flag;
  return r;
}

EndpointSampler lattice_endpoint_sampler(double r) {
  return [r](uint64_t env_seed, int n, int m_build, int m_eval,
             std::vector<uint64_t>& build, std::vector<uint64_t>& eval) {
    Rng rb(mix64(env_seed, 1));
    right_angled_endpoints(r, n, m_build, rb, build);
    Rng re(mix64(env_seed, 2));
    right_angled_endpoints(r, n, m_eval, re, eval);
  };
}

EndpointSampler tessellation_endpoint_sampler(const TessellationSpec& spec) {
  return [spec](uint64_t env_seed, int n, int m_build, int m_eval,
                std::vector<uint64_t>& build, std::vector<uint64_t>& eval) {
    Rng rb(mix64(env_seed, 1));
    pq_endpoints(spec, n, m_build, rb, build);
    Rng re(mix64(env_seed, 2));
    pq_endpoints(spec, n, m_eval, re, eval);
  };
}

EndpointSampler field_endpoint_sampler(double lambda) {
  return [lambda](uint64_t env_seed, int n, int m_build, int m_eval,
                  std::vector<uint64_t>& build, std::vector<uint64_t>& eval) {
    LazyField field(env_seed, lambda);
    VertexGraph vg(field, lambda);
    FieldPoint root = vg.plant(cplx{0.0, 0.0}, 0);
    auto batch = [&](uint64_t stream, int m, std::vector<uint64_t>& out) {
      Rng rng(mix64(env_seed, stream));
      out.reserve(static_cast<size_t>(m));
      for (int i = 0; i < m; ++i) {
        // The rare uncertifiable window truncates a walk; retry on the same
        // stream so batch sizes stay exact.
        for (int attempt = 0;; ++attempt) {
          PdWalkResult res = pd_walk_from(vg, root, n, rng, 0, 0);
          if (!res.trace.truncated && res.trace.valid &&
              static_cast<int>(res.trace.fwd.size()) == n + 1) {
            out.push_back(res.trace.fwd.back().site);
            break;
          }
          if (attempt >= 100)
            throw std::runtime_error("field_endpoint_sampler: environment not certifiable");
        }
      }
    };
    batch(1, m_build, build);
    batch(2, m_eval, eval);
  };
}

EstimateReport lyapunov_direct(const std::vector<MatrixTrace>& traces) {
  std::vector<double> xs;
  int invalid = 0;
  for (const MatrixTrace& t : traces) {
    if (!t.valid) {
      ++invalid;
      continue;
    }
    int n = static_cast<int>(t.steps.size()) - 1;
    if (n < 1) throw std::invalid_argument("lyapunov_direct: empty trace");
    xs.push_back(t.steps.back().log_norm / n);
  }
  EstimateReport r = report_from_samples(xs, {}, "lyapunov_direct");
  r.diagnostics["invalid_traces"] = invalid;
  return r;
}

EstimateReport lyapunov_furstenberg(const MatrixDist& dist, int n_samples,
                                    int burn_in, uint64_t seed) {
  dist.validate();
  if (n_samples < 2) throw std::invalid_argument("lyapunov_furstenberg: too few samples");
  if (burn_in < 1) throw std::invalid_argument("lyapunov_furstenberg: burn-in required");
  std::vector<double> xs;
  xs.reserve(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Rng rng(mix64(seed, static_cast<uint64_t>(i) + 1));
    double angle = 0.0;  // v_0 = (1, 0)
    for (int k = 0; k < burn_in; ++k)
      angle = apply_direction(sample_matrix(dist, rng), angle).first;
    xs.push_back(apply_direction(sample_matrix(dist, rng), angle).second);
  }
  EstimateReport r = report_from_samples(xs, {}, "lyapunov_furstenberg");
  r.diagnostics["burn_in"] = burn_in;
  return r;
}

EstimateReport matrix_quotient_speed(const std::vector<MatrixTrace>& traces) {
  std::vector<double> xs;
  int invalid = 0;
  for (const MatrixTrace& t : traces) {
    if (!t.valid) {
      ++invalid;
      continue;
    }
    int n = static_cast<int>(t.steps.size()) - 1;
    if (n < 1) throw std::invalid_argument("matrix_quotient_speed: empty trace");
    xs.push_back(t.steps.back().quotient_d / n);
  }
  EstimateReport r = report_from_samples(xs, {}, "matrix_quotient_speed");
  r.diagnostics["invalid_traces"] = invalid;
  return r;
}

std::vector<std::pair<double, double>> correlation_curve(
    const BoundarySample& sample, const std::vector<double>& scales) {
  const size_t n = sample.angles.size();
  double lo = 10.0 * sample.truncation_bound;
  std::vector<double> rs;
  for (double r : scales)
    if (r >= lo && r <= 0.1 && r > 0.0) rs.push_back(r);
  std::sort(rs.begin(), rs.end());

  std::vector<double> a(sample.angles);
  std::sort(a.begin(), a.end());
  // Pairs within circular distance r, counted once each via the shorter arc;
  // r <= 0.1 < pi rules out pairs close along both arcs.
  std::vector<double> ext(a);
  for (double x : a) ext.push_back(x + 2.0 * kPi);

  std::vector<std::pair<double, double>> curve;
  for (double r : rs) {
    uint64_t cnt = 0;
    size_t hi = 0;
    for (size_t i = 0; i < n; ++i) {
      if (hi < i + 1) hi = i + 1;
      while (hi < ext.size() && ext[hi] <= a[i] + r) ++hi;
      cnt += hi - i - 1;
    }
    double pairs = 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
    double frac = static_cast<double>(cnt) / pairs;
    // Empty scales carry no information and are dropped; saturated ones
    // (every pair inside r, the atomic case) legitimately pin log C at 0.
    if (frac > 0.0) curve.emplace_back(std::log(r), std::log(frac));
  }
  return curve;
}

EstimateReport dimension_correlation(const BoundarySample& sample,
                                     const std::vector<double>& scales) {
  const size_t n = sample.angles.size();
  if (n < 10000)
    throw std::invalid_argument("dimension_correlation: fewer than 1e4 angles");
  auto curve = correlation_curve(sample, scales);
  std::vector<double> lx, ly;
  for (auto& [x, y] : curve) {
    lx.push_back(x);
    ly.push_back(y);
  }
  size_t k = lx.size();
  if (k < 3) throw std::invalid_argument("dimension_correlation: fewer than 3 usable scales");

  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  double slope = sxy / sxx;
  double ssr = 0.0;
  for (size_t i = 0; i < k; ++i) {
    double resid = ly[i] - my - slope * (lx[i] - mx);
    ssr += resid * resid;
  }
  double slope_se = std::sqrt(ssr / (k > 2 ? (k - 2) : 1) / sxx);

  EstimateReport r;
  r.value = slope;
  r.std_error = slope_se;
  r.n_samples = static_cast<int>(n);
  r.method = "dimension_correlation";
  r.diagnostics["n_scales"] = static_cast<double>(k);
  r.diagnostics["scale_min"] = std::exp(lx.front());
  r.diagnostics["scale_max"] = std::exp(lx.back());
  r.diagnostics["residual_rms"] = std::sqrt(ssr / k);
  r.diagnostics["truncation_bound"] = sample.truncation_bound;
  return r;
}

KsResult weighted_ks(const std::vector<double>& a, const std::vector<double>& wa,
                     const std::vector<double>& b, const std::vector<double>& wb,
                     double c) {
  if (a.empty() || b.empty()) throw std::invalid_argument("weighted_ks: empty sample");
  if ((!wa.empty() && wa.size() != a.size()) || (!wb.empty() && wb.size() != b.size()))
    throw std::invalid_argument("weighted_ks: mismatched weights");

  auto prep = [](const std::vector<double>& xs, const std::vector<double>& ws) {
    std::vector<std::pair<double, double>> v(xs.size());
    double sum = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      double w = ws.empty() ? 1.0 : ws[i];
      if (!(w >= 0.0)) throw std::invalid_argument("weighted_ks: negative weight");
      v[i] = {xs[i], w};
      sum += w;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("weighted_ks: zero total weight");
    std::sort(v.begin(), v.end());
    for (auto& p : v) p.second /= sum;
    return v;
  };
  auto va = prep(a, wa);
  auto vb = prep(b, wb);

  double fa = 0.0, fb = 0.0, d = 0.0;
  size_t i = 0, j = 0;
  while (i < va.size() || j < vb.size()) {
    double x = std::min(i < va.size() ? va[i].first : vb[j].first,
                        j < vb.size() ? vb[j].first : va[i].first);
    while (i < va.size() && va[i].first == x) fa += va[i++].second;
    while (j < vb.size() && vb[j].first == x) fb += vb[j++].second;
    d = std::max(d, std::fabs(fa - fb));
  }

  KsResult r;
  r.d_stat = d;
  r.n_eff_a = effective_n(wa.empty() ? std::vector<double>(a.size(), 1.0) : wa);
  r.n_eff_b = effective_n(wb.empty() ? std::vector<double>(b.size(), 1.0) : wb);
  r.threshold = c * std::sqrt((r.n_eff_a + r.n_eff_b) / (r.n_eff_a * r.n_eff_b));
  r.pass = r.d_stat <= r.threshold;
  return r;
}

}  // namespace hwalk
