#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hwalk/walks.hpp"

// Statistical estimators over walk traces: speed (direct and through finite
// horofunctions), asymptotic entropy, Lyapunov exponents, and the
// correlation dimension of boundary angle samples.  Every estimator returns
// a point value with a standard error, aggregates in fixed input order, and
// is a deterministic function of its inputs and seed.

namespace hwalk {

struct EstimateReport {
  double value{0.0};
  double std_error{0.0};
  int n_samples{0};
  std::string method;
  std::map<std::string, double> diagnostics;
};

// Weighted mean and standard error of one value per input; empty weights
// mean the plain average.  Weights are normalized internally and the
// standard error uses the effective sample size (sum w)^2 / sum w^2.
EstimateReport report_from_samples(const std::vector<double>& xs,
                                   const std::vector<double>& ws,
                                   const std::string& method,
                                   size_t min_samples = 2);

// Direct speed: weighted mean of d(x0, xn)/n over valid traces sharing a
// common n.  Weights carry the degree biasing where the walk family needs
// it.  Refuses fewer than 30 valid traces or mixed lengths.
EstimateReport speed_kingman(const std::vector<WalkTrace>& traces,
                             const std::vector<double>& weights = {});

// Same, in the graph metric: weighted mean of d_graph(n)/n.
EstimateReport speed_kingman_graph(const std::vector<WalkTrace>& traces,
                                   const std::vector<double>& weights = {});

// Horofunction-formula speed: each past point x_{-i} scores the first
// forward step as d(x_{-i}, x_1) - d(x_{-i}, x_0), and the estimate averages
// the scores over the past branch and over traces.  Requires valid traces
// whose past branch has at least min_past points.
EstimateReport speed_furstenberg(const std::vector<WalkTrace>& traces,
                                 const std::vector<double>& weights = {},
                                 size_t min_past = 50);

struct EntropyConfig {
  int n{10};            // walk length whose endpoint law is estimated
  int m_build{20000};   // walks building the empirical endpoint law
  int m_eval{2000};     // fresh walks scored against it
  int environments{20};
  double coverage_floor{0.90};
  int workers{1};  // environment fan-out; the estimate is worker-count invariant
};

// One environment at a time: the sampler fixes an environment from env_seed,
// runs m_build + m_eval independent n-step walks in it, and writes each
// walk's endpoint site.  Build and eval walks must use disjoint streams
// derived from env_seed.
using EndpointSampler =
    std::function<void(uint64_t env_seed, int n, int m_build, int m_eval,
                       std::vector<uint64_t>& build, std::vector<uint64_t>& eval)>;

// Plug-in entropy: -(1/n) log p_hat(endpoint) averaged over fresh walks,
// with p_hat the empirical n-step endpoint law of the same environment, then
// averaged over environments (the standard error is across environments).
// An eval endpoint never seen during the build is charged p_hat = 1/m_build
// and lowers the coverage diagnostic; mean coverage below the floor sets
// the biased_high diagnostic, since those charges inflate the estimate.
EstimateReport entropy(const EndpointSampler& sampler, const EntropyConfig& cfg,
                       uint64_t seed);

// Finite-length extrapolation of the plug-in rate: subtracts the universal
// (log n)/(2n) radial-fluctuation term, then removes the 1/n and 1/n^2
// corrections by quadratic extrapolation in 1/n through walk lengths
// {n, n+2, n+4} with independent environments per length.  cfg.m_build
// applies to the shortest length and grows with the measured rate for the
// longer ones (capped at 64x).
EstimateReport entropy_extrapolated(const EndpointSampler& sampler,
                                    const EntropyConfig& cfg, uint64_t seed);

// Endpoint sampler factories for the walk families.  Build and eval batches
// draw from the disjoint streams mix64(env_seed, 1) and mix64(env_seed, 2).
// The lattice families have one fixed environment, so env_seed only varies
// the streams; the field sampler realizes a fresh field from env_seed and
// runs all walks of the environment on one shared certified graph.
EndpointSampler lattice_endpoint_sampler(double r);
EndpointSampler tessellation_endpoint_sampler(const TessellationSpec& spec);
EndpointSampler field_endpoint_sampler(double lambda);

// Top Lyapunov exponent as the norm growth rate (1/n) log sigma_1 of the
// accumulated products, averaged over valid traces.
EstimateReport lyapunov_direct(const std::vector<MatrixTrace>& traces);

// Furstenberg formula chi = E[log |A v|]: each sample pairs a fresh draw A
// with a direction made stationary by its own burn-in stream.
EstimateReport lyapunov_furstenberg(const MatrixDist& dist, int n_samples,
                                    int burn_in, uint64_t seed);

// Escape rate of the product trace in the quotient metric
// sqrt(log^2 sigma_1 + log^2 sigma_2); equals sqrt(2) chi for these walks.
EstimateReport matrix_quotient_speed(const std::vector<MatrixTrace>& traces);

struct BoundarySample {
  std::vector<double> angles;    // boundary angles in [0, 2pi)
  double truncation_bound{0.0};  // distance of the recorded angles to the limit
};

// The correlation integral itself: (log r, log C(r)) over the scales that
// clear the truncation error (r in [10 * bound, 0.1]), C(r) the fraction of
// angle pairs within circular distance r.  Scales with an empty count are
// dropped.  This is also the plot-data behind the slope estimate.
std::vector<std::pair<double, double>> correlation_curve(
    const BoundarySample& sample, const std::vector<double>& scales);

// Correlation-integral slope: least-squares fit of log C(r) against log r
// over the usable scales.  Needs at least 1e4 angles and 3 usable scales;
// diagnostics carry the fit residual and the scale window.
EstimateReport dimension_correlation(const BoundarySample& sample,
                                     const std::vector<double>& scales);

// Key: value serialization of a report, one line per field, diagnostics
// prefixed "diag.".  Floats use 17 significant digits.
std::string report_to_text(const EstimateReport& r);

struct KsResult {
  double d_stat{0.0};
  double threshold{0.0};
  double n_eff_a{0.0};
  double n_eff_b{0.0};
  bool pass{false};  // samples are indistinguishable at the chosen level
};

// Two-sample Kolmogorov-Smirnov distance between weighted empirical CDFs,
// tested against c * sqrt((na + nb)/(na nb)) with effective sample sizes
// n_eff = (sum w)^2 / sum w^2.  The default c is the two-sided 3 sigma
// critical value sqrt(-log(alpha/2)/2) at alpha = 0.0027.
KsResult weighted_ks(const std::vector<double>& a, const std::vector<double>& wa,
                     const std::vector<double>& b, const std::vector<double>& wb,
                     double c = 1.8177);

}  // namespace hwalk
