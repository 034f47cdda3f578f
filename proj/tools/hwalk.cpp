#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hwalk/estimate.hpp"
#include "hwalk/field.hpp"
#include "hwalk/geom.hpp"
#include "hwalk/local_graph.hpp"
#include "hwalk/report.hpp"
#include "hwalk/rng.hpp"
#include "hwalk/runner.hpp"
#include "hwalk/scalar.hpp"
#include "hwalk/selftest.hpp"
#include "hwalk/walks.hpp"

// Experiment harness.  Every subcommand resolves its settings from built-in
// defaults, then an optional key = value config file, then flags (later
// sources win), opens one registry directory under the --out root, writes
// the manifest before any result, and emits CSV rows, a key: value estimate
// log, and an SVG plot.  Rows depend only on the resolved config and seed,
// never on the worker count.  Exit codes: 0 success, 1 contract failure,
// 2 usage error.

namespace {

using namespace hwalk;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

uint64_t parse_seed(const std::string& s) {
  size_t pos = 0;
  uint64_t v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("seed: not a decimal integer: " + s);
  }
  if (pos != s.size()) throw std::invalid_argument("seed: trailing characters in " + s);
  return v;
}

void ensure(Config& cfg, const std::string& key, const std::string& value) {
  if (!cfg.has(key)) cfg.set(key, value);
}

// Flags shared by all experiment subcommands.  Values are kept as strings
// where precision matters (the seed) or where the flag is a grid.
struct Common {
  std::string config_path;
  std::string out_root;
  std::string seed_str;
  int workers = 0;
  int steps = 0;
  int trials = 0;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_workers = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_trials = nullptr;
};

void add_common(CLI::App* cmd, Common& c, bool with_walk_knobs) {
  cmd->add_option("--config", c.config_path, "key = value settings file, overridden by flags");
  c.o_seed = cmd->add_option("--seed", c.seed_str, "master seed, decimal");
  c.o_out = cmd->add_option("--out", c.out_root, "run registry root (default runs)");
  c.o_workers = cmd->add_option("--workers", c.workers, "worker threads, 0 = all hardware threads");
  if (with_walk_knobs) {
    c.o_steps = cmd->add_option("--steps", c.steps, "walk length per trial");
    c.o_trials = cmd->add_option("--trials", c.trials, "independent trials per grid point");
  }
}

Config base_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : Config::from_file(c.config_path);
  if (c.o_seed->count() > 0) cfg.set("seed", c.seed_str);
  if (c.o_out->count() > 0) cfg.set("out", c.out_root);
  if (c.o_workers->count() > 0) cfg.set("workers", std::to_string(c.workers));
  if (c.o_steps != nullptr && c.o_steps->count() > 0)
    cfg.set("steps", std::to_string(c.steps));
  if (c.o_trials != nullptr && c.o_trials->count() > 0)
    cfg.set("trials", std::to_string(c.trials));
  ensure(cfg, "seed", "20260816");
  ensure(cfg, "out", "runs");
  ensure(cfg, "workers", "0");
  return cfg;
}

// Drops non-finite points, then empty series.  write_svg_lines refuses
// non-finite input, but rows legitimately carry nan cells (a ratio against
// log(1) or an estimator short of samples), so plots skip those points.
void emit_plot(const std::string& path, const std::string& title, const std::string& x_label,
               const std::string& y_label, std::vector<PlotSeries> series) {
  std::vector<PlotSeries> kept;
  for (auto& s : series) {
    PlotSeries f;
    f.label = s.label;
    for (size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        f.x.push_back(s.x[i]);
        f.y.push_back(s.y[i]);
      }
    if (!f.x.empty()) kept.push_back(std::move(f));
  }
  if (kept.empty()) {
    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\">"
        << "<text x=\"20\" y=\"40\" font-family=\"sans-serif\">no finite data points</text>"
        << "</svg>\n";
    return;
  }
  write_svg_lines(path, title, x_label, y_label, kept);
}

void log_report(std::ostream& os, const std::string& label, const EstimateReport& rep) {
  os << "[" << label << "]\n" << report_to_text(rep) << "\n";
}

// report_from_samples refusal turned into nan cells: the pd command must
// complete on smoke-sized runs (a single trial), so short rows carry nan
// estimates instead of aborting the whole run.
bool try_report(const std::vector<double>& xs, const std::vector<double>& ws,
                const std::string& method, size_t min_samples, EstimateReport& out) {
  try {
    out = report_from_samples(xs, ws, method, min_samples);
    return true;
  } catch (const std::invalid_argument&) {
    out = EstimateReport{};
    out.value = kNan;
    out.std_error = kNan;
    out.method = method;
    out.n_samples = static_cast<int>(xs.size());
    return false;
  }
}

int cmd_selftest(const std::string& inject) {
  SelftestInjection inj;
  if (inject == "busemann-sign") {
    inj.busemann_sign_flip = true;
  } else if (!inject.empty()) {
    throw std::invalid_argument("selftest: unknown injection '" + inject + "'");
  }
  int failed = run_selftest(inj, std::cout);
  return failed == 0 ? 0 : 1;
}

int cmd_ra(Config cfg) {
  ensure(cfg, "r", "0.5,1,2,4,6");
  ensure(cfg, "steps", "200");
  ensure(cfg, "trials", "200");
  ensure(cfg, "past", "100");
  const uint64_t seed = parse_seed(cfg.get("seed", ""));
  const int workers = resolve_workers(cfg.get_int("workers", 0));
  const int steps = cfg.get_int("steps", 0);
  const int trials = cfg.get_int("trials", 0);
  const int past = cfg.get_int("past", 0);
  const auto rs = cfg.get_grid("r", {});
  if (steps < 1 || trials < 1) throw std::invalid_argument("ra: steps and trials must be positive");
  if (past < 50) throw std::invalid_argument("ra: past must be at least 50 for the horofunction column");
  for (double r : rs)
    if (!(r > 0.0)) throw std::invalid_argument("ra: r grid must be positive");

  RunDir run(cfg.get("out", ""), "ra", cfg, seed,
             {"ra.csv", "ra_plot.csv", "estimates.txt", "ra.svg"});
  std::cout << "run: " << run.path() << "\n";
  std::ofstream text(run.file("estimates.txt"));
  CsvWriter csv(run.file("ra.csv"),
                {"right-angled isometry walk: speed per step against the translation-length bound",
                 "bound = 0.5 log cosh r; l_over_r = l_hat / r; columns ending in _3se are 3 sigma",
                 "valid counts traces whose two distance routes agreed"},
                {"r", "n_steps", "trials", "valid", "l_hat", "l_3se", "l_furst", "furst_3se",
                 "l_graph", "lg_3se", "bound", "l_over_r"});

  std::vector<double> px, ratio, bound_ratio;
  for (size_t gi = 0; gi < rs.size(); ++gi) {
    const double r = rs[gi];
    const uint64_t gseed = mix64(seed, 1000 + gi);
    std::vector<WalkTrace> traces(static_cast<size_t>(trials));
    parallel_for(trials, workers, [&](int i) {
      Rng rng(mix64(gseed, static_cast<uint64_t>(i) + 1));
      traces[static_cast<size_t>(i)] = right_angled_walk(r, steps, rng, past);
    });
    const auto king = speed_kingman(traces);
    const auto fur = speed_furstenberg(traces);
    const auto graph = speed_kingman_graph(traces);
    const double bound = 0.5 * std::log(std::cosh(r));
    log_report(text, "ra r=" + format_g17(r) + " kingman", king);
    log_report(text, "ra r=" + format_g17(r) + " furstenberg", fur);
    log_report(text, "ra r=" + format_g17(r) + " graph", graph);
    csv.row({CsvWriter::num(r), CsvWriter::num(steps), CsvWriter::num(trials),
             CsvWriter::num(king.n_samples), CsvWriter::num(king.value),
             CsvWriter::num(3.0 * king.std_error), CsvWriter::num(fur.value),
             CsvWriter::num(3.0 * fur.std_error), CsvWriter::num(graph.value),
             CsvWriter::num(3.0 * graph.std_error), CsvWriter::num(bound),
             CsvWriter::num(king.value / r)});
    std::cout << "  r " << format_g17(r) << ": l_hat " << king.value << " (3se "
              << 3.0 * king.std_error << "), l/r " << king.value / r << "\n";
    px.push_back(r);
    ratio.push_back(king.value / r);
    bound_ratio.push_back(bound / r);
  }
  {
    CsvWriter plot(run.file("ra_plot.csv"),
                   {"speed per unit translation length against the bound curve"},
                   {"r", "l_over_r", "bound_over_r"});
    for (size_t i = 0; i < px.size(); ++i)
      plot.row({CsvWriter::num(px[i]), CsvWriter::num(ratio[i]), CsvWriter::num(bound_ratio[i])});
  }
  emit_plot(run.file("ra.svg"), "right-angled walk speed", "r", "l / r",
            {{"l_over_r", px, ratio}, {"bound_over_r", px, bound_ratio}});
  run.finish();
  return 0;
}

int cmd_pq(Config cfg) {
  ensure(cfg, "p", "3");
  ensure(cfg, "q", "10,20,50");
  ensure(cfg, "steps", "200");
  ensure(cfg, "trials", "200");
  ensure(cfg, "past", "100");
  const uint64_t seed = parse_seed(cfg.get("seed", ""));
  const int workers = resolve_workers(cfg.get_int("workers", 0));
  const int steps = cfg.get_int("steps", 0);
  const int trials = cfg.get_int("trials", 0);
  const int past = cfg.get_int("past", 0);
  const int p = cfg.get_int("p", 0);
  const auto qs = cfg.get_grid("q", {});
  if (steps < 1 || trials < 1) throw std::invalid_argument("pq: steps and trials must be positive");
  if (past < 50) throw std::invalid_argument("pq: past must be at least 50 for the horofunction column");
  std::vector<int> qi;
  for (double q : qs) {
    if (q != std::floor(q)) throw std::invalid_argument("pq: q grid must be integers");
    qi.push_back(static_cast<int>(q));
  }

  RunDir run(cfg.get("out", ""), "pq", cfg, seed,
             {"pq.csv", "pq_plot.csv", "estimates.txt", "pq.svg"});
  std::cout << "run: " << run.path() << "\n";
  std::ofstream text(run.file("estimates.txt"));
  CsvWriter csv(run.file("pq.csv"),
                {"nearest-neighbor walk on the {p,q} tessellation",
                 "far_field = 2 log cosh(r_pq / 2), the drift of the comparison walk at large q",
                 "l_over_2logq = l_hat / (2 log q); columns ending in _3se are 3 sigma"},
                {"p", "q", "r_pq", "n_steps", "trials", "valid", "l_hat", "l_3se", "l_furst",
                 "furst_3se", "l_over_2logq", "far_field"});

  std::vector<double> px, ratio, drift_ratio;
  for (size_t gi = 0; gi < qi.size(); ++gi) {
    const TessellationSpec spec(p, qi[gi]);  // validates hyperbolicity
    const uint64_t gseed = mix64(seed, 3000 + gi);
    std::vector<WalkTrace> traces(static_cast<size_t>(trials));
    parallel_for(trials, workers, [&](int i) {
      Rng rng(mix64(gseed, static_cast<uint64_t>(i) + 1));
      traces[static_cast<size_t>(i)] = pq_walk(spec, steps, rng, past);
    });
    const auto king = speed_kingman(traces);
    const auto fur = speed_furstenberg(traces);
    const double two_log_q = 2.0 * std::log(static_cast<double>(qi[gi]));
    const double far_field = 2.0 * std::log(std::cosh(0.5 * spec.r_pq));
    log_report(text, "pq q=" + std::to_string(qi[gi]) + " kingman", king);
    log_report(text, "pq q=" + std::to_string(qi[gi]) + " furstenberg", fur);
    csv.row({CsvWriter::num(p), CsvWriter::num(qi[gi]), CsvWriter::num(spec.r_pq),
             CsvWriter::num(steps), CsvWriter::num(trials), CsvWriter::num(king.n_samples),
             CsvWriter::num(king.value), CsvWriter::num(3.0 * king.std_error),
             CsvWriter::num(fur.value), CsvWriter::num(3.0 * fur.std_error),
             CsvWriter::num(king.value / two_log_q), CsvWriter::num(far_field)});
    std::cout << "  q " << qi[gi] << ": l_hat " << king.value << " (3se "
              << 3.0 * king.std_error << "), l/(2 log q) " << king.value / two_log_q << "\n";
    px.push_back(qi[gi]);
    ratio.push_back(king.value / two_log_q);
    drift_ratio.push_back(far_field / two_log_q);
  }
  {
    CsvWriter plot(run.file("pq_plot.csv"),
                   {"speed normalized by 2 log q, with the far-field drift as reference"},
                   {"q", "l_over_2logq", "drift_over_2logq"});
    for (size_t i = 0; i < px.size(); ++i)
      plot.row({CsvWriter::num(px[i]), CsvWriter::num(ratio[i]), CsvWriter::num(drift_ratio[i])});
  }
  emit_plot(run.file("pq.svg"), "tessellation walk speed", "q", "l / (2 log q)",
            {{"l_over_2logq", px, ratio}, {"drift_over_2logq", px, drift_ratio}});
  run.finish();
  return 0;
}

int cmd_pd(Config cfg) {
  ensure(cfg, "lambda", "0.5,0.2,0.1,0.05");
  ensure(cfg, "steps", "30");
  ensure(cfg, "trials", "200");
  ensure(cfg, "graph_horizon", "6");
  ensure(cfg, "graph_trials", "60");
  ensure(cfg, "entropy_n", "6");
  ensure(cfg, "entropy_m_build", "10000");
  ensure(cfg, "entropy_m_eval", "1000");
  ensure(cfg, "entropy_envs", "20");
  const uint64_t seed = parse_seed(cfg.get("seed", ""));
  const int workers = resolve_workers(cfg.get_int("workers", 0));
  const int steps = cfg.get_int("steps", 0);
  const int trials = cfg.get_int("trials", 0);
  const auto lambdas = cfg.get_grid("lambda", {});
  // Exact graph distance comes from a bidirectional search whose frontier
  // grows exponentially with the distance, so the graph-speed probe runs at
  // a short fixed horizon on a deterministic subset of the trials.
  const int probe_m = std::min(cfg.get_int("graph_horizon", 0), steps);
  const int probe_trials = std::min(cfg.get_int("graph_trials", 0), trials);
  if (steps < 1 || steps > 200) throw std::invalid_argument("pd: steps outside [1, 200]");
  if (trials < 1) throw std::invalid_argument("pd: trials must be positive");
  if (probe_m < 0) throw std::invalid_argument("pd: graph_horizon must be nonnegative");
  for (double l : lambdas)
    if (!(l >= 0.05 && l <= 1.0))
      throw std::invalid_argument("pd: lambda grid outside [0.05, 1]");
  EntropyConfig hcfg;
  hcfg.n = cfg.get_int("entropy_n", 0);
  hcfg.m_build = cfg.get_int("entropy_m_build", 0);
  hcfg.m_eval = cfg.get_int("entropy_m_eval", 0);
  hcfg.environments = cfg.get_int("entropy_envs", 0);
  hcfg.workers = workers;

  RunDir run(cfg.get("out", ""), "pd", cfg, seed,
             {"pd.csv", "pd_plot.csv", "estimates.txt", "pd.svg"});
  std::cout << "run: " << run.path() << "\n";
  std::ofstream text(run.file("estimates.txt"));
  CsvWriter csv(run.file("pd.csv"),
                {"walk on the certified Delaunay graph of a Poisson field",
                 "speeds are degree-bias weighted; speed_ratio = l_hat / (2 log(1/lambda)),",
                 "nan when lambda = 1; lg_hat = mean d_G(x_0, x_m) / m over the first",
                 "lg_trials trials at the fixed probe horizon m = lg_horizon, biased high",
                 "by O(1/m); estimate cells are nan when fewer than 30 certified trials",
                 "survive (graph probe: fewer than 20); flagged = 1 when the certification",
                 "failure rate exceeds 1%; columns ending in _3se are 3 sigma"},
                {"lambda", "n_steps", "trials", "valid", "cert_fail_rate", "flagged", "l_hat",
                 "l_3se", "lg_horizon", "lg_trials", "lg_valid", "lg_hat", "lg_3se", "h_hat",
                 "h_3se", "h_biased_high", "mean_degree", "deg_3se", "log_inv_lambda",
                 "speed_ratio", "h_over_l"});

  struct Slot {
    double rho = 0.0;
    double lg = 0.0;
    double deg = 0.0;
    bool ok = false;
    bool lg_ok = false;
  };
  std::vector<double> px, ratio_series, lg_series, hol_series;
  for (size_t gi = 0; gi < lambdas.size(); ++gi) {
    const double lambda = lambdas[gi];
    const uint64_t gseed = mix64(seed, 2000 + gi);
    std::vector<Slot> slots(static_cast<size_t>(trials));
    parallel_for(trials, workers, [&](int i) {
      const uint64_t t = static_cast<uint64_t>(i);
      LazyField field(mix64(gseed, 2 * t + 1), lambda);
      Rng rng(mix64(gseed, 2 * t + 2));
      const int horizon = i < probe_trials ? probe_m : 0;
      const auto res = pd_walk(field, lambda, steps, rng, 0, horizon);
      Slot s;
      s.ok = res.trace.valid && !res.trace.truncated &&
             res.trace.fwd.size() == static_cast<size_t>(steps) + 1;
      if (s.ok) {
        s.rho = res.trace.fwd.back().rho / steps;
        s.deg = static_cast<double>(res.root_degree);
        if (horizon > 0 && res.horizon == horizon && res.d_graph_horizon >= 0) {
          s.lg = static_cast<double>(res.d_graph_horizon) / horizon;
          s.lg_ok = true;
        }
      }
      slots[static_cast<size_t>(i)] = s;
    });
    std::vector<double> speeds, gspeeds, degs, weights, gweights;
    for (const Slot& s : slots) {
      if (!s.ok) continue;
      speeds.push_back(s.rho);
      degs.push_back(s.deg);
      weights.push_back(s.deg);
      if (s.lg_ok) {
        gspeeds.push_back(s.lg);
        gweights.push_back(s.deg);
      }
    }
    const double fail_rate = 1.0 - static_cast<double>(speeds.size()) / trials;
    const int flagged = fail_rate > 0.01 ? 1 : 0;

    EstimateReport l, lg, deg;
    try_report(speeds, weights, "pd_speed", 30, l);
    try_report(gspeeds, gweights, "pd_graph_speed", 20, lg);
    try_report(degs, {}, "pd_root_degree", 2, deg);
    const auto h = entropy(field_endpoint_sampler(lambda), hcfg, mix64(gseed, 0xE11));
    log_report(text, "pd lambda=" + format_g17(lambda) + " speed", l);
    log_report(text, "pd lambda=" + format_g17(lambda) + " graph speed", lg);
    log_report(text, "pd lambda=" + format_g17(lambda) + " entropy", h);
    log_report(text, "pd lambda=" + format_g17(lambda) + " root degree", deg);

    const double log_inv = std::log(1.0 / lambda);
    const double speed_ratio = log_inv > 1e-12 ? l.value / (2.0 * log_inv) : kNan;
    const double h_over_l = h.value / l.value;
    const double biased = h.diagnostics.count("biased_high") != 0u
                              ? h.diagnostics.at("biased_high")
                              : 0.0;
    csv.row({CsvWriter::num(lambda), CsvWriter::num(steps), CsvWriter::num(trials),
             CsvWriter::num(l.n_samples), CsvWriter::num(fail_rate), CsvWriter::num(flagged),
             CsvWriter::num(l.value), CsvWriter::num(3.0 * l.std_error),
             CsvWriter::num(probe_m), CsvWriter::num(probe_trials),
             CsvWriter::num(lg.n_samples), CsvWriter::num(lg.value),
             CsvWriter::num(3.0 * lg.std_error), CsvWriter::num(h.value),
             CsvWriter::num(3.0 * h.std_error), CsvWriter::num(biased), CsvWriter::num(deg.value),
             CsvWriter::num(3.0 * deg.std_error), CsvWriter::num(log_inv),
             CsvWriter::num(speed_ratio), CsvWriter::num(h_over_l)});
    std::cout << "  lambda " << format_g17(lambda) << ": l_hat " << l.value << ", lg "
              << lg.value << ", h " << h.value << ", ratio " << speed_ratio << "\n";
    px.push_back(log_inv);
    ratio_series.push_back(speed_ratio);
    lg_series.push_back(lg.value);
    hol_series.push_back(h_over_l);
  }
  {
    CsvWriter plot(run.file("pd_plot.csv"),
                   {"low-intensity asymptotics against log(1/lambda)"},
                   {"log_inv_lambda", "speed_ratio", "lg_hat", "h_over_l"});
    for (size_t i = 0; i < px.size(); ++i)
      plot.row({CsvWriter::num(px[i]), CsvWriter::num(ratio_series[i]),
                CsvWriter::num(lg_series[i]), CsvWriter::num(hol_series[i])});
  }
  emit_plot(run.file("pd.svg"), "Poisson-Delaunay walk asymptotics", "log(1/lambda)", "ratio",
            {{"speed_ratio", px, ratio_series},
             {"lg_hat", px, lg_series},
             {"h_over_l", px, hol_series}});
  run.finish();
  return 0;
}

MatrixDist load_matrix_dist(const std::string& path) {
  if (path.empty()) {
    // Fixed test pair: two hyperbolic elements with distinct axes.
    return MatrixDist::uniform({{{2.0, 1.0, 1.0, 1.0}}, {{1.0, 1.0, 1.0, 2.0}}});
  }
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("lyap: cannot read distribution file " + path);
  MatrixDist dist;
  std::string line;
  int line_no = 0;
  bool any_prob = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream row(line);
    double a;
    std::vector<double> vals;
    while (row >> a) vals.push_back(a);
    if (vals.empty()) continue;
    if (vals.size() != 4 && vals.size() != 5)
      throw std::invalid_argument("lyap: line " + std::to_string(line_no) +
                                  ": expected 'a b c d' or 'a b c d prob'");
    dist.mats.push_back({vals[0], vals[1], vals[2], vals[3]});
    if (vals.size() == 5) {
      dist.probs.push_back(vals[4]);
      any_prob = true;
    } else {
      dist.probs.push_back(-1.0);
    }
  }
  if (dist.mats.empty()) throw std::invalid_argument("lyap: empty distribution file");
  if (any_prob) {
    for (double p : dist.probs)
      if (p < 0.0)
        throw std::invalid_argument("lyap: either every line carries a probability or none");
  } else {
    std::fill(dist.probs.begin(), dist.probs.end(), 1.0 / dist.mats.size());
  }
  dist.validate();
  return dist;
}

int cmd_lyap(Config cfg, const std::string& dist_path) {
  if (!dist_path.empty()) cfg.set("dist", dist_path);
  ensure(cfg, "dist", "");
  ensure(cfg, "steps", "300");
  ensure(cfg, "trials", "300");
  ensure(cfg, "burn_in", "400");
  ensure(cfg, "furst_samples", "3000");
  const uint64_t seed = parse_seed(cfg.get("seed", ""));
  const int workers = resolve_workers(cfg.get_int("workers", 0));
  const int steps = cfg.get_int("steps", 0);
  const int trials = cfg.get_int("trials", 0);
  const int burn_in = cfg.get_int("burn_in", 0);
  const int furst_samples = cfg.get_int("furst_samples", 0);
  if (steps < 1 || trials < 1) throw std::invalid_argument("lyap: steps and trials must be positive");
  const MatrixDist dist = load_matrix_dist(cfg.get("dist", ""));

  RunDir run(cfg.get("out", ""), "lyap", cfg, seed,
             {"lyap.csv", "lyap_plot.csv", "estimates.txt", "lyap.svg"});
  std::cout << "run: " << run.path() << "\n";
  std::ofstream text(run.file("estimates.txt"));

  std::vector<MatrixTrace> traces(static_cast<size_t>(trials));
  parallel_for(trials, workers, [&](int i) {
    Rng rng(mix64(seed, static_cast<uint64_t>(i) + 1));
    traces[static_cast<size_t>(i)] = matrix_walk(dist, steps, rng);
  });
  const auto direct = lyapunov_direct(traces);
  const auto quotient = matrix_quotient_speed(traces);
  const auto furst = lyapunov_furstenberg(dist, furst_samples, burn_in, mix64(seed, 0xF0));
  log_report(text, "lyap direct", direct);
  log_report(text, "lyap furstenberg", furst);
  log_report(text, "lyap quotient", quotient);

  const double sqrt2_chi = std::sqrt(2.0) * direct.value;
  const bool agree_furst = std::fabs(direct.value - furst.value) <=
                           3.0 * std::hypot(direct.std_error, furst.std_error);
  const bool agree_quotient =
      std::fabs(quotient.value - sqrt2_chi) <=
      3.0 * std::hypot(quotient.std_error, std::sqrt(2.0) * direct.std_error);

  CsvWriter csv(run.file("lyap.csv"),
                {"top Lyapunov exponent of the matrix product walk",
                 "agreement columns compare estimators at combined 3 sigma",
                 "columns ending in _3se are 3 sigma"},
                {"n_steps", "trials", "valid", "burn_in", "furst_samples", "chi_direct",
                 "chi_3se", "chi_furst", "furst_3se", "quotient", "quo_3se", "sqrt2_chi",
                 "agree_furst", "agree_quotient"});
  csv.row({CsvWriter::num(steps), CsvWriter::num(trials), CsvWriter::num(direct.n_samples),
           CsvWriter::num(burn_in), CsvWriter::num(furst_samples), CsvWriter::num(direct.value),
           CsvWriter::num(3.0 * direct.std_error), CsvWriter::num(furst.value),
           CsvWriter::num(3.0 * furst.std_error), CsvWriter::num(quotient.value),
           CsvWriter::num(3.0 * quotient.std_error), CsvWriter::num(sqrt2_chi),
           CsvWriter::num(agree_furst ? 1 : 0), CsvWriter::num(agree_quotient ? 1 : 0)});
  std::cout << "  chi_direct " << direct.value << " (3se " << 3.0 * direct.std_error
            << "), chi_furst " << furst.value << ", quotient " << quotient.value << "\n";

  // Convergence display: the running norm-growth rate averaged over traces.
  std::vector<double> ks, running, furst_line;
  for (int k = 1; k <= steps; ++k) {
    double acc = 0.0;
    int cnt = 0;
    for (const auto& t : traces) {
      if (!t.valid) continue;
      acc += t.steps[static_cast<size_t>(k)].log_norm / k;
      ++cnt;
    }
    if (cnt == 0) break;
    ks.push_back(k);
    running.push_back(acc / cnt);
    furst_line.push_back(furst.value);
  }
  {
    CsvWriter plot(run.file("lyap_plot.csv"),
                   {"running (1/k) log |product| averaged over traces"},
                   {"k", "chi_running", "chi_furst"});
    for (size_t i = 0; i < ks.size(); ++i)
      plot.row({CsvWriter::num(ks[i]), CsvWriter::num(running[i]), CsvWriter::num(furst_line[i])});
  }
  emit_plot(run.file("lyap.svg"), "Lyapunov exponent convergence", "k", "chi",
            {{"chi_running", ks, running}, {"chi_furst", ks, furst_line}});
  run.finish();
  return (agree_furst && agree_quotient) ? 0 : 1;
}

std::vector<double> default_scales() {
  // Ten log-spaced scales across [2e-3, 0.09]; the estimator trims this
  // window further against the recorded truncation bound.
  std::vector<double> s;
  for (int j = 0; j < 10; ++j)
    s.push_back(2e-3 * std::pow(0.09 / 2e-3, j / 9.0));
  return s;
}

int cmd_dim(Config cfg, const std::string& walk_flag) {
  if (!walk_flag.empty()) cfg.set("walk", walk_flag);
  ensure(cfg, "walk", "pq");
  ensure(cfg, "p", "3");
  ensure(cfg, "q", "50");
  ensure(cfg, "steps", "50");
  ensure(cfg, "trials", "10000");
  ensure(cfg, "entropy_n", "2");
  ensure(cfg, "entropy_m_build", "20000");
  ensure(cfg, "entropy_m_eval", "2000");
  ensure(cfg, "entropy_envs", "20");
  const uint64_t seed = parse_seed(cfg.get("seed", ""));
  const int workers = resolve_workers(cfg.get_int("workers", 0));
  const std::string walk = cfg.get("walk", "");
  const int steps = cfg.get_int("steps", 0);
  const int trials = cfg.get_int("trials", 0);
  if (walk != "pq" && walk != "uniform")
    throw std::invalid_argument("dim: walk must be pq or uniform");
  if (steps < 1 || trials < 1) throw std::invalid_argument("dim: steps and trials must be positive");
  std::vector<double> scales = cfg.has("scales") ? cfg.get_grid("scales", {}) : default_scales();

  RunDir run(cfg.get("out", ""), "dim", cfg, seed,
             {"dim.csv", "dim_plot.csv", "estimates.txt", "dim.svg"});
  std::cout << "run: " << run.path() << "\n";
  std::ofstream text(run.file("estimates.txt"));

  BoundarySample sample;
  EstimateReport l, h;
  l.value = kNan;
  l.std_error = kNan;
  h.value = kNan;
  h.std_error = kNan;
  int p = 0, q = 0;
  if (walk == "pq") {
    p = cfg.get_int("p", 0);
    q = cfg.get_int("q", 0);
    const TessellationSpec spec(p, q);
    struct Slot {
      double theta = 0.0;
      double speed = 0.0;
      bool ok = false;
    };
    std::vector<Slot> slots(static_cast<size_t>(trials));
    parallel_for(trials, workers, [&](int i) {
      Rng rng(mix64(seed, static_cast<uint64_t>(i) + 1));
      const auto t = pq_walk(spec, steps, rng, 0);
      auto& s = slots[static_cast<size_t>(i)];
      s.ok = t.valid;
      if (s.ok) {
        s.theta = t.fwd.back().theta;
        s.speed = t.fwd.back().rho / steps;
      }
    });
    std::vector<double> speeds;
    for (const Slot& s : slots) {
      if (!s.ok) continue;
      sample.angles.push_back(s.theta);
      speeds.push_back(s.speed);
    }
    l = report_from_samples(speeds, {}, "pq_speed", 30);
    // Endpoint angles stand in for boundary points; the recorded rays have
    // converged to within e^{-l' n} of their limits, l' = l_hat / 2.
    sample.truncation_bound = std::exp(-0.5 * l.value * steps);
    EntropyConfig hcfg;
    hcfg.n = cfg.get_int("entropy_n", 0);
    hcfg.m_build = cfg.get_int("entropy_m_build", 0);
    hcfg.m_eval = cfg.get_int("entropy_m_eval", 0);
    hcfg.environments = cfg.get_int("entropy_envs", 0);
    hcfg.workers = workers;
    h = entropy(tessellation_endpoint_sampler(spec), hcfg, mix64(seed, 0xD1));
    log_report(text, "dim pq speed", l);
    log_report(text, "dim pq entropy", h);
  } else {
    sample.angles.resize(static_cast<size_t>(trials));
    parallel_for(trials, workers, [&](int i) {
      Rng rng(mix64(seed, static_cast<uint64_t>(i) + 1));
      sample.angles[static_cast<size_t>(i)] = 2.0 * kPi * rng.u01();
    });
    sample.truncation_bound = 0.0;
  }

  const auto dim = dimension_correlation(sample, scales);
  log_report(text, "dim correlation slope", dim);
  const double h_over_l = h.value / l.value;
  const double slope_bound = h_over_l + 0.1;
  const bool pass = walk == "pq" ? (dim.value < 0.9 && dim.value <= slope_bound)
                                 : std::fabs(dim.value - 1.0) <= 0.05;

  CsvWriter csv(run.file("dim.csv"),
                {"correlation dimension of endpoint boundary angles",
                 "slope_bound = h_hat / l_hat + 0.1; pass checks slope < 0.9 and",
                 "slope <= slope_bound for the pq walk, |slope - 1| <= 0.05 for uniform",
                 "columns ending in _3se are 3 sigma"},
                {"walk", "p", "q", "n_steps", "n_angles", "trunc_bound", "slope", "slope_3se",
                 "n_scales", "scale_min", "scale_max", "residual_rms", "h_hat", "h_3se", "l_hat",
                 "l_3se", "h_over_l", "slope_bound", "pass"});
  csv.row({walk, CsvWriter::num(walk == "pq" ? p : kNan),
           CsvWriter::num(walk == "pq" ? q : kNan),
           CsvWriter::num(walk == "pq" ? steps : kNan), CsvWriter::num(dim.n_samples),
           CsvWriter::num(sample.truncation_bound), CsvWriter::num(dim.value),
           CsvWriter::num(3.0 * dim.std_error), CsvWriter::num(dim.diagnostics.at("n_scales")),
           CsvWriter::num(dim.diagnostics.at("scale_min")),
           CsvWriter::num(dim.diagnostics.at("scale_max")),
           CsvWriter::num(dim.diagnostics.at("residual_rms")), CsvWriter::num(h.value),
           CsvWriter::num(3.0 * h.std_error), CsvWriter::num(l.value),
           CsvWriter::num(3.0 * l.std_error), CsvWriter::num(h_over_l),
           CsvWriter::num(slope_bound), CsvWriter::num(pass ? 1 : 0)});
  std::cout << "  slope " << dim.value << " (3se " << 3.0 * dim.std_error << "), bound "
            << slope_bound << ", pass " << (pass ? 1 : 0) << "\n";

  const auto curve = correlation_curve(sample, scales);
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : curve) {
    mx += x;
    my += y;
  }
  if (!curve.empty()) {
    mx /= static_cast<double>(curve.size());
    my /= static_cast<double>(curve.size());
  }
  std::vector<double> lx, lc, fit;
  for (const auto& [x, y] : curve) {
    lx.push_back(x);
    lc.push_back(y);
    fit.push_back(my + dim.value * (x - mx));
  }
  {
    CsvWriter plot(run.file("dim_plot.csv"),
                   {"correlation integral in log-log coordinates with the fitted slope"},
                   {"log_r", "log_c", "fit"});
    for (size_t i = 0; i < lx.size(); ++i)
      plot.row({CsvWriter::num(lx[i]), CsvWriter::num(lc[i]), CsvWriter::num(fit[i])});
  }
  emit_plot(run.file("dim.svg"), "correlation integral", "log r", "log C(r)",
            {{"log_c", lx, lc}, {"fit", lx, fit}});
  run.finish();
  return pass ? 0 : 1;
}

int cmd_edgeprob(Config cfg) {
  ensure(cfg, "lambda", "1");
  ensure(cfg, "r", "1,2,4");
  ensure(cfg, "trials", "10000");
  const uint64_t seed = parse_seed(cfg.get("seed", ""));
  const int workers = resolve_workers(cfg.get_int("workers", 0));
  const int trials = cfg.get_int("trials", 0);
  const auto lambdas = cfg.get_grid("lambda", {});
  const auto rs = cfg.get_grid("r", {});
  if (trials < 1) throw std::invalid_argument("edgeprob: trials must be positive");
  for (double l : lambdas)
    if (!(l >= 0.05 && l <= 1.0))
      throw std::invalid_argument("edgeprob: lambda grid outside [0.05, 1]");
  for (double r : rs)
    if (!(r > 0.0 && r <= 12.0))
      throw std::invalid_argument("edgeprob: r grid outside (0, 12]");

  RunDir run(cfg.get("out", ""), "edgeprob", cfg, seed,
             {"edgeprob.csv", "edgeprob_plot.csv", "estimates.txt", "edgeprob.svg"});
  std::cout << "run: " << run.path() << "\n";
  std::ofstream text(run.file("estimates.txt"));
  CsvWriter csv(run.file("edgeprob.csv"),
                {"probability that two points at distance r are Delaunay neighbors,",
                 "sandwiched between the void bounds exp(-lambda V(r/2)) and",
                 "exp(-lambda V(r/2 - 3)); within = 1 when p_hat lies inside at 3 sigma"},
                {"lambda", "r", "trials", "edges", "p_hat", "p_3se", "lower", "upper", "within"});

  const VolumeProfile vol(2);
  int rc = 0;
  std::vector<double> px, lp, llo, lup;
  size_t gi = 0;
  for (double lambda : lambdas) {
    for (double r : rs) {
      const uint64_t gseed = mix64(seed, 4000 + gi);
      ++gi;
      constexpr int kChunk = 500;
      const int n_chunks = (trials + kChunk - 1) / kChunk;
      std::vector<EdgeProbability> parts(static_cast<size_t>(n_chunks));
      parallel_for(n_chunks, workers, [&](int c) {
        const int size = std::min(kChunk, trials - c * kChunk);
        parts[static_cast<size_t>(c)] =
            edge_probability(lambda, r, size, mix64(gseed, static_cast<uint64_t>(c) + 1));
      });
      int64_t edges = 0;
      int64_t done = 0;
      for (const auto& part : parts) {
        edges += part.edges;
        done += part.trials;
      }
      const double p_hat = static_cast<double>(edges) / static_cast<double>(done);
      const double se =
          std::sqrt(std::max(p_hat * (1.0 - p_hat), 1.0 / static_cast<double>(done)) /
                    static_cast<double>(done));
      const double lower = std::exp(-lambda * vol.volume(0.5 * r));
      const double upper = std::exp(-lambda * vol.volume(0.5 * r - 3.0));
      const bool within = p_hat >= lower - 3.0 * se && p_hat <= upper + 3.0 * se;
      if (!within) rc = 1;
      text << "[edgeprob lambda=" << format_g17(lambda) << " r=" << format_g17(r) << "]\n"
           << "p_hat: " << format_g17(p_hat) << "\nstd_error: " << format_g17(se)
           << "\nn_samples: " << done << "\nlower: " << format_g17(lower)
           << "\nupper: " << format_g17(upper) << "\n\n";
      csv.row({CsvWriter::num(lambda), CsvWriter::num(r), CsvWriter::num(done),
               CsvWriter::num(edges), CsvWriter::num(p_hat), CsvWriter::num(3.0 * se),
               CsvWriter::num(lower), CsvWriter::num(upper), CsvWriter::num(within ? 1 : 0)});
      std::cout << "  lambda " << format_g17(lambda) << " r " << format_g17(r) << ": p_hat "
                << p_hat << " in [" << lower << ", " << upper << "] within " << (within ? 1 : 0)
                << "\n";
      px.push_back(r);
      lp.push_back(p_hat > 0.0 ? std::log10(p_hat) : kNan);
      llo.push_back(std::log10(lower));
      lup.push_back(std::log10(upper));
    }
  }
  {
    CsvWriter plot(run.file("edgeprob_plot.csv"),
                   {"neighbor probability against the void bounds, log10 scale"},
                   {"r", "log10_p_hat", "log10_lower", "log10_upper"});
    for (size_t i = 0; i < px.size(); ++i)
      plot.row({CsvWriter::num(px[i]), CsvWriter::num(lp[i]), CsvWriter::num(llo[i]),
                CsvWriter::num(lup[i])});
  }
  emit_plot(run.file("edgeprob.svg"), "Delaunay neighbor probability", "r", "log10 p",
            {{"log10_p_hat", px, lp}, {"log10_lower", px, llo}, {"log10_upper", px, lup}});
  run.finish();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation laboratory for distance-stationary walks on the hyperbolic plane"};
  app.require_subcommand(1);

  auto* st = app.add_subcommand("selftest", "run the geometry and oracle invariant suites");
  std::string inject;
  st->add_option("--inject", inject, "fault to inject (busemann-sign), for harness testing");

  Common c_ra, c_pq, c_pd, c_lyap, c_dim, c_ep;
  auto* ra = app.add_subcommand("ra", "right-angled isometry walk speed across an r grid");
  add_common(ra, c_ra, true);
  std::string ra_r;
  auto* o_ra_r = ra->add_option("--r", ra_r, "comma-separated translation lengths");

  auto* pq = app.add_subcommand("pq", "tessellation walk speed across a q grid");
  add_common(pq, c_pq, true);
  std::string pq_p, pq_q;
  auto* o_pq_p = pq->add_option("--p", pq_p, "polygon size");
  auto* o_pq_q = pq->add_option("--q", pq_q, "comma-separated vertex degrees");

  auto* pd = app.add_subcommand("pd", "Poisson-Delaunay walk asymptotics across a lambda grid");
  add_common(pd, c_pd, true);
  std::string pd_lambda, pd_gh, pd_gt;
  auto* o_pd_lambda = pd->add_option("--lambda", pd_lambda, "comma-separated intensities in [0.05, 1]");
  auto* o_pd_gh = pd->add_option("--graph-horizon", pd_gh, "graph-distance probe horizon (steps)");
  auto* o_pd_gt = pd->add_option("--graph-trials", pd_gt, "trials carrying the graph-distance probe");

  auto* lyap = app.add_subcommand("lyap", "Lyapunov exponent of a matrix product walk");
  add_common(lyap, c_lyap, true);
  std::string lyap_dist;
  lyap->add_option("--dist", lyap_dist, "step distribution file: 'a b c d [prob]' per line");

  auto* dim = app.add_subcommand("dim", "correlation dimension of endpoint boundary angles");
  add_common(dim, c_dim, true);
  std::string dim_walk, dim_p, dim_q;
  auto* o_dim_walk = dim->add_option("--walk", dim_walk, "angle source: pq or uniform");
  auto* o_dim_p = dim->add_option("--p", dim_p, "polygon size for the pq walk");
  auto* o_dim_q = dim->add_option("--q", dim_q, "vertex degree for the pq walk");

  auto* ep = app.add_subcommand("edgeprob", "Delaunay neighbor probability against void bounds");
  add_common(ep, c_ep, false);
  std::string ep_lambda, ep_r;
  auto* o_ep_lambda = ep->add_option("--lambda", ep_lambda, "comma-separated intensities in [0.05, 1]");
  auto* o_ep_r = ep->add_option("--r", ep_r, "comma-separated pair distances in (0, 12]");
  c_ep.o_trials = ep->add_option("--trials", c_ep.trials, "trials per grid point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (st->parsed()) return cmd_selftest(inject);
    if (ra->parsed()) {
      Config cfg = base_config(c_ra);
      if (o_ra_r->count() > 0) cfg.set("r", ra_r);
      return cmd_ra(std::move(cfg));
    }
    if (pq->parsed()) {
      Config cfg = base_config(c_pq);
      if (o_pq_p->count() > 0) cfg.set("p", pq_p);
      if (o_pq_q->count() > 0) cfg.set("q", pq_q);
      return cmd_pq(std::move(cfg));
    }
    if (pd->parsed()) {
      Config cfg = base_config(c_pd);
      if (o_pd_lambda->count() > 0) cfg.set("lambda", pd_lambda);
      if (o_pd_gh->count() > 0) cfg.set("graph_horizon", pd_gh);
      if (o_pd_gt->count() > 0) cfg.set("graph_trials", pd_gt);
      return cmd_pd(std::move(cfg));
    }
    if (lyap->parsed()) return cmd_lyap(base_config(c_lyap), lyap_dist);
    if (dim->parsed()) {
      Config cfg = base_config(c_dim);
      if (o_dim_p->count() > 0) cfg.set("p", dim_p);
      if (o_dim_q->count() > 0) cfg.set("q", dim_q);
      return cmd_dim(std::move(cfg), o_dim_walk->count() > 0 ? dim_walk : "");
    }
    if (ep->parsed()) {
      Config cfg = base_config(c_ep);
      if (o_ep_lambda->count() > 0) cfg.set("lambda", ep_lambda);
      if (o_ep_r->count() > 0) cfg.set("r", ep_r);
      return cmd_edgeprob(std::move(cfg));
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
