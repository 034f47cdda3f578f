#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "hwalk/field.hpp"
#include "hwalk/geom.hpp"
#include "hwalk/local_graph.hpp"
#include "hwalk/rng.hpp"

// The four walk families, all recorded the same way: polar traces about the
// starting point.  Every family keeps two distance accountings with disjoint
// rounding behavior (for the lattice walks, a normalized scaled pair against
// raw products under exact power-of-two rescaling, both stored along the
// tree of first-arrival paths so that backtracks restore instead of
// multiply; for the matrix walk, QR accumulation against the disk model;
// for the field walk, anchored frame coordinates against a scalar triangle
// recursion).  A trace whose routes drift apart by more than 1e-6 relative
// is flagged invalid rather than silently trusted.

namespace hwalk {

struct TraceStep {
  double rho{0};       // ambient distance d(x0, xk)
  double theta{0};     // boundary angle of xk seen from x0, in [0, 2pi)
  double step_len{0};  // d(x_{k-1}, xk), exact from the step's own frame; 0 at k = 0
  int d_graph{0};      // per-family graph bookkeeping, see the walk functions
  uint64_t site{0};    // vertex identity where the walk lives on a graph
};

struct WalkTrace {
  std::vector<TraceStep> fwd;   // fwd[k] = x_k; fwd[0] is the start
  std::vector<TraceStep> past;  // past[i] = x_{-(i+1)}, an independent branch from x_0
  bool valid{true};             // both distance routes agreed within 1e-6 relative
  double route_gap{0};          // worst relative disagreement observed
  bool truncated{false};        // cut short (uncertifiable window on the PD walk)
};

inline constexpr double kRouteTolerance = 1e-6;

// Distance between two recorded positions, by the law of cosines about x0.
// Intended for pairs where at least one point is within O(10) of the start;
// for two far points with a tiny angular gap the angle column carries no
// information (use step_len for consecutive pairs instead).
double trace_dist(const TraceStep& a, const TraceStep& b);

// Text export, one row per step: k d_ambient d_graph theta flag.  Past-branch
// rows use negative k; flag is 0 for a valid trace, 1 for invalid/truncated.
void export_trace(const WalkTrace& t, std::ostream& os);

// Isometry walk generated by quarter turns and a fixed-length translation:
// each step composes rotation(k pi/2), k uniform in {-1, 0, 1, 2}, then
// translation(r).  d_graph is the distance in the rotation-translation word
// tree (reduced by immediate backtracks); at r = 2 acosh(sqrt 2) the orbit is
// an embedded 4-regular tree and d_graph is its graph metric.  site
// identifies the tree vertex.  past_steps < 0 means past_steps = n_steps.
WalkTrace right_angled_walk(double r, int n_steps, Rng& rng, int past_steps = -1);

// Regular tessellation by p-gons, q around each vertex; hyperbolic when
// 1/p + 1/q < 1/2.  The side length comes from the right triangle with
// angles pi/p, pi/q at half a side: cosh(r/2) = cos(pi/p) / sin(pi/q).
struct TessellationSpec {
  int p{3};
  int q{7};
  double r_pq{0};
  TessellationSpec(int p_, int q_);
};

// Nearest-neighbor walk on the vertices of the {p,q} tessellation: each step
// turns by 2 pi k / q (k uniform in 0..q-1) from the reversed arrival
// direction and translates by r_pq.  The trailing half-turn keeps the frame
// heading on an edge direction for odd q as well (for even q it only relabels
// k, which is uniform anyway), so positions stay exactly on tessellation
// vertices.  d_graph counts traversed edges (increment 1 per step).  site is
// a positional fingerprint (polar coordinates rounded on a 1e-8 grid),
// reliable while the distance from the start stays under ~12; entropy
// estimation keeps inside that range.
WalkTrace pq_walk(const TessellationSpec& spec, int n_steps, Rng& rng, int past_steps = -1);

// Endpoint-only batch runs for entropy estimation: m independent n-step
// walks drawing from rng exactly like the full-trace functions, recording
// only each walk's final site.  Skips trace bookkeeping and the dual-route
// check, so keep n inside the range the full-trace tests have validated.
void right_angled_endpoints(double r, int n_steps, int m, Rng& rng,
                            std::vector<uint64_t>& out);
void pq_endpoints(const TessellationSpec& spec, int n_steps, int m, Rng& rng,
                  std::vector<uint64_t>& out);

// Finitely supported step distribution on SL(2, R), matrices row-major.
struct MatrixDist {
  std::vector<std::array<double, 4>> mats;
  std::vector<double> probs;

  static MatrixDist uniform(std::vector<std::array<double, 4>> ms);
  void validate() const;  // det within 1e-10 of 1 each, probs sum to 1 within 1e-12
};

std::array<double, 4> sample_matrix(const MatrixDist& dist, Rng& rng);

// Action of a matrix on a projective direction: returns the new direction in
// [0, pi) and log |A v| for the unit vector v at `angle`.
std::pair<double, double> apply_direction(const std::array<double, 4>& m, double angle);

struct MatrixStep {
  double log_norm{0};    // log sigma_1 of the accumulated product
  double quotient_d{0};  // sqrt(log^2 sigma_1 + log^2 sigma_2), the quotient metric
  double v_angle{0};     // projective direction of v_k, in [0, pi)
  double log_gain{0};    // log |A_k v_{k-1}|
};

struct MatrixTrace {
  std::vector<MatrixStep> steps;  // steps[0] is the identity state
  bool valid{true};               // QR route vs disk-model route within 1e-6
  double route_gap{0};
  double det_drift{0};  // worst |log sigma_1 + log sigma_2| seen before renormalizing
};

// Left products A_n ... A_1 tracked in QR form with log-domain diagonal, so
// log sigma_1 never leaves double range; v_0 is the projective start.
MatrixTrace matrix_walk(const MatrixDist& dist, int n_steps, Rng& rng,
                        std::array<double, 2> v0 = {1.0, 0.0});

struct PdWalkResult {
  WalkTrace trace;
  int root_degree{0};
  int horizon{0};           // steps spanned by the exact graph-distance probe
  int d_graph_horizon{-1};  // d_G(x_0, x_horizon) by bidirectional search; -1 if skipped
};

// Uniform-neighbor walk on the certified Delaunay graph of vg's field.  The
// root must sit at the global origin (pd_walk plants it there); positions
// are read off each vertex's anchored frame, so rho stays exact at any
// distance.  d_graph counts traversed edges.  An uncertifiable window
// truncates the trace and sets the flag instead of guessing an adjacency.
PdWalkResult pd_walk_from(VertexGraph& vg, const FieldPoint& root, int n_steps, Rng& rng,
                          int past_steps = -1, int graph_horizon = 0);

// Fresh-root convenience: plants the root at the origin of `field`.
// Preconditions: lambda in [0.05, 1], n_steps <= 200.
PdWalkResult pd_walk(const LazyField& field, double lambda, int n_steps, Rng& rng,
                     int past_steps = -1, int graph_horizon = 0);

}  // namespace hwalk
