#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hwalk/field.hpp"
#include "hwalk/geom.hpp"
#include "hwalk/triangulation.hpp"

// Delaunay structure of a windowed point sample, with certificates that make
// window truncation invisible: a root whose fan is closed and whose fan
// circumdisks sit strictly inside the sampled ball has exactly the adjacency
// it would have in the infinite process, because no point outside the window
// can enter any of those disks, and a closed fan leaves no room for new
// root triangles.

namespace hwalk {

struct LocalGraph {
  std::vector<cplx> points;  // working-frame disk coordinates
  int root;
  Triangulation tri;
  std::vector<std::pair<int, int>> edges;  // hyperbolically witnessed, i < j
};

// Smallest over witnessing disks of |center| + radius (Euclidean).  The edge
// is hyperbolically Delaunay exactly when this dips below 1: some empty disk
// through the endpoints then fits inside the unit disk.
double edge_witness_reach(const Triangulation& t, int i, int j);

// Triangulates the points and keeps the hyperbolically witnessed edges.
LocalGraph build_local(const std::vector<cplx>& points, int root);

struct RootCertificate {
  bool certified{false};
  bool fan_closed{false};
  // Hyperbolic radius that contains every root fan circumdisk; infinite when
  // the fan is open or a disk escapes the unit disk.
  double needed_radius{0};
};

// Window-independence certificate for the root of a local graph built from
// all field points within `window_radius` of the frame origin.
RootCertificate certify_root(const LocalGraph& g, double window_radius, double margin = 0.5);

// Same certificate straight off a triangulation, skipping the edge filter:
// for a certified root the fan disks sit inside the unit disk, so every fan
// edge is witnessed and the Euclidean fan already is the hyperbolic one.
RootCertificate certify_fan(const Triangulation& tri, int root, double window_radius,
                            double margin = 0.5);

// Vertices sharing a fan triangle with the root (its Euclidean Delaunay
// neighbors; equal to the witnessed neighbors whenever certify_fan holds).
std::vector<int> fan_neighbors(const Triangulation& tri, int root);

// Indices adjacent to the root among the witnessed edges.
std::vector<int> root_neighbors(const LocalGraph& g);

// Certified adjacency over a lazy field: every vertex's Delaunay neighbors
// are computed from a window around it, regrown until the certificate holds,
// and memoized by handle.  Synthetic vertices near the origin (the walk root,
// planted pairs) participate via plant().
class VertexGraph {
 public:
  VertexGraph(const LazyField& field, double lambda, double margin = 0.5);

  // Registers a synthetic vertex; `pos` is in global coordinates and must be
  // within distance 10 of the origin.  Serials must be distinct.
  FieldPoint plant(cplx pos, uint32_t serial);

  // Canonical frame centered at the vertex.
  AnchoredFrame frame_of(const FieldPoint& v) const;

  // Certified neighbors; positions are in frame_of(v) coordinates.  Throws
  // std::runtime_error when no window up to the radius cap certifies.
  const std::vector<FieldPoint>& neighbors(const FieldPoint& v);

  // Graph distance by bidirectional search, or nullopt when above max_dist.
  std::optional<int> distance(const FieldPoint& a, const FieldPoint& b, int max_dist);

  double start_radius() const { return start_radius_; }
  size_t cached() const { return adj_.size(); }
  const LazyField& field() const { return *field_; }
  double lambda() const { return lambda_; }

 private:
  struct VKey {
    uint64_t h;
    bool operator==(const VKey&) const = default;
  };
  struct VKeyHash {
    size_t operator()(const VKey& k) const { return static_cast<size_t>(k.h); }
  };
  static VKey key_of(const FieldPoint& v) { return {point_site(v)}; }

  const LazyField* field_;
  double lambda_;
  double margin_;
  double start_radius_;
  std::vector<std::pair<cplx, uint32_t>> planted_;  // global position, serial
  std::unordered_map<VKey, std::vector<FieldPoint>, VKeyHash> adj_;
};

struct DegreeStats {
  std::vector<int> degrees;
  double mean{0};
  double mean_log{0};  // E[log degree], the one-step entropy of the walk
  int attempted{0};
  int failed{0};  // uncertifiable samples (each aborts if they exceed 1%)
};

// Degree of the root vertex under the Palm distribution: each sample plants a
// root at the origin of a fresh field with intensity `lambda` and reads off
// its certified degree.
DegreeStats root_degree_stats(double lambda, int samples, uint64_t seed);

struct EdgeProbability {
  double r{0};
  int trials{0};
  int edges{0};
  double p_hat{0};
  double std_err{0};
};

// Probability that two points at hyperbolic distance r are Delaunay
// neighbors, by planting the pair into fresh fields (two-point Palm).
EdgeProbability edge_probability(double lambda, double r, int trials, uint64_t seed);

}  // namespace hwalk
