#pragma once

#include <array>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "hwalk/geom.hpp"
#include "hwalk/rng.hpp"

// Lazily generated homogeneous Poisson field on the hyperbolic plane.
//
// Space is tiled into annular-sector chunks: ring k covers hyperbolic radius
// [k, k+1) from the global origin, split into 2^m(k) sectors with m(k) chosen
// so chunk areas stay within a factor 2 of a fixed target.  Chunk content is
// a pure function of (master seed, chunk index, lambda_max), so any region
// can be regenerated bit-identically after cache eviction, and walks that
// backtrack see a consistent environment.
//
// Sector counts grow like e^k, overrunning 64-bit indices near ring 45, so a
// sector index is a little-endian multi-word integer.  All index arithmetic
// the field needs is adding small offsets and rescaling between rings (shifts
// by whole bits), which keeps angular bookkeeping exact at any radius.
//
// Coordinates: each chunk has a reference isometry G_c = R(theta_c) T(rho_c)
// taking the origin to the chunk center.  Points are stored in chunk-local
// disk coordinates, which stay small; global positions exist only through
// composed isometries.  (Raw disk coordinates lose all precision ~37 length
// units from the frame origin, hence this anchoring.)

namespace hwalk {

class SectorIndex {
 public:
  SectorIndex() = default;
  static SectorIndex zero(int bits) {
    SectorIndex s;
    s.bits_ = bits;
    s.w_.assign(words_for(bits), 0);
    return s;
  }

  int bits() const { return bits_; }
  const std::vector<uint64_t>& words() const { return w_; }

  // this + d modulo 2^bits (the sector circle wraps around).
  SectorIndex add(int64_t d) const;

  // Reinterpret at another ring's resolution: value * 2^(to_bits - bits),
  // truncating on the way down.
  SectorIndex rescale(int to_bits) const;

  // Centered difference (this - other) mod 2^bits in (-2^63, 2^63), or
  // nullopt when the sectors are too far apart for an exact small answer.
  std::optional<int64_t> diff_small(const SectorIndex& other) const;

  // Leading 53 bits of (value + 0.5) / 2^bits, the sector-center fraction of
  // a full turn.
  double center_fraction() const;

  bool operator==(const SectorIndex& o) const { return bits_ == o.bits_ && w_ == o.w_; }
  uint64_t hash() const;

 private:
  static int words_for(int bits) { return bits == 0 ? 1 : (bits + 63) / 64; }
  void mask_top();
  std::vector<uint64_t> w_{0};
  int bits_{0};
};

struct ChunkKey {
  uint32_t ring{0};
  SectorIndex sector;
  bool operator==(const ChunkKey& o) const { return ring == o.ring && sector == o.sector; }
};

// Synthetic handles (the inserted root, planted test points) use this ring.
inline constexpr uint32_t kSyntheticRing = 0xffffffffu;

struct ChunkKeyHash {
  size_t operator()(const ChunkKey& k) const {
    return static_cast<size_t>(mix64(k.ring, k.sector.hash()));
  }
};

struct MarkedPoint {
  cplx pos;     // chunk-local disk coordinates
  double mark;  // uniform [0,1]; restriction mark <= lambda/lambda_max thins
};

// A point as returned by a disk query: identity plus position in the query
// frame.  Synthetic points (ring == kSyntheticRing) use `index` as a serial.
struct FieldPoint {
  ChunkKey chunk;
  uint32_t index{0};
  cplx pos;
  bool is_synthetic() const { return chunk.ring == kSyntheticRing; }
};

// Stable 64-bit identity of a point handle, independent of the query frame.
inline uint64_t point_site(const FieldPoint& p) {
  return mix64(ChunkKeyHash{}(p.chunk), p.index);
}

// Isometry G_chunk(anchor) o local, kept exact at any distance from the
// global origin because only the bounded `local` part is stored in doubles.
struct AnchoredFrame {
  ChunkKey anchor;
  Mobius local;
};

struct GlobalPolar {
  double rho;     // hyperbolic distance from the global origin
  double theta;   // absolute angle (leading double; fine for O(1) work)
  double dtheta;  // exact small offset from the anchor's center angle
};

class LazyField {
 public:
  LazyField(uint64_t master_seed, double lambda_max, size_t cache_capacity = 1u << 18);

  uint64_t master_seed() const { return seed_; }
  double lambda_max() const { return lambda_max_; }

  // Configured ceiling on query radii; the hard kMaxQueryRadius below caps it
  // regardless, since positions farther out collapse onto the disk boundary.
  double query_radius_max{60.0};

  // --- chunk layout ------------------------------------------------------
  int sector_bits(uint32_t ring) const;
  double chunk_area(uint32_t ring) const;               // exact, all chunks of a ring
  double sector_width(uint32_t ring) const;              // angular width
  double anchor_rho(uint32_t ring) const { return ring + 0.5; }
  ChunkKey chunk_of(uint32_t ring, uint64_t sector) const;

  // Relative reference isometry G_from^{-1} o G_to, exact for neighboring
  // anchors (angular difference taken in integer sector units) and valid at
  // any radius via the scaled representation.
  ScaledMobius rel_anchor(const ChunkKey& from, const ChunkKey& to) const;

  // --- content -----------------------------------------------------------
  // Pure regeneration of one chunk's points (uncached path, same content).
  std::vector<MarkedPoint> sample_chunk(const ChunkKey& idx) const;
  std::shared_ptr<const std::vector<MarkedPoint>> chunk(const ChunkKey& idx) const;
  cplx point_local(const ChunkKey& chunk_key, uint32_t index) const;

  // All field points with mark <= lambda/lambda_max within hyperbolic
  // distance `radius` of the frame origin, positions in the frame's
  // coordinates.  Sorted by (chunk, index) for deterministic downstream use.
  std::vector<FieldPoint> query_disk(const AnchoredFrame& frame, double radius,
                                     double lambda) const;
  std::vector<FieldPoint> query_disk(cplx center, double radius, double lambda) const;

  // --- frames ------------------------------------------------------------
  AnchoredFrame origin_frame() const;
  Mobius anchor_from_origin(const ChunkKey& c) const;  // G_c while representable
  GlobalPolar frame_polar(const AnchoredFrame& f) const;
  GlobalPolar point_polar(const AnchoredFrame& f, cplx pos_in_frame) const;
  // Re-express frame o step with the anchor moved to `new_anchor`.
  AnchoredFrame shift_frame(const AnchoredFrame& f, const Mobius& step,
                            const ChunkKey& new_anchor) const;
  // Chunk containing the point at `pos_in_frame` relative to `f`.
  ChunkKey locate_chunk(const AnchoredFrame& f, cplx pos_in_frame) const;

  // --- export ------------------------------------------------------------
  void export_snapshot(std::ostream& os, uint32_t ring_lo, uint32_t ring_hi,
                       uint64_t max_sectors_per_ring) const;

  static constexpr double kMaxQueryRadius = 35.0;  // single-frame precision limit

 private:
  // Sector index at `ring` of the angle (anchor center + dtheta); exact
  // integer arithmetic on the anchor index plus a small double offset.
  SectorIndex sector_at(const ChunkKey& anchor, double dtheta, uint32_t ring) const;

  struct Shard {
    std::mutex mu;
    std::unordered_map<ChunkKey, std::pair<std::shared_ptr<const std::vector<MarkedPoint>>,
                                           std::list<ChunkKey>::iterator>,
                       ChunkKeyHash>
        map;
    std::list<ChunkKey> lru;
  };
  static constexpr int kShards = 64;

  uint64_t seed_;
  double lambda_max_;
  size_t shard_capacity_;
  mutable std::array<Shard, kShards> shards_;
};

// points + synthetic root at `root_pos` (frame coordinates), root flagged via
// its synthetic handle; rejects a duplicate within 1e-12 of an existing point.
std::vector<FieldPoint> insert_root(std::vector<FieldPoint> points, cplx root_pos,
                                    uint32_t serial = 0);

// Chunk-local coordinates of a point at global polar (r, theta_c + dtheta)
// relative to the anchor at (rho_c, theta_c); inverse of point_polar's core.
cplx local_from_polar(double rho_c, double r, double dtheta);

}  // namespace hwalk
