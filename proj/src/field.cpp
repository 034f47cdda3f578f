#include "hwalk/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "hwalk/rng.hpp"

namespace hwalk {

// --- SectorIndex -----------------------------------------------------------

void SectorIndex::mask_top() {
  size_t n = static_cast<size_t>(words_for(bits_));
  w_.resize(n, 0);
  if (bits_ == 0) {
    w_[0] = 0;
    return;
  }
  int top = bits_ - 64 * (static_cast<int>(n) - 1);
  if (top < 64) w_[n - 1] &= (uint64_t(1) << top) - 1;
}

SectorIndex SectorIndex::add(int64_t d) const {
  SectorIndex r = *this;
  if (d >= 0) {
    unsigned __int128 carry = static_cast<uint64_t>(d);
    for (size_t i = 0; i < r.w_.size() && carry; ++i) {
      carry += r.w_[i];
      r.w_[i] = static_cast<uint64_t>(carry);
      carry >>= 64;
    }
  } else {
    uint64_t borrow = static_cast<uint64_t>(-(d + 1)) + 1;
    for (size_t i = 0; i < r.w_.size() && borrow; ++i) {
      uint64_t before = r.w_[i];
      r.w_[i] = before - borrow;
      borrow = before < borrow ? 1 : 0;
    }
  }
  r.mask_top();
  return r;
}

SectorIndex SectorIndex::rescale(int to_bits) const {
  SectorIndex r;
  r.bits_ = to_bits;
  r.w_.assign(words_for(to_bits), 0);
  int sh = to_bits - bits_;
  if (sh >= 0) {
    int ws = sh / 64, bs = sh % 64;
    for (int i = static_cast<int>(w_.size()) - 1; i >= 0; --i) {
      uint64_t v = w_[i];
      if (v == 0) continue;
      size_t lo = static_cast<size_t>(i) + ws, hi = lo + 1;
      if (bs == 0) {
        if (lo < r.w_.size()) r.w_[lo] |= v;
      } else {
        if (lo < r.w_.size()) r.w_[lo] |= v << bs;
        if (hi < r.w_.size()) r.w_[hi] |= v >> (64 - bs);
      }
    }
  } else {
    int ws = -sh / 64, bs = -sh % 64;
    for (size_t i = 0; i < r.w_.size(); ++i) {
      size_t lo = i + ws, hi = lo + 1;
      uint64_t v = 0;
      if (lo < w_.size()) v = w_[lo] >> bs;
      if (bs != 0 && hi < w_.size()) v |= w_[hi] << (64 - bs);
      r.w_[i] = v;
    }
  }
  r.mask_top();
  return r;
}

namespace {

// a - b word-wise with borrow; result masked by the caller.
std::vector<uint64_t> sub_words(const std::vector<uint64_t>& a,
                                const std::vector<uint64_t>& b) {
  std::vector<uint64_t> d(a.size());
  uint64_t borrow = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    uint64_t bi = i < b.size() ? b[i] : 0;
    uint64_t t = a[i] - bi;
    uint64_t under = a[i] < bi ? 1u : 0u;
    uint64_t t2 = t - borrow;
    under |= t < borrow ? 1u : 0u;
    d[i] = t2;
    borrow = under;
  }
  return d;
}

void mask_words(std::vector<uint64_t>& w, int bits) {
  size_t n = bits == 0 ? 1 : static_cast<size_t>((bits + 63) / 64);
  w.resize(n, 0);
  if (bits == 0) {
    w[0] = 0;
    return;
  }
  int top = bits - 64 * (static_cast<int>(n) - 1);
  if (top < 64) w[n - 1] &= (uint64_t(1) << top) - 1;
}

// Value held in a masked word vector, if it fits comfortably in int64.
std::optional<int64_t> small_value(const std::vector<uint64_t>& w) {
  for (size_t i = 1; i < w.size(); ++i)
    if (w[i] != 0) return std::nullopt;
  if (w[0] >> 62) return std::nullopt;
  return static_cast<int64_t>(w[0]);
}

}  // namespace

std::optional<int64_t> SectorIndex::diff_small(const SectorIndex& other) const {
  std::vector<uint64_t> fwd = sub_words(w_, other.w_);
  mask_words(fwd, bits_);
  std::vector<uint64_t> bwd = sub_words(other.w_, w_);
  mask_words(bwd, bits_);
  auto f = small_value(fwd);
  auto b = small_value(bwd);
  if (f && b) return *f <= *b ? *f : -*b;
  if (f) return *f;
  if (b) return -*b;
  return std::nullopt;
}

double SectorIndex::center_fraction() const {
  double f = std::ldexp(0.5, -bits_);
  for (size_t i = 0; i < w_.size(); ++i)
    if (w_[i] != 0)
      f += std::ldexp(static_cast<double>(w_[i]), static_cast<int>(64 * i) - bits_);
  return f;
}

uint64_t SectorIndex::hash() const {
  uint64_t h = static_cast<uint64_t>(bits_);
  for (uint64_t w : w_) h = mix64(h, w);
  return h;
}

namespace {

bool sector_value_less(const SectorIndex& a, const SectorIndex& b) {
  const auto& wa = a.words();
  const auto& wb = b.words();
  size_t n = std::max(wa.size(), wb.size());
  for (size_t i = n; i-- > 0;) {
    uint64_t va = i < wa.size() ? wa[i] : 0;
    uint64_t vb = i < wb.size() ? wb[i] : 0;
    if (va != vb) return va < vb;
  }
  return false;
}

double ring_log_area(uint32_t k) {
  double kk = static_cast<double>(k);
  return std::log(2.0 * kPi) + log_sub_exp(log_cosh(kk + 1.0), log_cosh(kk));
}

// Chunk-local coordinates of the point at global polar (r, theta_c + delta),
// with the angular offset passed as sign and log|sin(delta/2)| so it survives
// underflow at extreme radii.  The anchor sits at (rho_c, theta_c) with its
// positive axis pointing radially outward, so the origin lies at local angle
// pi and a point on the +delta side lands at angle pi - beta.
cplx local_from_ls(double rho_c, double r, double sgn, double log_sin_half) {
  double d = side_from_sides_angle_ls(rho_c, r, log_sin_half);
  double beta = angle_from_sides(rho_c, d, r);
  return std::polar(std::tanh(0.5 * d), kPi - sgn * beta);
}

std::string sector_hex(const SectorIndex& s) {
  const auto& w = s.words();
  std::string out;
  char buf[24];
  bool lead = true;
  for (size_t i = w.size(); i-- > 0;) {
    if (lead && w[i] == 0 && i > 0) continue;
    std::snprintf(buf, sizeof buf, lead ? "%llx" : "%016llx",
                  static_cast<unsigned long long>(w[i]));
    out += buf;
    lead = false;
  }
  return out;
}

}  // namespace

// --- layout -----------------------------------------------------------------

LazyField::LazyField(uint64_t master_seed, double lambda_max, size_t cache_capacity)
    : seed_(master_seed), lambda_max_(lambda_max) {
  if (!std::isfinite(lambda_max) || lambda_max < 0.0)
    throw std::invalid_argument("LazyField: lambda_max must be finite and nonnegative");
  shard_capacity_ = std::max<size_t>(16, cache_capacity / kShards);
}

int LazyField::sector_bits(uint32_t ring) const {
  double target = std::log(4.0 / std::max(1.0, lambda_max_));
  long m = std::lround((ring_log_area(ring) - target) / kLog2);
  return static_cast<int>(std::max(0L, m));
}

double LazyField::chunk_area(uint32_t ring) const {
  return std::exp(ring_log_area(ring) - sector_bits(ring) * kLog2);
}

double LazyField::sector_width(uint32_t ring) const {
  return std::ldexp(2.0 * kPi, -sector_bits(ring));
}

ChunkKey LazyField::chunk_of(uint32_t ring, uint64_t sector) const {
  if (sector >> 62)
    throw std::invalid_argument("chunk_of: sector must be constructed by index arithmetic");
  return {ring, SectorIndex::zero(sector_bits(ring)).add(static_cast<int64_t>(sector))};
}

// --- content ----------------------------------------------------------------

std::vector<MarkedPoint> LazyField::sample_chunk(const ChunkKey& c) const {
  if (c.ring == kSyntheticRing)
    throw std::invalid_argument("sample_chunk: synthetic chunk has no content");
  uint64_t h = mix64(seed_, 0x6c617a79'6669656cULL);
  h = mix64(h, c.ring);
  h = mix64(h, std::bit_cast<uint64_t>(lambda_max_));
  for (uint64_t w : c.sector.words()) h = mix64(h, w);
  Rng rng(h);

  uint64_t n = poisson(rng, lambda_max_ * chunk_area(c.ring));
  int m = sector_bits(c.ring);
  double k = static_cast<double>(c.ring);
  double rho_c = anchor_rho(c.ring);
  double lc1 = log_cosh(k);
  double lring = log_sub_exp(log_cosh(k + 1.0), lc1);

  std::vector<MarkedPoint> pts;
  pts.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    double ur = rng.u01();
    double ut = rng.u01();
    double mark = rng.u01();
    // radius: inverse CDF of the sinh density restricted to [k, k+1)
    double r = acosh_of_log(log_add_exp(lc1, std::log(std::max(ur, 1e-300)) + lring));
    // angle: uniform offset from the sector center, kept as log|sin(delta/2)|
    double v = ut - 0.5;
    double sgn = v < 0.0 ? -1.0 : 1.0;
    double lsin;
    if (m <= 50) {
      double half = std::ldexp(kPi * v, -m);  // delta/2
      double s = std::fabs(std::sin(half));
      lsin = s > 0.0 ? std::log(s) : -kInf;
    } else {
      lsin = std::log(kPi * std::max(std::fabs(v), 1e-300)) - m * kLog2;
    }
    pts.push_back({local_from_ls(rho_c, r, sgn, lsin), mark});
  }
  return pts;
}

std::shared_ptr<const std::vector<MarkedPoint>> LazyField::chunk(const ChunkKey& c) const {
  Shard& sh = shards_[ChunkKeyHash{}(c) % kShards];
  {
    std::lock_guard<std::mutex> lk(sh.mu);
    auto it = sh.map.find(c);
    if (it != sh.map.end()) {
      sh.lru.splice(sh.lru.begin(), sh.lru, it->second.second);
      return it->second.first;
    }
  }
  auto data = std::make_shared<const std::vector<MarkedPoint>>(sample_chunk(c));
  std::lock_guard<std::mutex> lk(sh.mu);
  auto it = sh.map.find(c);
  if (it != sh.map.end()) {
    // another thread generated it first; contents are identical by purity
    sh.lru.splice(sh.lru.begin(), sh.lru, it->second.second);
    return it->second.first;
  }
  sh.lru.push_front(c);
  std::shared_ptr<const std::vector<MarkedPoint>> kept = data;
  sh.map.emplace(c, std::make_pair(std::move(data), sh.lru.begin()));
  while (sh.map.size() > shard_capacity_) {
    sh.map.erase(sh.lru.back());
    sh.lru.pop_back();
  }
  return kept;
}

cplx LazyField::point_local(const ChunkKey& c, uint32_t index) const {
  if (c.ring == kSyntheticRing)
    throw std::invalid_argument("point_local: synthetic points have no chunk data");
  auto pts = chunk(c);
  if (index >= pts->size()) throw std::out_of_range("point_local: index out of range");
  return (*pts)[index].pos;
}

// --- frames -----------------------------------------------------------------

ScaledMobius LazyField::rel_anchor(const ChunkKey& from, const ChunkKey& to) const {
  if (from.ring == kSyntheticRing || to.ring == kSyntheticRing)
    throw std::invalid_argument("rel_anchor: synthetic chunks carry no frame");
  double r1 = anchor_rho(from.ring);
  double r2 = anchor_rho(to.ring);
  int b1 = from.sector.bits();
  int b2 = to.sector.bits();
  int B = std::max(b1, b2) + 1;
  // center angles as exact B-bit integers (2j+1 halves survive the shift)
  SectorIndex n1 = from.sector.rescale(b1 + 1).add(1).rescale(B);
  SectorIndex n2 = to.sector.rescale(b2 + 1).add(1).rescale(B);
  auto d = n2.diff_small(n1);
  if (!d)
    throw std::invalid_argument(
        "rel_anchor: anchors too far apart for an exact angular difference");

  // sin/cos of half the angular difference, as sign + log magnitude; the
  // exact angle is pi * d / 2^B with |d| <= 2^(B-1), so cos >= 0 throughout
  double nd = static_cast<double>(*d);
  double lsin, ssin, lcos;
  double lx = nd == 0.0 ? -kInf : std::log(kPi * std::fabs(nd)) - B * kLog2;
  if (lx > -34.5) {
    double x = kPi * std::ldexp(nd, -std::min(B, 1000));
    lsin = std::log(std::fabs(std::sin(x)));
    lcos = std::log(std::cos(x));
  } else {
    lsin = lx;
    lcos = lx == -kInf ? 0.0 : -0.5 * std::exp(2.0 * lx);
  }
  ssin = nd > 0.0 ? 1.0 : (nd < 0.0 ? -1.0 : 0.0);

  // T(-r1) R(dtheta) T(r2) entrywise in the log domain
  double dr = r2 - r1, sr = r2 + r1;
  double la_re = lcos + log_cosh(0.5 * dr);
  double la_im = lsin + log_cosh(0.5 * sr);
  double lb_re = lcos + log_sinh(0.5 * std::fabs(dr));
  double sb_re = dr > 0.0 ? 1.0 : (dr < 0.0 ? -1.0 : 0.0);
  double lb_im = lsin + log_sinh(0.5 * sr);
  double sstar = 0.5 * log_add_exp(2.0 * la_re, 2.0 * la_im);
  cplx a(std::exp(la_re - sstar), ssin * std::exp(la_im - sstar));
  cplx b(sb_re * std::exp(lb_re - sstar), ssin * std::exp(lb_im - sstar));
  return {a, b, sstar};
}

AnchoredFrame LazyField::origin_frame() const {
  ChunkKey c{0, SectorIndex::zero(sector_bits(0))};
  double th = 2.0 * kPi * c.sector.center_fraction();
  Mobius g = Mobius::rotation(th) * Mobius::translation(anchor_rho(0));
  return {c, g.inverse()};
}

Mobius LazyField::anchor_from_origin(const ChunkKey& c) const {
  if (c.ring == kSyntheticRing || c.ring > 1200)
    throw std::out_of_range("anchor_from_origin: anchor not representable from the origin");
  double th = 2.0 * kPi * c.sector.center_fraction();
  return Mobius::rotation(th) * Mobius::translation(anchor_rho(c.ring));
}

GlobalPolar LazyField::frame_polar(const AnchoredFrame& f) const {
  return point_polar(f, cplx(0.0, 0.0));
}

GlobalPolar LazyField::point_polar(const AnchoredFrame& f, cplx pos_in_frame) const {
  if (f.anchor.ring == kSyntheticRing)
    throw std::invalid_argument("point_polar: synthetic anchor");
  cplx z = f.local(pos_in_frame);
  double az = std::abs(z);
  if (az >= 1.0) z *= (1.0 - 1e-16) / az;
  double rc = anchor_rho(f.anchor.ring);
  double dax = dist_o(z);
  double srel = wrap_angle(kPi - std::arg(z));  // signed angle at the anchor
  double rho = side_from_sides_angle(rc, dax, std::fabs(srel));
  double delta = (srel < 0.0 ? -1.0 : 1.0) * angle_from_sides(rc, rho, dax);
  double theta_c = 2.0 * kPi * f.anchor.sector.center_fraction();
  return {rho, wrap_angle(theta_c + delta), delta};
}

SectorIndex LazyField::sector_at(const ChunkKey& anchor, double dtheta, uint32_t ring) const {
  int ba = anchor.sector.bits();
  int m = sector_bits(ring);
  double t2 = 0.0;
  if (dtheta != 0.0) {
    double lt = std::log(std::fabs(dtheta)) - std::log(2.0 * kPi) + m * kLog2;
    if (lt > 61.0 * kLog2)
      throw std::invalid_argument("sector_at: angular offset too large for exact indexing");
    t2 = std::copysign(std::exp(lt), dtheta);
  }
  SectorIndex center = anchor.sector.rescale(ba + 1).add(1);  // (2j+1) at ba+1 bits
  if (m >= ba + 1) {
    return center.rescale(m).add(static_cast<int64_t>(std::floor(t2)));
  }
  int q = ba + 1 - m;
  SectorIndex whole = center.rescale(m);  // floor(center / 2^q)
  std::vector<uint64_t> rem = sub_words(center.words(), whole.rescale(ba + 1).words());
  mask_words(rem, ba + 1);
  double remf = 0.0;
  for (size_t i = 0; i < rem.size(); ++i)
    if (rem[i] != 0)
      remf += std::ldexp(static_cast<double>(rem[i]), static_cast<int>(64 * i) - q);
  return whole.add(static_cast<int64_t>(std::floor(remf + t2)));
}

AnchoredFrame LazyField::shift_frame(const AnchoredFrame& f, const Mobius& step,
                                     const ChunkKey& new_anchor) const {
  ScaledMobius m =
      rel_anchor(new_anchor, f.anchor) * ScaledMobius::from(f.local) * ScaledMobius::from(step);
  if (std::fabs(m.s) > 200.0)
    throw std::logic_error("shift_frame: frame drifted too far from its anchor");
  return {new_anchor, m.to_mobius()};
}

ChunkKey LazyField::locate_chunk(const AnchoredFrame& f, cplx pos_in_frame) const {
  GlobalPolar p = point_polar(f, pos_in_frame);
  uint32_t ring = static_cast<uint32_t>(std::max(0.0, std::floor(p.rho)));
  return {ring, sector_at(f.anchor, p.dtheta, ring)};
}

// --- queries ----------------------------------------------------------------

std::vector<FieldPoint> LazyField::query_disk(const AnchoredFrame& frame, double radius,
                                              double lambda) const {
  if (!(lambda >= 0.0) || lambda > lambda_max_ * (1.0 + 1e-12))
    throw std::invalid_argument("query_disk: lambda above lambda_max breaks the coupling");
  if (!(radius >= 0.0)) throw std::invalid_argument("query_disk: negative radius");
  if (radius > query_radius_max)
    throw std::out_of_range("query_disk: radius exceeds the configured maximum");
  if (radius > kMaxQueryRadius)
    throw std::out_of_range("query_disk: radius beyond single-frame precision range");

  GlobalPolar cp = frame_polar(frame);
  const double R = radius;
  const double rho_x = cp.rho;
  uint32_t klo = static_cast<uint32_t>(std::max(0.0, std::floor(rho_x - R)));
  uint32_t khi = static_cast<uint32_t>(std::max(0.0, std::floor(rho_x + R)));

  struct RingPlan {
    uint32_t ring;
    SectorIndex first;
    uint64_t count;
  };
  std::vector<RingPlan> plan;
  double total = 0.0;
  const double lsx = rho_x > 0.0 ? log_sinh(rho_x) : -kInf;
  const double lcR = log_cosh(R);
  for (uint32_t k = klo; k <= khi; ++k) {
    double ylo = std::max(static_cast<double>(k), rho_x - R);
    double yhi = std::min(k + 1.0, rho_x + R);
    if (ylo > yhi) continue;
    int m = sector_bits(k);

    bool full = rho_x < 1e-9;
    double dmax = 0.0;
    if (!full) {
      // widest angular offset of the disk within this ring; the width is
      // unimodal in y with its peak where cosh y = cosh rho_x / cosh R
      double lystar = log_cosh(rho_x) - lcR;
      double ystar = lystar <= 0.0 ? 0.0 : acosh_of_log(lystar);
      double cand[3] = {ylo, yhi, std::clamp(ystar, ylo, yhi)};
      double umax = 0.0;
      for (double y : cand) {
        y = std::max(y, 1e-9);
        double ln = log_sub_exp(lcR, log_cosh(rho_x - y));
        if (ln == -kInf) continue;
        double lu = ln - lsx - log_sinh(y);  // 1 - cos(dtheta)
        if (lu >= kLog2) {
          full = true;
          break;
        }
        umax = std::max(umax, std::exp(lu));
      }
      if (!full) {
        if (umax <= 0.0) continue;
        dmax = 2.0 * std::asin(std::min(1.0, std::sqrt(0.5 * umax)));
      }
    }

    if (!full) {
      double lspan = std::log(dmax) + m * kLog2 - std::log(2.0 * kPi);
      if (lspan >= 61.0 * kLog2) throw std::length_error("query_disk: too many chunks");
      int64_t span = static_cast<int64_t>(std::floor(std::exp(lspan))) + 2;
      if (m < 62 && static_cast<uint64_t>(2 * span + 1) >= (uint64_t(1) << m)) {
        full = true;
      } else {
        SectorIndex jc = sector_at(frame.anchor, cp.dtheta, k);
        plan.push_back({k, jc.add(-span), static_cast<uint64_t>(2 * span + 1)});
      }
    }
    if (full) {
      if (m >= 25) throw std::length_error("query_disk: too many chunks");
      plan.push_back({k, SectorIndex::zero(m), uint64_t(1) << m});
    }
    total += static_cast<double>(plan.back().count);
    if (total > static_cast<double>(1u << 24))
      throw std::length_error("query_disk: too many chunks");
  }

  ScaledMobius inv_local = ScaledMobius::from(frame.local.inverse());
  std::vector<FieldPoint> out;
  for (const RingPlan& rp : plan) {
    SectorIndex j = rp.first;
    for (uint64_t i = 0; i < rp.count; ++i, j = j.add(1)) {
      ChunkKey key{rp.ring, j};
      ScaledMobius M = inv_local * rel_anchor(frame.anchor, key);
      auto pts = chunk(key);
      for (uint32_t pi = 0; pi < pts->size(); ++pi) {
        const MarkedPoint& mp = (*pts)[pi];
        if (mp.mark * lambda_max_ > lambda) continue;
        cplx w = M(mp.pos);
        if (dist_o(w) <= R) out.push_back({key, pi, w});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const FieldPoint& A, const FieldPoint& B) {
    if (A.chunk.ring != B.chunk.ring) return A.chunk.ring < B.chunk.ring;
    if (!(A.chunk.sector == B.chunk.sector))
      return sector_value_less(A.chunk.sector, B.chunk.sector);
    return A.index < B.index;
  });
  return out;
}

std::vector<FieldPoint> LazyField::query_disk(cplx center, double radius,
                                              double lambda) const {
  check_point(center);
  AnchoredFrame f = origin_frame();
  f.local = f.local * Mobius::translate_to(center);
  return query_disk(f, radius, lambda);
}

// --- export -----------------------------------------------------------------

void LazyField::export_snapshot(std::ostream& os, uint32_t ring_lo, uint32_t ring_hi,
                                uint64_t max_sectors_per_ring) const {
  char buf[256];
  for (uint32_t k = ring_lo; k <= ring_hi; ++k) {
    int m = sector_bits(k);
    uint64_t ns = m >= 62 ? max_sectors_per_ring : std::min(uint64_t(1) << m, max_sectors_per_ring);
    SectorIndex j = SectorIndex::zero(m);
    for (uint64_t s = 0; s < ns; ++s, j = j.add(1)) {
      ChunkKey key{k, j};
      auto pts = chunk(key);
      std::string hex = sector_hex(j);
      std::snprintf(buf, sizeof buf, "# chunk ring=%u sector=%s rho_c=%.17g theta_c=%.17g n=%zu\n",
                    k, hex.c_str(), anchor_rho(k), 2.0 * kPi * j.center_fraction(),
                    pts->size());
      os << buf;
      for (const MarkedPoint& p : *pts) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %u %s\n", p.pos.real(),
                      p.pos.imag(), p.mark, k, hex.c_str());
        os << buf;
      }
    }
  }
}

// --- synthetic points --------------------------------------------------------

std::vector<FieldPoint> insert_root(std::vector<FieldPoint> points, cplx root_pos,
                                    uint32_t serial) {
  check_point(root_pos);
  for (const FieldPoint& p : points) {
    if (dist(p.pos, root_pos) < 1e-12)
      throw std::invalid_argument("insert_root: duplicate of an existing point");
  }
  FieldPoint r{ChunkKey{kSyntheticRing, SectorIndex::zero(0)}, serial, root_pos};
  points.insert(points.begin(), r);
  return points;
}

cplx local_from_polar(double rho_c, double r, double dtheta) {
  double s = std::fabs(std::sin(0.5 * dtheta));
  return local_from_ls(rho_c, r, dtheta < 0.0 ? -1.0 : 1.0,
                       s > 0.0 ? std::log(s) : -kInf);
}

}  // namespace hwalk
