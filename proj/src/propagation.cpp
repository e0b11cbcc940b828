#include "v2v/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <stdexcept>

#include "v2v/errors.hpp"

namespace v2v {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kBoltzmann = 1.380649e-23;
const double kLog10E = std::log10(std::exp(1.0));

}  // namespace

RadioParams radio_preset(double carrier_ghz) {
  RadioParams r;
  r.carrier_ghz = carrier_ghz;
  // Specific attenuation of humid air (296 K, 1.8 % H2O by volume, 1013.25 hPa),
  // ITU-R P.676 line-by-line model, converted from dB/km to 1/m.
  if (carrier_ghz == 79.0) {
    r.absorption_per_m = kAbsorption79GHz;
  } else if (carrier_ghz == 150.0) {
    r.absorption_per_m = kAbsorption150GHz;
  } else if (carrier_ghz == 300.0) {
    r.absorption_per_m = kAbsorption300GHz;
  } else {
    throw ConfigError("radio.carrier_ghz", "presets exist for 79, 150 and 300 GHz");
  }
  return r;
}

double fspl_db(double distance_m, double carrier_ghz) {
  if (!(distance_m > 0.0)) throw std::domain_error("fspl_db: distance must be positive");
  return 20.0 * std::log10(4.0 * kPi * distance_m * carrier_ghz * 1e9 / kSpeedOfLight);
}

double absorption_db(double distance_m, const RadioParams& radio) {
  return 10.0 * kLog10E * radio.absorption_per_m * distance_m;
}

double noise_dbm(const RadioParams& radio) {
  const double watts = kBoltzmann * radio.temperature_k * radio.bandwidth_ghz * 1e9;
  return 10.0 * std::log10(watts / 1e-3) + radio.noise_figure_db;
}

double reflection_loss_db(const MaterialProfile& material, double carrier_ghz, double incidence_deg) {
  return material.loss_db(carrier_ghz, incidence_deg);
}

double reflection_loss_db(const MaterialRegistry& registry, const std::string& material,
                          double carrier_ghz, double incidence_deg) {
  return registry.get(material).loss_db(carrier_ghz, incidence_deg);
}

double antenna_gain_db(double nominal_db, double sidelobe_db, Vec3 boresight, Vec3 direction) {
  const double g = std::pow(10.0, nominal_db / 10.0);
  if (g <= 1.0) return nominal_db;
  const double edge = 1.0 - 2.0 / g;  // cosine of the main-lobe half-angle
  return dot(boresight, direction) >= edge - 1e-12 ? nominal_db : sidelobe_db;
}

double tx_gain_db(const Antenna& a, Vec3 direction) {
  return antenna_gain_db(a.mount.tx_gain_db, a.mount.sidelobe_db, a.boresight, direction);
}

double rx_gain_db(const Antenna& a, Vec3 direction) {
  return antenna_gain_db(a.mount.rx_gain_db, a.mount.sidelobe_db, a.boresight, direction);
}

// ---------------------------------------------------------------------------
// Reflectors

double Reflector::patch_lo(int dim, int i) const {
  const int n = dim == (axis + 1) % 3 ? n1 : n2;
  const double d = (hi[dim] - lo[dim]) / n;
  return lo[dim] + i * d;
}

double Reflector::patch_hi(int dim, int i) const {
  const int n = dim == (axis + 1) % 3 ? n1 : n2;
  if (i + 1 == n) return hi[dim];
  const double d = (hi[dim] - lo[dim]) / n;
  return lo[dim] + (i + 1) * d;
}

Vec3 Reflector::patch_centroid(int patch) const {
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  const int i = patch / n2;
  const int j = patch % n2;
  Vec3 c;
  c[axis] = offset;
  c[a1] = 0.5 * (patch_lo(a1, i) + patch_hi(a1, i));
  c[a2] = 0.5 * (patch_lo(a2, j) + patch_hi(a2, j));
  return c;
}

namespace {

int divisions(double extent, double cell) {
  return std::max(1, static_cast<int>(std::ceil(extent / cell - 1e-9)));
}

// Index of the closed-open patch interval containing `v`, the last interval closed.
// Returns -1 when `v` lies outside the reflector.
int locate(const Reflector& r, int dim, int n, double v) {
  if (v < r.lo[dim] || v > r.hi[dim]) return -1;
  const double d = (r.hi[dim] - r.lo[dim]) / n;
  int i = std::clamp(static_cast<int>(std::floor((v - r.lo[dim]) / d)), 0, n - 1);
  while (i > 0 && v < r.patch_lo(dim, i)) --i;
  while (i + 1 < n && v >= r.patch_lo(dim, i + 1)) ++i;
  return i;
}

// Patch containing `p` (a point on the reflector plane), or -1.
int patch_at(const Reflector& r, Vec3 p) {
  const int a1 = (r.axis + 1) % 3;
  const int a2 = (r.axis + 2) % 3;
  const int i = locate(r, a1, r.n1, p[a1]);
  if (i < 0) return -1;
  const int j = locate(r, a2, r.n2, p[a2]);
  if (j < 0) return -1;
  return i * r.n2 + j;
}

bool inside_rect(const Reflector& r, Vec3 p) {
  for (int d = 0; d < 3; ++d) {
    if (d == r.axis) continue;
    if (p[d] < r.lo[d] || p[d] > r.hi[d]) return false;
  }
  return true;
}

// Signed height above the reflector plane (positive on the outward side).
double height(const Reflector& r, Vec3 p) { return r.sign * (p[r.axis] - r.offset); }

Vec3 mirror(const Reflector& r, Vec3 p) {
  p[r.axis] = 2.0 * r.offset - p[r.axis];
  return p;
}

bool lex_less(Vec3 a, Vec3 b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

// Exact specular point on the plane of `r` for endpoints on its outward side. The
// computation runs from the lexicographically smaller endpoint so that swapping the
// endpoints reproduces the same point bit for bit.
bool specular_point(const Reflector& r, Vec3 a, Vec3 b, Vec3& p) {
  if (lex_less(b, a)) std::swap(a, b);
  const double ha = height(r, a);
  const double hb = height(r, b);
  if (ha <= 0.0 || hb <= 0.0) return false;
  const double t = ha / (ha + hb);
  p = a + t * (b - a);
  p[r.axis] = r.offset;
  return true;
}

// Crossing of segment x->y with the reflector plane.
Vec3 plane_crossing(const Reflector& r, Vec3 x, Vec3 y) {
  const double t = (r.offset - x[r.axis]) / (y[r.axis] - x[r.axis]);
  Vec3 p = x + t * (y - x);
  p[r.axis] = r.offset;
  return p;
}

double incidence_deg(const Reflector& r, Vec3 from, Vec3 at) {
  const Vec3 d = normalized(from - at);
  return rad_to_deg(angle_between(d, r.normal()));
}

}  // namespace

// ---------------------------------------------------------------------------
// TraceGeometry

TraceGeometry::TraceGeometry(const Scene& scene, const MaterialRegistry& registry)
    : registry_(&registry) {
  const StreetCanyon& canyon = scene.canyon;
  const double L = canyon.length();
  const double W = canyon.total_width();
  const double H = canyon.height();
  const std::size_t wall = registry.index_of(canyon.params().wall_material);
  const std::size_t ground = registry.index_of(canyon.params().ground_material);

  auto fixed = [&](ReflectorKind kind, int axis, int sign, double offset, Vec3 lo, Vec3 hi,
                   std::size_t material) {
    Reflector r;
    r.kind = kind;
    r.axis = axis;
    r.sign = sign;
    r.offset = offset;
    r.lo = lo;
    r.hi = hi;
    r.material = material;
    reflectors_.push_back(std::move(r));
  };
  fixed(ReflectorKind::Wall, 1, +1, 0.0, {0.0, 0.0, 0.0}, {L, 0.0, H}, wall);
  fixed(ReflectorKind::Wall, 1, -1, W, {0.0, W, 0.0}, {L, W, H}, wall);
  fixed(ReflectorKind::Ground, 2, +1, 0.0, {0.0, 0.0, 0.0}, {L, W, 0.0}, ground);
  fixed_reflectors_ = static_cast<int>(reflectors_.size());

  const double cell = scene.tessellation_cell_m;
  boxes_.reserve(scene.vehicles.size());
  for (const Vehicle& v : scene.vehicles) boxes_.push_back(v.box());

  std::map<std::tuple<int, int, double>, std::size_t> plane_of;
  for (std::size_t k = 0; k < scene.vehicles.size(); ++k) {
    const Vehicle& v = scene.vehicles[k];
    const Box& b = boxes_[k];
    max_box_length_ = std::max(max_box_length_, b.hi.x - b.lo.x);
    if (v.lane >= static_cast<int>(lanes_.size())) lanes_.resize(v.lane + 1);
    LaneIndex& li = lanes_[v.lane];
    li.y_lo = std::min(li.y_lo, b.lo.y);
    li.y_hi = std::max(li.y_hi, b.hi.y);
    li.by_x.push_back(static_cast<int>(k));
    std::vector<std::size_t> band_material;
    for (const Stratum& st : v.body.strata) band_material.push_back(registry.index_of(st.material));
    auto material_at = [&](double z) {
      const double local = z - v.position.z;
      for (std::size_t i = 0; i < v.body.strata.size(); ++i)
        if (local < v.body.strata[i].z_hi) return band_material[i];
      return band_material.back();
    };

    for (int axis = 0; axis < 3; ++axis) {
      const int a1 = (axis + 1) % 3;
      const int a2 = (axis + 2) % 3;
      for (int sign : {-1, +1}) {
        Reflector r;
        r.kind = ReflectorKind::VehicleFace;
        r.axis = axis;
        r.sign = sign;
        r.offset = sign > 0 ? b.hi[axis] : b.lo[axis];
        r.lo = b.lo;
        r.hi = b.hi;
        r.lo[axis] = r.hi[axis] = r.offset;
        r.vehicle_id = v.id;
        r.n1 = divisions(b.hi[a1] - b.lo[a1], cell);
        r.n2 = divisions(b.hi[a2] - b.lo[a2], cell);
        r.materials.resize(static_cast<std::size_t>(r.n1) * r.n2);
        for (int p = 0; p < r.n1 * r.n2; ++p)
          r.materials[p] = material_at(r.patch_centroid(p).z);
        const int index = static_cast<int>(reflectors_.size());
        if (axis == 0) {
          li.x_faces[sign > 0].push_back(index);
        } else {
          auto [it, fresh] = plane_of.try_emplace({axis, sign, r.offset}, planes_.size());
          if (fresh) planes_.push_back(PlaneGroup{axis, sign, r.offset, {}, {}});
          planes_[it->second].faces.push_back(index);
        }
        reflectors_.push_back(std::move(r));
      }
    }
  }

  shadow_box_.assign(reflectors_.size(), -1);
  for (LaneIndex& li : lanes_) {
    std::sort(li.by_x.begin(), li.by_x.end(),
              [&](int a, int b) { return boxes_[a].lo.x < boxes_[b].lo.x; });
    for (int k : li.by_x) li.lo_x.push_back(boxes_[k].lo.x);
    for (std::size_t i = 0; i < li.by_x.size(); ++i) {
      // Faces are stored six per vehicle after the fixed reflectors: x-, x+, y-, y+, z-, z+.
      const int base = fixed_reflectors_ + 6 * li.by_x[i];
      if (i > 0) shadow_box_[base] = li.by_x[i - 1];
      if (i + 1 < li.by_x.size()) shadow_box_[base + 1] = li.by_x[i + 1];
    }
    for (int s = 0; s < 2; ++s) {
      auto& faces = li.x_faces[s];
      std::sort(faces.begin(), faces.end(),
                [&](int a, int b) { return reflectors_[a].offset < reflectors_[b].offset; });
      for (int f : faces) li.x_offsets[s].push_back(reflectors_[f].offset);
    }
  }
  for (PlaneGroup& g : planes_) {
    std::sort(g.faces.begin(), g.faces.end(),
              [&](int a, int b) { return reflectors_[a].lo.x < reflectors_[b].lo.x; });
    for (int f : g.faces) g.lo_x.push_back(reflectors_[f].lo.x);
  }
}

bool TraceGeometry::blocked(Vec3 p, Vec3 q) const {
  const double y0 = std::min(p.y, q.y);
  const double y1 = std::max(p.y, q.y);
  const double x0 = std::min(p.x, q.x);
  const double x1 = std::max(p.x, q.x);
  for (const LaneIndex& li : lanes_) {
    if (li.by_x.empty() || li.y_hi < y0 || li.y_lo > y1) continue;
    auto it = std::lower_bound(li.lo_x.begin(), li.lo_x.end(), x0 - max_box_length_);
    for (auto k = static_cast<std::size_t>(it - li.lo_x.begin()); k < li.lo_x.size(); ++k) {
      if (li.lo_x[k] > x1) break;
      if (segment_penetrates(boxes_[li.by_x[k]], p, q)) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Path enumeration

class PathTracer {
 public:
  PathTracer(const TraceGeometry& g, const Antenna& tx, const Antenna& rx, double carrier_ghz,
             const std::function<void(const PropagationPath&)>& visit)
      : g_(g), tx_(tx), rx_(rx), carrier_(carrier_ghz), visit_(visit) {}

  void line_of_sight() {
    if (g_.blocked(tx_.position, rx_.position)) return;
    path_.hops = {tx_.position, rx_.position};
    path_.bounces.clear();
    emit();
  }

  void first_order() {
    for (int r = 0; r < g_.fixed_reflectors_; ++r) single(r);
    const Vec3 a = tx_.position;
    const Vec3 b = rx_.position;
    // Coplanar faces share one specular point; only faces spanning it in x can hold it.
    for (const auto& plane : g_.planes_) {
      Vec3 p;
      if (!specular_point(g_.reflectors_[plane.faces.front()], a, b, p)) continue;
      auto it = std::lower_bound(plane.lo_x.begin(), plane.lo_x.end(), p.x - g_.max_box_length_);
      for (auto k = static_cast<std::size_t>(it - plane.lo_x.begin());
           k < plane.lo_x.size() && plane.lo_x[k] <= p.x; ++k)
        single_at(plane.faces[k], p);
    }
    // Front and rear faces: the specular point lies between the endpoints in y and both
    // endpoints are on the outward side.
    const double y0 = std::min(a.y, b.y);
    const double y1 = std::max(a.y, b.y);
    const double x0 = std::min(a.x, b.x);
    const double x1 = std::max(a.x, b.x);
    for (const auto& lane : g_.lanes_) {
      if (lane.by_x.empty() || lane.y_hi < y0 || lane.y_lo > y1) continue;
      // Range of face offsets whose specular point can fall inside the lane's y-band.
      const auto [rear_lo, rear_hi] = offset_window(a, b, lane.y_lo, lane.y_hi, -1);
      const auto& rear = lane.x_offsets[0];
      for (auto k = static_cast<std::size_t>(std::upper_bound(rear.begin(), rear.end(),
                                                              std::max(x1, rear_lo)) - rear.begin());
           k < rear.size() && rear[k] <= rear_hi; ++k)
        single(lane.x_faces[0][k]);
      const auto [front_lo, front_hi] = offset_window(a, b, lane.y_lo, lane.y_hi, +1);
      const auto& front = lane.x_offsets[1];
      for (auto k = static_cast<std::size_t>(std::lower_bound(front.begin(), front.end(), front_lo) -
                                             front.begin());
           k < front.size() && front[k] < std::min(x0, front_hi); ++k)
        single(lane.x_faces[1][k]);
    }
  }

  // Offsets c of an x-normal plane (outward normal sign * e_x, both endpoints on the
  // outward side) for which the specular point has y in [y_lo, y_hi]. Conservative.
  static std::pair<double, double> offset_window(Vec3 a, Vec3 b, double y_lo, double y_hi, int sign) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double dy = b.y - a.y;
    if (std::abs(dy) < 1e-9) return {-inf, inf};
    // Fraction along a->b where the specular point sits, restricted to the band.
    double t_lo = (y_lo - a.y) / dy;
    double t_hi = (y_hi - a.y) / dy;
    if (t_lo > t_hi) std::swap(t_lo, t_hi);
    const double margin = 1e-6;
    t_lo -= margin;
    t_hi += margin;
    // With heights ha = sign*(a.x - c), hb = sign*(b.x - c): t = ha / (ha + hb), which
    // runs monotonically from the nearer endpoint (t = 0 or 1) toward 1/2 as the plane
    // recedes. Invert t -> c.
    const double sum = a.x + b.x;
    auto offset_at = [&](double t) {
      if (std::abs(1.0 - 2.0 * t) < 1e-12) return sign > 0 ? -inf : inf;
      return (a.x - t * sum) / (1.0 - 2.0 * t);
    };
    const double t_near = sign > 0 ? (a.x <= b.x ? 0.0 : 1.0) : (a.x >= b.x ? 0.0 : 1.0);
    // Reachable t lies between t_near and 1/2.
    const double r_lo = std::min(t_near, 0.5);
    const double r_hi = std::max(t_near, 0.5);
    const double lo = std::max(t_lo, r_lo);
    const double hi = std::min(t_hi, r_hi);
    if (lo > hi) return {inf, -inf};
    double c1 = offset_at(std::clamp(lo, r_lo, r_hi));
    double c2 = offset_at(std::clamp(hi, r_lo, r_hi));
    if (c1 > c2) std::swap(c1, c2);
    if (lo <= 0.5 && hi >= 0.5) {
      if (sign > 0) c1 = -inf; else c2 = inf;
    }
    const double pad = 1e-6 * (1.0 + std::abs(c1 == -inf || c1 == inf ? 0.0 : c1) +
                                std::abs(c2 == -inf || c2 == inf ? 0.0 : c2));
    return {c1 - pad, c2 + pad};
  }

  void second_order() {
    const auto& refl = g_.reflectors_;
    const int n = static_cast<int>(refl.size());
    for (int r1 = 0; r1 < n; ++r1) {
      if (height(refl[r1], tx_.position) <= 0.0) continue;
      for (int r2 = 0; r2 < n; ++r2) {
        if (r2 == r1 || height(refl[r2], rx_.position) <= 0.0) continue;
        double_bounce(r1, r2);
      }
    }
  }

 private:
  void single(int ri) {
    Vec3 p;
    if (specular_point(g_.reflectors_[ri], tx_.position, rx_.position, p)) single_at(ri, p);
  }

  void single_at(int ri, Vec3 p) {
    const Reflector& r = g_.reflectors_[ri];
    int patch = -1;
    if (r.kind == ReflectorKind::VehicleFace) {
      patch = patch_at(r, p);
      if (patch < 0) return;
    } else if (!inside_rect(r, p)) {
      return;
    }
    const Vec3 hop = patch >= 0 ? r.patch_centroid(patch) : p;
    if (const int s = g_.shadow_box_[ri]; s >= 0) {
      const Box& box = g_.boxes_[s];
      if (segment_penetrates(box, tx_.position, hop) || segment_penetrates(box, hop, rx_.position)) return;
    }
    if (g_.blocked(tx_.position, hop) || g_.blocked(hop, rx_.position)) return;
    path_.hops = {tx_.position, hop, rx_.position};
    path_.bounces.clear();
    path_.bounces.push_back(make_bounce(ri, patch, incidence_deg(r, tx_.position, p)));
    finish_bounces();
    emit();
  }

  void double_bounce(int r1i, int r2i) {
    const Reflector& r1 = g_.reflectors_[r1i];
    const Reflector& r2 = g_.reflectors_[r2i];
    // Run the construction from the canonical endpoint so the reversed link finds the
    // identical points.
    const bool flip = lex_less(rx_.position, tx_.position);
    const Vec3 a = flip ? rx_.position : tx_.position;
    const Vec3 b = flip ? tx_.position : rx_.position;
    const Reflector& ra = flip ? r2 : r1;
    const Reflector& rb = flip ? r1 : r2;
    if (height(ra, a) <= 0.0 || height(rb, b) <= 0.0) return;
    const Vec3 a1 = mirror(ra, a);
    const Vec3 a2 = mirror(rb, a1);
    if (height(rb, a2) >= 0.0) return;
    const Vec3 pb = plane_crossing(rb, a2, b);
    if (height(ra, pb) <= 0.0) return;
    const Vec3 pa = plane_crossing(ra, a1, pb);
    if (height(rb, pa) <= 0.0) return;
    const Vec3 p1 = flip ? pb : pa;  // point on r1 (nearest the transmitter)
    const Vec3 p2 = flip ? pa : pb;

    int patch1 = -1;
    int patch2 = -1;
    if (r1.kind == ReflectorKind::VehicleFace) {
      if ((patch1 = patch_at(r1, p1)) < 0) return;
    } else if (!inside_rect(r1, p1)) {
      return;
    }
    if (r2.kind == ReflectorKind::VehicleFace) {
      if ((patch2 = patch_at(r2, p2)) < 0) return;
    } else if (!inside_rect(r2, p2)) {
      return;
    }
    const Vec3 h1 = patch1 >= 0 ? r1.patch_centroid(patch1) : p1;
    const Vec3 h2 = patch2 >= 0 ? r2.patch_centroid(patch2) : p2;
    if (g_.blocked(tx_.position, h1) || g_.blocked(h1, h2) || g_.blocked(h2, rx_.position)) return;
    path_.hops = {tx_.position, h1, h2, rx_.position};
    path_.bounces.clear();
    path_.bounces.push_back(make_bounce(r1i, patch1, incidence_deg(r1, tx_.position, p1)));
    path_.bounces.push_back(make_bounce(r2i, patch2, incidence_deg(r2, p1, p2)));
    finish_bounces();
    emit();
  }

  Bounce make_bounce(int ri, int patch, double incidence) const {
    const Reflector& r = g_.reflectors_[ri];
    Bounce b;
    b.normal = r.normal();
    b.material = patch >= 0 ? r.materials[patch] : r.material;
    b.incidence_deg = std::min(incidence, 90.0 - 1e-9);
    b.kind = r.kind;
    b.vehicle_id = r.vehicle_id;
    b.face = ri;
    b.patch = patch;
    return b;
  }

  // Off-specular penalty at patch centroids, from the routed hop geometry.
  void finish_bounces() {
    for (std::size_t i = 0; i < path_.bounces.size(); ++i) {
      Bounce& b = path_.bounces[i];
      if (b.patch < 0) continue;
      const Vec3 in = normalized(path_.hops[i + 1] - path_.hops[i]);
      const Vec3 out = normalized(path_.hops[i + 2] - path_.hops[i + 1]);
      const double c = std::max(dot(reflect(in, b.normal), out), 1e-12);
      const double spread = g_.registry().at(b.material).spread_exponent();
      b.diffuse_penalty_db = -10.0 * spread * std::log10(std::min(c, 1.0));
    }
  }

  void emit() {
    double len = 0.0;
    for (std::size_t i = 1; i < path_.hops.size(); ++i)
      len += distance(path_.hops[i - 1], path_.hops[i]);
    path_.total_length = len;
    path_.departure = normalized(path_.hops[1] - path_.hops[0]);
    path_.arrival = normalized(path_.hops.back() - path_.hops[path_.hops.size() - 2]);
    visit_(path_);
  }

  const TraceGeometry& g_;
  const Antenna& tx_;
  const Antenna& rx_;
  double carrier_;
  const std::function<void(const PropagationPath&)>& visit_;
  PropagationPath path_;
};

void for_each_path(const TraceGeometry& geometry, const Antenna& tx, const Antenna& rx,
                   int max_order, double carrier_ghz,
                   const std::function<void(const PropagationPath&)>& visit) {
  if (max_order < 0 || max_order > 2)
    throw ConfigError("propagation.max_reflection_order", "must be 0, 1 or 2");
  if (tx.position == rx.position) return;
  PathTracer tracer(geometry, tx, rx, carrier_ghz, visit);
  tracer.line_of_sight();
  if (max_order >= 1) tracer.first_order();
  if (max_order >= 2) tracer.second_order();
}

std::vector<PropagationPath> trace_paths(const TraceGeometry& geometry, const Antenna& tx,
                                         const Antenna& rx, int max_order, double carrier_ghz) {
  std::vector<PropagationPath> out;
  for_each_path(geometry, tx, rx, max_order, carrier_ghz,
                [&](const PropagationPath& p) { out.push_back(p); });
  return out;
}

std::vector<PropagationPath> trace_paths(const Scene& scene, const MaterialRegistry& registry,
                                         const Antenna& tx, const Antenna& rx, int max_order,
                                         double carrier_ghz) {
  const TraceGeometry geometry(scene, registry);
  return trace_paths(geometry, tx, rx, max_order, carrier_ghz);
}

double path_gain_db(const PropagationPath& path, const Antenna& tx, const Antenna& rx,
                    const RadioParams& radio, const MaterialRegistry& registry) {
  double g = tx_gain_db(tx, path.departure) + rx_gain_db(rx, -path.arrival);
  g -= fspl_db(path.total_length, radio.carrier_ghz);
  g -= absorption_db(path.total_length, radio);
  for (const Bounce& b : path.bounces) {
    g -= reflection_loss_db(registry.at(b.material), radio.carrier_ghz, b.incidence_deg);
    g -= b.diffuse_penalty_db;
  }
  return g;
}

}  // namespace v2v
