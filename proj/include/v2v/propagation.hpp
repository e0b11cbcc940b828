#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "v2v/geometry.hpp"
#include "v2v/materials.hpp"
#include "v2v/scene.hpp"

namespace v2v {

// Absorption coefficients of air at 296 K with 1.8 % water vapour by volume at
// 1013.25 hPa total pressure (line-by-line model, water vapour plus dry air), in 1/m.
inline constexpr double kAbsorption79GHz = 1.2579963535874156e-4;
inline constexpr double kAbsorption150GHz = 4.6015337829209197e-4;
inline constexpr double kAbsorption300GHz = 2.150891014836565e-3;

struct RadioParams {
  double carrier_ghz = 300.0;
  double bandwidth_ghz = 10.0;
  double tx_power_dbm = 0.0;
  double noise_figure_db = 1.5;
  double temperature_k = 296.0;
  double water_vapor_percent = 1.8;
  /// Molecular absorption coefficient at the carrier, 1/m.
  double absorption_per_m = kAbsorption300GHz;

  bool operator==(const RadioParams&) const = default;
};

/// Preset for one of the supported carriers (79, 150 or 300 GHz); the absorption
/// coefficient follows the carrier.
RadioParams radio_preset(double carrier_ghz);

/// Free-space spreading loss 20*log10(4*pi*d*f/c). Throws std::domain_error for d <= 0.
double fspl_db(double distance_m, double carrier_ghz);

/// 10*log10(e) * k * d.
double absorption_db(double distance_m, const RadioParams& radio);

/// Thermal noise kTB plus the receiver noise figure, in dBm.
double noise_dbm(const RadioParams& radio);

double reflection_loss_db(const MaterialProfile& material, double carrier_ghz, double incidence_deg);
double reflection_loss_db(const MaterialRegistry& registry, const std::string& material,
                          double carrier_ghz, double incidence_deg);

/// Cone pattern gain toward `direction` (unit vector). Directions exactly on the lobe
/// edge receive the nominal gain.
double antenna_gain_db(double nominal_db, double sidelobe_db, Vec3 boresight, Vec3 direction);
double tx_gain_db(const Antenna& antenna, Vec3 direction);
double rx_gain_db(const Antenna& antenna, Vec3 direction);

enum class ReflectorKind : std::uint8_t { Wall, Ground, VehicleFace };

struct Bounce {
  Vec3 normal;
  std::size_t material = 0;  // index into the MaterialRegistry
  double incidence_deg = 0.0;
  /// Extra loss from routing through the patch centroid instead of the exact specular
  /// point; zero for walls and ground.
  double diffuse_penalty_db = 0.0;
  ReflectorKind kind = ReflectorKind::Wall;
  int vehicle_id = -1;
  int face = -1;   // reflector index in the TraceGeometry
  int patch = -1;  // patch index within the face, -1 for walls and ground
};

struct PropagationPath {
  /// Tx antenna, reflection points, Rx antenna.
  std::vector<Vec3> hops;
  double total_length = 0.0;
  std::vector<Bounce> bounces;
  Vec3 departure;
  Vec3 arrival;  // direction of travel at the receiver

  bool line_of_sight() const { return bounces.empty(); }
};

/// A planar, rectangular reflector aligned with the coordinate axes. Vehicle faces are
/// subdivided into an n1 x n2 grid of patches.
struct Reflector {
  ReflectorKind kind = ReflectorKind::Wall;
  int axis = 0;    // normal axis
  int sign = +1;   // outward normal = sign * e_axis
  double offset = 0.0;
  Vec3 lo;         // rectangle bounds; lo[axis] == hi[axis] == offset
  Vec3 hi;
  int vehicle_id = -1;
  int n1 = 1;      // divisions along (axis+1)%3
  int n2 = 1;      // divisions along (axis+2)%3
  std::size_t material = 0;            // walls and ground
  std::vector<std::size_t> materials;  // vehicle faces: per patch

  Vec3 normal() const {
    Vec3 n;
    n[axis] = sign;
    return n;
  }
  /// Patch bounds; identical to the patches produced by tessellate().
  double patch_lo(int dim, int i) const;
  double patch_hi(int dim, int i) const;
  Vec3 patch_centroid(int patch) const;
};

/// Occluders and reflectors of a scene, indexed for fast ray queries.
class TraceGeometry {
 public:
  TraceGeometry(const Scene& scene, const MaterialRegistry& registry);

  const std::vector<Reflector>& reflectors() const { return reflectors_; }
  const std::vector<Box>& boxes() const { return boxes_; }
  const MaterialRegistry& registry() const { return *registry_; }

  /// True when any vehicle box blocks the open segment.
  bool blocked(Vec3 p, Vec3 q) const;

 private:
  friend class PathTracer;
  const MaterialRegistry* registry_;
  std::vector<Box> boxes_;
  std::vector<Reflector> reflectors_;
  int fixed_reflectors_ = 0;
  double max_box_length_ = 0.0;

  // Boxes of one lane sorted by lo.x, with the lane's y-extent.
  struct LaneIndex {
    double y_lo = 1e300;
    double y_hi = -1e300;
    std::vector<int> by_x;
    std::vector<double> lo_x;
    // Front/rear (x-normal) faces of the lane sorted by plane offset, per sign.
    std::vector<int> x_faces[2];
    std::vector<double> x_offsets[2];
  };
  std::vector<LaneIndex> lanes_;
  // Per reflector: the box adjacent to it on its outward side in the same lane, tested
  // first when checking occlusion; -1 when there is none.
  std::vector<int> shadow_box_;

  // Coplanar side (y-normal) or top/bottom (z-normal) vehicle faces, sorted by lo.x.
  struct PlaneGroup {
    int axis;
    int sign;
    double offset;
    std::vector<int> faces;
    std::vector<double> lo_x;
  };
  std::vector<PlaneGroup> planes_;
};

/// Enumerates LoS, image-method wall/ground reflections and patch-specular vehicle
/// reflections up to `max_order` bounces (0, 1 or 2). Calls `visit` for each
/// unobstructed path.
void for_each_path(const TraceGeometry& geometry, const Antenna& tx, const Antenna& rx, int max_order,
                   double carrier_ghz, const std::function<void(const PropagationPath&)>& visit);

std::vector<PropagationPath> trace_paths(const TraceGeometry& geometry, const Antenna& tx,
                                         const Antenna& rx, int max_order, double carrier_ghz);
std::vector<PropagationPath> trace_paths(const Scene& scene, const MaterialRegistry& registry,
                                         const Antenna& tx, const Antenna& rx, int max_order,
                                         double carrier_ghz);

/// Net gain of a path relative to the transmit power, in dB.
double path_gain_db(const PropagationPath& path, const Antenna& tx, const Antenna& rx,
                    const RadioParams& radio, const MaterialRegistry& registry);

}  // namespace v2v
