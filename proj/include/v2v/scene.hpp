#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "v2v/geometry.hpp"

namespace v2v {

struct CanyonParams {
  double length_m = 200.0;
  int lanes_per_direction = 3;
  double lane_width_m = 2.75;
  double sidewalk_width_m = 3.0;
  double building_height_m = 30.0;
  std::string wall_material = "concrete";
  std::string ground_material = "asphalt";

  bool operator==(const CanyonParams&) const = default;
};

/// Street segment along +x. The cross-section spans y in [0, total_width], with
/// building walls at y = 0 and y = total_width and the ground at z = 0. Lanes are
/// numbered from y = 0; the first `lanes_per_direction` lanes travel toward +x.
class StreetCanyon {
 public:
  explicit StreetCanyon(CanyonParams params);

  const CanyonParams& params() const { return params_; }
  double length() const { return params_.length_m; }
  double height() const { return params_.building_height_m; }
  double total_width() const;
  int lane_count() const { return 2 * params_.lanes_per_direction; }
  double lane_center_y(int lane) const;
  int lane_heading(int lane) const { return lane < params_.lanes_per_direction ? +1 : -1; }

 private:
  CanyonParams params_;
};

/// Validates the parameters and builds the canyon; throws ConfigError on
/// non-positive dimensions.
StreetCanyon build_canyon(const CanyonParams& params);

enum class MountLocation : std::uint8_t { Front, Rear };

/// Directional antenna on a bumper. The main lobe is a cone whose solid angle equals
/// 4*pi / G (G = linear gain); outside it the gain drops to `sidelobe_db`.
struct AntennaMount {
  MountLocation location = MountLocation::Front;
  double altitude_m = 0.2;
  double tx_gain_db = 30.0;
  double rx_gain_db = 30.0;
  double sidelobe_db = -10.0;

  bool operator==(const AntennaMount&) const = default;
};

/// Half-angle of the main-lobe cone for a given gain: 2*pi*(1 - cos a) = 4*pi / G.
double main_lobe_half_angle_rad(double gain_db);

/// Horizontal material band of the vehicle body, from `z_lo` to `z_hi` above ground.
struct Stratum {
  double z_lo = 0.0;
  double z_hi = 0.0;
  std::string material;

  bool operator==(const Stratum&) const = default;
};

struct VehicleBody {
  double length_m = 4.0;
  double width_m = 1.8;
  double height_m = 1.4;
  /// Bottom-up; must partition [0, height] exactly.
  std::vector<Stratum> strata = {{0.0, 0.2, "plastic"}, {0.2, 0.9, "steel"}, {0.9, 1.4, "glass"}};

  bool operator==(const VehicleBody&) const = default;
};

/// Antenna placed in the world frame.
struct Antenna {
  int vehicle_id = -1;
  MountLocation location = MountLocation::Front;
  Vec3 position;
  Vec3 boresight;
  AntennaMount mount;
};

struct Vehicle {
  int id = 0;
  /// Rear-bumper center at ground level.
  Vec3 position;
  int lane = 0;
  int heading = +1;
  double speed_mps = 0.0;
  VehicleBody body;
  AntennaMount front;
  AntennaMount rear;

  Box box() const;
  const std::string& material_at(double z) const;
  Antenna antenna(MountLocation where) const;
};

struct SurfacePatch {
  Vec3 centroid;
  Vec3 normal;
  double area = 0.0;
  std::string material;
  /// Closed-open bounds of the patch rectangle (the coordinate along the normal axis is
  /// the same in lo and hi).
  Vec3 lo;
  Vec3 hi;
};

/// Splits every face of the vehicle box into a regular grid of patches no larger than
/// `cell` on a side. Each patch takes the material of the band containing its centroid.
std::vector<SurfacePatch> tessellate(const Vehicle& vehicle, double cell);

struct TaggedLink {
  int source = -1;
  int destination = -1;
};

struct Scene {
  StreetCanyon canyon{CanyonParams{}};
  std::vector<Vehicle> vehicles;
  TaggedLink tagged;
  double tessellation_cell_m = 0.1;

  const Vehicle& vehicle(int id) const;
  /// Closest vehicle ahead in the same lane, following the street direction of travel.
  std::optional<int> leader_of(int id) const;
};

enum class Setup : std::uint8_t { Exponential = 1, Constant = 2 };

struct DeploymentParams {
  /// Mean bumper-to-bumper gap (Setup 1) or the constant gap (Setup 2).
  double gap_m = 10.0;
  double setup1_speed_kmh = 30.0;
  /// Standard deviation of the Setup 1 speed as a fraction of the mean.
  double setup1_speed_sd_fraction = 0.1;
  double setup2_speed_kmh = 5.0;
  /// Lane that carries the tagged link.
  int tagged_lane = 1;
  /// When set, the tagged pair is placed mid-street with this bumper gap and the rest
  /// of the tagged lane is filled around it.
  std::optional<double> tagged_gap_m;
  double tessellation_cell_m = 0.1;
  VehicleBody body;
  AntennaMount front;
  AntennaMount rear{MountLocation::Rear};

  bool operator==(const DeploymentParams&) const = default;
};

/// Places vehicles lane by lane from the street start. Gaps are bumper-to-bumper;
/// every vehicle lies fully inside the street. Each lane draws one speed, so a lane
/// moves rigidly. With random gaps the tagged lane is redrawn until it holds at least
/// two vehicles; otherwise too few vehicles there throw DeploymentError.
Scene generate_deployment(const StreetCanyon& canyon, Setup setup, const DeploymentParams& params,
                          std::uint64_t seed);

/// Moves every vehicle by speed * dt along its heading, wrapping around the segment.
Scene advance_positions(Scene scene, double dt_s);

/// One vehicle per line: `id lane heading x y z speed`.
void write_scene(std::ostream& out, const Scene& scene);

/// Checks the structural invariants (lane membership, strata partition, no overlap).
/// Returns an empty string when the scene is valid.
std::string validate_scene(const Scene& scene);

}  // namespace v2v
