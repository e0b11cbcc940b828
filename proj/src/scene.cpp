#include "v2v/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "v2v/errors.hpp"

namespace v2v {

namespace {

void require_positive(double v, const char* key) {
  if (!(v > 0.0)) throw ConfigError(key, "must be positive");
}

}  // namespace

StreetCanyon::StreetCanyon(CanyonParams params) : params_(std::move(params)) {}

double StreetCanyon::total_width() const {
  return params_.lanes_per_direction * 2 * params_.lane_width_m + 2.0 * params_.sidewalk_width_m;
}

double StreetCanyon::lane_center_y(int lane) const {
  return params_.sidewalk_width_m + (lane + 0.5) * params_.lane_width_m;
}

StreetCanyon build_canyon(const CanyonParams& params) {
  require_positive(params.length_m, "canyon.length_m");
  require_positive(params.lane_width_m, "canyon.lane_width_m");
  require_positive(params.building_height_m, "canyon.building_height_m");
  if (params.lanes_per_direction < 1)
    throw ConfigError("canyon.lanes_per_direction", "must be at least 1");
  if (params.sidewalk_width_m < 0.0)
    throw ConfigError("canyon.sidewalk_width_m", "must be non-negative");
  if (params.wall_material.empty()) throw ConfigError("canyon.wall_material", "must be set");
  if (params.ground_material.empty()) throw ConfigError("canyon.ground_material", "must be set");
  return StreetCanyon(params);
}

double main_lobe_half_angle_rad(double gain_db) {
  const double g = std::pow(10.0, gain_db / 10.0);
  if (g <= 1.0) return kPi;  // isotropic or worse: the main lobe covers everything
  return std::acos(1.0 - 2.0 / g);
}

Box Vehicle::box() const {
  const double half_w = 0.5 * body.width_m;
  const double x_lo = heading > 0 ? position.x : position.x - body.length_m;
  return Box{{x_lo, position.y - half_w, position.z},
             {x_lo + body.length_m, position.y + half_w, position.z + body.height_m}};
}

const std::string& Vehicle::material_at(double z) const {
  const double local = z - position.z;
  for (const Stratum& s : body.strata) {
    if (local < s.z_hi) return s.material;
  }
  return body.strata.back().material;
}

Antenna Vehicle::antenna(MountLocation where) const {
  const Box b = box();
  const bool front_side = where == MountLocation::Front;
  const int dir = front_side ? heading : -heading;
  const double x = dir > 0 ? b.hi.x : b.lo.x;
  const AntennaMount& m = front_side ? front : rear;
  return Antenna{id, where, Vec3{x, position.y, position.z + m.altitude_m},
                 Vec3{static_cast<double>(dir), 0.0, 0.0}, m};
}

std::vector<SurfacePatch> tessellate(const Vehicle& vehicle, double cell) {
  const Box b = vehicle.box();
  std::vector<SurfacePatch> patches;
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    const double len1 = b.hi[a1] - b.lo[a1];
    const double len2 = b.hi[a2] - b.lo[a2];
    const int n1 = std::max(1, static_cast<int>(std::ceil(len1 / cell - 1e-9)));
    const int n2 = std::max(1, static_cast<int>(std::ceil(len2 / cell - 1e-9)));
    const double d1 = len1 / n1;
    const double d2 = len2 / n2;
    for (int sign : {-1, +1}) {
      const double plane = sign > 0 ? b.hi[axis] : b.lo[axis];
      Vec3 normal;
      normal[axis] = sign;
      for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
          SurfacePatch p;
          p.normal = normal;
          p.lo[axis] = p.hi[axis] = plane;
          p.lo[a1] = b.lo[a1] + i * d1;
          p.hi[a1] = i + 1 == n1 ? b.hi[a1] : b.lo[a1] + (i + 1) * d1;
          p.lo[a2] = b.lo[a2] + j * d2;
          p.hi[a2] = j + 1 == n2 ? b.hi[a2] : b.lo[a2] + (j + 1) * d2;
          p.centroid = 0.5 * (p.lo + p.hi);
          p.area = (p.hi[a1] - p.lo[a1]) * (p.hi[a2] - p.lo[a2]);
          p.material = vehicle.material_at(p.centroid.z);
          patches.push_back(std::move(p));
        }
      }
    }
  }
  return patches;
}

const Vehicle& Scene::vehicle(int id) const {
  // Vehicles are stored by id; ids are dense from generate_deployment but the lookup
  // tolerates hand-built scenes.
  if (id >= 0 && static_cast<std::size_t>(id) < vehicles.size() && vehicles[id].id == id)
    return vehicles[id];
  for (const Vehicle& v : vehicles)
    if (v.id == id) return v;
  throw std::out_of_range("no vehicle with id " + std::to_string(id));
}

std::optional<int> Scene::leader_of(int id) const {
  const Vehicle& me = vehicle(id);
  std::optional<int> best;
  double best_ahead = 0.0;
  for (const Vehicle& v : vehicles) {
    if (v.id == id || v.lane != me.lane) continue;
    const double ahead = (v.position.x - me.position.x) * me.heading;
    if (ahead > 0.0 && (!best || ahead < best_ahead)) {
      best = v.id;
      best_ahead = ahead;
    }
  }
  return best;
}

namespace {

double draw_speed(Setup setup, const DeploymentParams& p, std::mt19937_64& rng) {
  if (setup == Setup::Constant) return p.setup2_speed_kmh / 3.6;
  const double mean = p.setup1_speed_kmh;
  if (mean <= 0.0) return 0.0;
  std::normal_distribution<double> speed(mean, p.setup1_speed_sd_fraction * mean);
  double v = speed(rng);
  // Truncate at zero by redrawing.
  for (int tries = 0; v <= 0.0 && tries < 64; ++tries) v = speed(rng);
  return std::max(v, 0.0) / 3.6;
}

struct Span {
  double lo;
  double hi;
};

}  // namespace

Scene generate_deployment(const StreetCanyon& canyon, Setup setup, const DeploymentParams& p,
                          std::uint64_t seed) {
  if (!(p.gap_m > 0.0)) throw ConfigError("deployment.gap_m", "must be positive");
  if (!(p.tessellation_cell_m > 0.0))
    throw ConfigError("deployment.tessellation_cell_m", "must be positive");
  if (p.tagged_lane < 0 || p.tagged_lane >= canyon.lane_count())
    throw ConfigError("deployment.tagged_lane", "no such lane");
  if (p.tagged_gap_m && !(*p.tagged_gap_m > 0.0))
    throw ConfigError("deployment.tagged_gap_m", "must be positive");
  if (p.body.width_m > canyon.params().lane_width_m)
    throw ConfigError("vehicle.width_m", "vehicle is wider than its lane");

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exp_gap(1.0 / p.gap_m);
  auto next_gap = [&] { return setup == Setup::Constant ? p.gap_m : exp_gap(rng); };

  const double street = canyon.length();
  const double len = p.body.length_m;

  Scene scene{canyon, {}, {}, p.tessellation_cell_m};
  for (int lane = 0; lane < canyon.lane_count(); ++lane) {
    const int heading = canyon.lane_heading(lane);
    const double speed = draw_speed(setup, p, rng);

    // Spans are box x-extents in street coordinates, sorted ascending.
    std::vector<Span> spans;
    int tagged_follower = -1;
    if (lane == p.tagged_lane && p.tagged_gap_m) {
      const double d = *p.tagged_gap_m;
      const double mid = 0.5 * street;
      const Span low{mid - 0.5 * d - len, mid - 0.5 * d};
      const Span high{mid + 0.5 * d, mid + 0.5 * d + len};
      if (low.lo < 0.0 || high.hi > street)
        throw DeploymentError("tagged gap " + std::to_string(d) + " m does not fit the street");
      std::vector<Span> before;
      for (double hi = low.lo - next_gap(); hi - len >= 0.0; hi -= len + next_gap())
        before.push_back({hi - len, hi});
      spans.assign(before.rbegin(), before.rend());
      spans.push_back(low);
      spans.push_back(high);
      for (double lo = high.hi + next_gap(); lo + len <= street; lo += len + next_gap())
        spans.push_back({lo, lo + len});
      // Follower in travel direction: the lower span when heading +x.
      const auto idx_low = static_cast<int>(before.size());
      tagged_follower = heading > 0 ? idx_low : idx_low + 1;
    } else {
      // Random gaps can leave the tagged lane with a single vehicle; redraw that lane.
      const int attempts = lane == p.tagged_lane && setup == Setup::Exponential ? 1000 : 1;
      for (int a = 0; a < attempts && spans.size() < 2; ++a) {
        spans.clear();
        for (double lo = 0.0; lo + len <= street + 1e-9; lo += len + next_gap())
          spans.push_back({lo, lo + len});
      }
    }

    const int first_id = static_cast<int>(scene.vehicles.size());
    for (const Span& s : spans) {
      Vehicle v;
      v.id = static_cast<int>(scene.vehicles.size());
      v.lane = lane;
      v.heading = heading;
      v.speed_mps = speed;
      v.body = p.body;
      v.front = p.front;
      v.front.location = MountLocation::Front;
      v.rear = p.rear;
      v.rear.location = MountLocation::Rear;
      v.position = Vec3{heading > 0 ? s.lo : s.hi, canyon.lane_center_y(lane), 0.0};
      scene.vehicles.push_back(std::move(v));
    }

    if (lane != p.tagged_lane) continue;
    const int count = static_cast<int>(spans.size());
    if (count < 2)
      throw DeploymentError("street too short for two vehicles in tagged lane " +
                            std::to_string(lane));
    if (tagged_follower < 0) {
      // Adjacent pair whose gap midpoint is closest to the middle of the street.
      int best = 0;
      double best_dist = 1e300;
      for (int i = 0; i + 1 < count; ++i) {
        const double mid = 0.5 * (spans[i].hi + spans[i + 1].lo);
        const double dist = std::abs(mid - 0.5 * street);
        if (dist < best_dist) {
          best_dist = dist;
          best = i;
        }
      }
      tagged_follower = heading > 0 ? best : best + 1;
    }
    const int leader = heading > 0 ? tagged_follower + 1 : tagged_follower - 1;
    scene.tagged = TaggedLink{first_id + tagged_follower, first_id + leader};
  }
  return scene;
}

Scene advance_positions(Scene scene, double dt_s) {
  if (dt_s <= 0.0) return scene;
  const double street = scene.canyon.length();
  for (Vehicle& v : scene.vehicles) {
    double x = v.position.x + v.heading * v.speed_mps * dt_s;
    // The rear bumper leaving the segment re-enters at the start of the lane.
    if (v.heading > 0) {
      while (x >= street) x -= street;
    } else {
      while (x <= 0.0) x += street;
    }
    v.position.x = x;
  }
  return scene;
}

void write_scene(std::ostream& out, const Scene& scene) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "# tagged %d %d\n", scene.tagged.source, scene.tagged.destination);
  out << buf;
  for (const Vehicle& v : scene.vehicles) {
    std::snprintf(buf, sizeof buf, "%d %d %+d %.17g %.17g %.17g %.17g\n", v.id, v.lane, v.heading,
                  v.position.x, v.position.y, v.position.z, v.speed_mps);
    out << buf;
  }
}

std::string validate_scene(const Scene& scene) {
  std::ostringstream err;
  const auto& canyon = scene.canyon;
  const double half_lane = 0.5 * canyon.params().lane_width_m;
  std::map<int, std::vector<Box>> by_lane;
  for (const Vehicle& v : scene.vehicles) {
    const auto& s = v.body.strata;
    if (s.empty() || std::abs(s.front().z_lo) > 1e-12 ||
        std::abs(s.back().z_hi - v.body.height_m) > 1e-12) {
      err << "vehicle " << v.id << ": strata do not span the body height\n";
    }
    for (std::size_t i = 1; i < s.size(); ++i)
      if (std::abs(s[i].z_lo - s[i - 1].z_hi) > 1e-12)
        err << "vehicle " << v.id << ": strata are not contiguous\n";
    if (v.lane < 0 || v.lane >= canyon.lane_count()) {
      err << "vehicle " << v.id << ": bad lane\n";
      continue;
    }
    if (std::abs(v.position.y - canyon.lane_center_y(v.lane)) + 0.5 * v.body.width_m >
        half_lane + 1e-9)
      err << "vehicle " << v.id << ": footprint leaves its lane\n";
    for (const AntennaMount* m : {&v.front, &v.rear}) {
      if (m->tx_gain_db < 0.0 || m->rx_gain_db < 0.0)
        err << "vehicle " << v.id << ": negative antenna gain\n";
      if (m->altitude_m < 0.0 || m->altitude_m > v.body.height_m)
        err << "vehicle " << v.id << ": antenna outside the body height\n";
    }
    by_lane[v.lane].push_back(v.box());
  }
  for (auto& [lane, boxes] : by_lane) {
    std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) { return a.lo.x < b.lo.x; });
    for (std::size_t i = 1; i < boxes.size(); ++i)
      if (boxes[i].overlaps(boxes[i - 1])) err << "lane " << lane << ": overlapping vehicles\n";
    // Vehicles straddling the wrap point overlap the segment start.
    if (boxes.size() > 1) {
      Box last = boxes.back();
      last.lo.x -= canyon.length();
      last.hi.x -= canyon.length();
      if (last.overlaps(boxes.front())) err << "lane " << lane << ": overlap across wrap\n";
    }
  }
  const auto has = [&](int id) {
    return std::any_of(scene.vehicles.begin(), scene.vehicles.end(),
                       [id](const Vehicle& v) { return v.id == id; });
  };
  if (scene.tagged.source == scene.tagged.destination || !has(scene.tagged.source) ||
      !has(scene.tagged.destination))
    err << "tagged link endpoints must be distinct existing vehicles\n";
  return err.str();
}

}  // namespace v2v
