#pragma once

#include <random>
#include <vector>

#include "v2v/scene.hpp"

namespace v2v::testing {

inline Vehicle make_vehicle(const StreetCanyon& canyon, int id, int lane, double rear_x) {
  Vehicle v;
  v.id = id;
  v.lane = lane;
  v.heading = canyon.lane_heading(lane);
  v.position = Vec3{rear_x, canyon.lane_center_y(lane), 0.0};
  v.front.location = MountLocation::Front;
  v.rear.location = MountLocation::Rear;
  return v;
}

/// Scene from (lane, rear-bumper x) pairs; ids follow the order given.
inline Scene make_scene(const std::vector<std::pair<int, double>>& cars, CanyonParams params = {}) {
  Scene s{StreetCanyon(params), {}, {}, 0.1};
  for (const auto& [lane, x] : cars)
    s.vehicles.push_back(make_vehicle(s.canyon, static_cast<int>(s.vehicles.size()), lane, x));
  if (s.vehicles.size() >= 2) s.tagged = {0, 1};
  return s;
}

/// Follower at x = 10 and its leader `gap` metres ahead in lane 1.
inline Scene pair_scene(double gap) { return make_scene({{1, 10.0}, {1, 14.0 + gap}}); }

/// Two or three non-overlapping vehicles at random lanes and positions. About half the
/// scenes put the first two in one lane so that line of sight is common.
inline Scene random_small_scene(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(2, 3);
  std::uniform_int_distribution<int> lane(0, 5);
  std::uniform_real_distribution<double> x(2.0, 150.0);
  std::uniform_real_distribution<double> gap(0.3, 40.0);
  for (;;) {
    const int n = count(rng);
    std::vector<std::pair<int, double>> cars;
    const int l0 = lane(rng);
    const double x0 = x(rng);
    cars.emplace_back(l0, x0);
    if (rng() % 2 == 0) cars.emplace_back(l0, x0 + (l0 < 3 ? 4.0 : -4.0) + (l0 < 3 ? 1 : -1) * gap(rng));
    while (static_cast<int>(cars.size()) < n) cars.emplace_back(lane(rng), x(rng));
    Scene s = make_scene(cars);
    if (validate_scene(s).empty()) {
      bool inside = true;
      for (const Vehicle& v : s.vehicles) inside = inside && v.box().lo.x >= 0.0 && v.box().hi.x <= 200.0;
      if (inside) return s;
    }
  }
}

}  // namespace v2v::testing
