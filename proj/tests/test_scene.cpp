#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "v2v/errors.hpp"
#include "v2v/scene.hpp"

using namespace v2v;

namespace {

int count_in_lane(const Scene& s, int lane) {
  int n = 0;
  for (const Vehicle& v : s.vehicles) n += v.lane == lane;
  return n;
}

std::string dump(const Scene& s) {
  std::ostringstream out;
  write_scene(out, s);
  return out.str();
}

}  // namespace

TEST_CASE("canyon width follows lanes and sidewalks") {
  CHECK(build_canyon({}).total_width() == doctest::Approx(22.5).epsilon(1e-12));
  CanyonParams narrow;
  narrow.lanes_per_direction = 1;
  narrow.lane_width_m = 1.0;
  narrow.sidewalk_width_m = 0.0;
  CHECK(build_canyon(narrow).total_width() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("degenerate canyon dimensions are rejected") {
  CanyonParams p;
  p.lane_width_m = 0.0;
  CHECK_THROWS_AS(build_canyon(p), ConfigError);
  p = {};
  p.length_m = -1.0;
  CHECK_THROWS_AS(build_canyon(p), ConfigError);
  p = {};
  p.building_height_m = 0.0;
  CHECK_THROWS_AS(build_canyon(p), ConfigError);
}

TEST_CASE("constant-gap deployment count matches the packing formula") {
  const StreetCanyon canyon = build_canyon({});
  for (double gap : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0, 192.0}) {
    DeploymentParams p;
    p.gap_m = gap;
    const Scene s = generate_deployment(canyon, Setup::Constant, p, 1);
    const int expected = static_cast<int>(std::floor((200.0 + gap) / (4.0 + gap)));
    for (int lane = 0; lane < canyon.lane_count(); ++lane) CHECK(count_in_lane(s, lane) == expected);
  }
  DeploymentParams p;
  p.gap_m = 10.0;
  CHECK(count_in_lane(generate_deployment(canyon, Setup::Constant, p, 3), 0) == 15);
  p.gap_m = 192.0;
  CHECK(count_in_lane(generate_deployment(canyon, Setup::Constant, p, 3), 0) == 2);
}

TEST_CASE("street too short for a tagged pair") {
  DeploymentParams p;
  p.gap_m = 196.5;
  CHECK_THROWS_AS(generate_deployment(build_canyon({}), Setup::Constant, p, 1), DeploymentError);
}

TEST_CASE("sparse random gaps still yield a tagged pair") {
  const StreetCanyon canyon = build_canyon({});
  DeploymentParams p;
  p.gap_m = 150.0;  // a single vehicle per lane is likely
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Scene s = generate_deployment(canyon, Setup::Exponential, p, seed);
    CHECK(count_in_lane(s, p.tagged_lane) >= 2);
    REQUIRE(s.tagged.source >= 0);
    const Vehicle& f = s.vehicles[s.tagged.source];
    const Vehicle& l = s.vehicles[s.tagged.destination];
    CHECK(f.lane == p.tagged_lane);
    CHECK(l.lane == p.tagged_lane);
  }
}

TEST_CASE("deployment is reproducible by seed") {
  const StreetCanyon canyon = build_canyon({});
  DeploymentParams p;
  const std::string a = dump(generate_deployment(canyon, Setup::Exponential, p, 42));
  const std::string b = dump(generate_deployment(canyon, Setup::Exponential, p, 42));
  const std::string c = dump(generate_deployment(canyon, Setup::Exponential, p, 43));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("generated scenes are valid and vehicles stay inside the street") {
  const StreetCanyon canyon = build_canyon({});
  for (Setup setup : {Setup::Exponential, Setup::Constant}) {
    for (double gap : {0.5, 2.0, 10.0, 50.0}) {
      DeploymentParams p;
      p.gap_m = gap;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scene s = generate_deployment(canyon, setup, p, seed);
        CHECK(validate_scene(s).empty());
        for (const Vehicle& v : s.vehicles) {
          const Box b = v.box();
          CHECK(b.lo.x >= -1e-9);
          CHECK(b.hi.x <= 200.0 + 1e-9);
        }
        const Vehicle& src = s.vehicle(s.tagged.source);
        const Vehicle& dst = s.vehicle(s.tagged.destination);
        CHECK(src.lane == p.tagged_lane);
        CHECK(s.leader_of(src.id) == dst.id);
      }
    }
  }
}

TEST_CASE("exponential gaps have the configured mean") {
  CanyonParams long_street;
  long_street.length_m = 20000.0;
  const StreetCanyon canyon = build_canyon(long_street);
  DeploymentParams p;
  p.gap_m = 10.0;
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; n < 20000; ++seed) {
    const Scene s = generate_deployment(canyon, Setup::Exponential, p, seed);
    for (std::size_t i = 1; i < s.vehicles.size(); ++i) {
      const Vehicle& a = s.vehicles[i - 1];
      const Vehicle& b = s.vehicles[i];
      if (a.lane != b.lane) continue;
      sum += b.box().lo.x - a.box().hi.x;
      ++n;
    }
  }
  CHECK(sum / n == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("setup 1 lanes move rigidly with positive speeds") {
  DeploymentParams p;
  const Scene s = generate_deployment(build_canyon({}), Setup::Exponential, p, 9);
  for (const Vehicle& a : s.vehicles) {
    CHECK(a.speed_mps > 0.0);
    for (const Vehicle& b : s.vehicles)
      if (a.lane == b.lane) CHECK(a.speed_mps == b.speed_mps);
  }
  const Scene s2 = generate_deployment(build_canyon({}), Setup::Constant, p, 9);
  for (const Vehicle& v : s2.vehicles) CHECK(v.speed_mps == doctest::Approx(5.0 / 3.6));
}

TEST_CASE("tagged pair at a controlled distance") {
  DeploymentParams p;
  for (double d : {1.0, 5.0, 37.5, 100.0}) {
    p.tagged_gap_m = d;
    const Scene s = generate_deployment(build_canyon({}), Setup::Exponential, p, 5);
    const Vehicle& src = s.vehicle(s.tagged.source);
    const Vehicle& dst = s.vehicle(s.tagged.destination);
    CHECK(dst.box().lo.x - src.box().hi.x == doctest::Approx(d));
    const Antenna tx = src.antenna(MountLocation::Front);
    const Antenna rx = dst.antenna(MountLocation::Rear);
    CHECK(distance(tx.position, rx.position) == doctest::Approx(d));
    CHECK(dot(tx.boresight, rx.boresight) == doctest::Approx(-1.0));
    CHECK(validate_scene(s).empty());
  }
}

TEST_CASE("advance_positions moves by speed times dt") {
  Scene s = testing::pair_scene(10.0);
  s.vehicles[0].speed_mps = 30.0 / 3.6;
  s.vehicles[1].speed_mps = 5.0 / 3.6;
  const Scene a = advance_positions(s, 5e-6);
  CHECK(a.vehicles[0].position.x - s.vehicles[0].position.x == doctest::Approx(41.67e-6).epsilon(1e-3));
  const Scene b = advance_positions(s, 1e-3);
  CHECK(b.vehicles[1].position.x - s.vehicles[1].position.x == doctest::Approx(1.389e-3).epsilon(1e-3));
  CHECK(dump(advance_positions(s, 0.0)) == dump(s));
}

TEST_CASE("advance_positions wraps around the street") {
  Scene s = testing::make_scene({{0, 195.0}, {3, 5.0}});
  s.vehicles[0].speed_mps = 10.0;
  s.vehicles[1].speed_mps = 10.0;
  const Scene a = advance_positions(s, 1.0);
  CHECK(a.vehicles[0].position.x == doctest::Approx(5.0));
  // Westbound: the rear bumper is the larger-x end and wraps back to the far end.
  CHECK(a.vehicles[1].position.x == doctest::Approx(195.0));
}

TEST_CASE("no overlaps after repeated advances") {
  DeploymentParams p;
  p.gap_m = 2.0;
  Scene s = generate_deployment(build_canyon({}), Setup::Exponential, p, 17);
  for (int i = 0; i < 200; ++i) {
    s = advance_positions(s, 0.05);
    REQUIRE(validate_scene(s).empty());
  }
}

TEST_CASE("tessellation tiles the box") {
  const Scene s = testing::pair_scene(5.0);
  const Vehicle& v = s.vehicles[0];
  double area = 0.0;
  for (const SurfacePatch& p : tessellate(v, 0.1)) {
    area += p.area;
    CHECK(p.hi.x - p.lo.x <= 0.1 + 1e-12);
    CHECK(p.hi.y - p.lo.y <= 0.1 + 1e-12);
    CHECK(p.hi.z - p.lo.z <= 0.1 + 1e-12);
  }
  const double exact = 2.0 * (4.0 * 1.8 + 4.0 * 1.4 + 1.8 * 1.4);
  CHECK(exact == doctest::Approx(30.64));
  CHECK(std::abs(area - exact) / exact < 1e-9);
  CHECK(tessellate(v, 10.0).size() == 6);
}

TEST_CASE("tessellation assigns the material of the height band") {
  const Scene s = testing::pair_scene(5.0);
  for (const SurfacePatch& p : tessellate(s.vehicles[0], 0.1)) {
    if (std::abs(p.centroid.z - 0.15) < 1e-9 || std::abs(p.centroid.z - 0.05) < 1e-9) CHECK(p.material == "plastic");
    if (std::abs(p.centroid.z - 0.95) < 1e-9) CHECK(p.material == "glass");
    if (std::abs(p.centroid.z - 0.55) < 1e-9) CHECK(p.material == "steel");
  }
  CHECK(s.vehicles[0].material_at(0.1) == "plastic");
  CHECK(s.vehicles[0].material_at(1.0) == "glass");
  CHECK(s.vehicles[0].material_at(0.5) == "steel");
}

TEST_CASE("patch bounds are exclusive") {
  const Scene s = testing::pair_scene(5.0);
  const auto patches = tessellate(s.vehicles[0], 0.3);
  // Random points on the box surface land in exactly one patch.
  const Box b = s.vehicles[0].box();
  for (int k = 0; k < 500; ++k) {
    const double u = (k * 0.6180339887) - std::floor(k * 0.6180339887);
    const double w = (k * 0.41421356) - std::floor(k * 0.41421356);
    const Vec3 p{b.lo.x + u * (b.hi.x - b.lo.x), b.lo.y + w * (b.hi.y - b.lo.y), b.hi.z};
    int hits = 0;
    for (const SurfacePatch& sp : patches) {
      if (sp.normal.z != 1.0) continue;
      const bool in_x = p.x >= sp.lo.x && (p.x < sp.hi.x || (sp.hi.x == b.hi.x && p.x == b.hi.x));
      const bool in_y = p.y >= sp.lo.y && (p.y < sp.hi.y || (sp.hi.y == b.hi.y && p.y == b.hi.y));
      hits += in_x && in_y;
    }
    CHECK(hits == 1);
  }
}
