#include <doctest.h>

#include <algorithm>

#include "mapselect/error.hpp"
#include "mapselect/map_model.hpp"

using namespace mapselect;

namespace {

SE3 at_x(double x) {
  SE3 pose;
  pose.translation = Vec3(-x, 0, 0);
  return pose;
}

// Frames 1..t at x = 0, 1, 2...; point i observed by the listed frame indices.
MapData tiny(std::size_t t, const std::vector<std::vector<int>>& seen_by) {
  MapData d;
  d.camera = {400, 400, 320, 240, 0.2};
  for (std::size_t j = 0; j < t; ++j) {
    d.keyframes.push_back({static_cast<FrameId>(50 + j), static_cast<int>(j) + 1, at_x(double(j)), false});
  }
  for (std::size_t i = 0; i < seen_by.size(); ++i) {
    const PointId id = static_cast<PointId>(10 * (i + 1));
    d.points.push_back({id, Vec3(double(i) * 0.3, 0.1, 5.0)});
    for (const int f : seen_by[i]) {
      Observation o;
      o.point_id = id;
      o.frame_id = 50 + f - 1;
      o.measurement = project_stereo(d.camera, d.keyframes[std::size_t(f - 1)].pose, d.points.back().position);
      d.observations.push_back(o);
    }
  }
  return d;
}

bool has(const std::vector<Diagnostic>& ds, Diagnostic::Kind kind) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.kind == kind; });
}

}  // namespace

TEST_CASE("a well-formed map validates clean and indexes by id and slot") {
  MapData d = tiny(3, {{1, 2}, {2, 3}, {3}});
  std::reverse(d.points.begin(), d.points.end());
  std::reverse(d.keyframes.begin(), d.keyframes.end());
  CHECK(validate(d).empty());
  const SlamMap map = SlamMap::build(d);
  CHECK(map.num_frames() == 3);
  CHECK(map.num_points() == 3);
  CHECK(map.points()[0].id == 10);
  CHECK(map.keyframes()[0].index == 1);
  CHECK(map.point_index(20) == 1);
  CHECK(map.frame_slot(52) == 2);
  CHECK_THROWS_AS(map.point_index(999), Error);
  const auto obs = map.point_observations(1);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].frame == 1);
  CHECK(obs[1].frame == 2);
  const auto fp = map.frame_points(2);
  CHECK(std::vector<std::size_t>(fp.begin(), fp.end()) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("validate reports each invariant violation") {
  using K = Diagnostic::Kind;
  {
    MapData d = tiny(2, {{1, 2}});
    d.points.push_back(d.points[0]);
    CHECK(has(validate(d), K::duplicate_point_id));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.keyframes[1].index = 3;
    CHECK(has(validate(d), K::bad_frame_index));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.keyframes[1].id = d.keyframes[0].id;
    CHECK(has(validate(d), K::duplicate_frame_id));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.keyframes[0].pose.rotation(0, 0) = 1.001;
    CHECK(has(validate(d), K::rotation_not_orthonormal));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.observations[0].point_id = 12345;
    CHECK(has(validate(d), K::dangling_point));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.observations[0].frame_id = 12345;
    CHECK(has(validate(d), K::dangling_frame));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.observations.push_back(d.observations[0]);
    CHECK(has(validate(d), K::duplicate_observation));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.observations[0].sigma = 0.0;
    CHECK(has(validate(d), K::nonpositive_sigma));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.points[0].position.z() = -5.0;
    CHECK(has(validate(d), K::behind_camera));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.camera.fx = 0.0;
    CHECK(has(validate(d), K::invalid_camera));
  }
  {
    MapData d = tiny(2, {{1, 2}});
    d.points[0].position.x() = std::nan("");
    CHECK(has(validate(d), K::nonfinite_value));
  }
  MapData bad = tiny(2, {{1, 2}});
  bad.observations[0].sigma = -1.0;
  try {
    SlamMap::build(bad);
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::data);
  }
}

TEST_CASE("orphan points are legal") {
  MapData d = tiny(2, {{1, 2}, {}});
  CHECK(validate(d).empty());
  const SlamMap map = SlamMap::build(d);
  CHECK(map.is_orphan(1));
  CHECK_FALSE(map.is_orphan(0));
  CHECK(covisible_frames(map, 20).empty());
}

TEST_CASE("covisibility counts shared points") {
  const SlamMap map = SlamMap::build(tiny(3, {{1, 2, 3}, {1, 2}, {2, 3}, {3}}));
  CHECK(covisible_frames(map, 10) == std::vector<std::size_t>{0, 1, 2});
  CHECK(covisibility_count(map, 0, 1) == 2);
  CHECK(covisibility_count(map, 1, 2) == 2);
  CHECK(covisibility_count(map, 0, 2) == 1);
  CHECK(covisibility_count(map, 2, 2) == 3);
  CHECK_THROWS_AS(covisibility_count(map, 0, 7), Error);
  CHECK_THROWS_AS(covisible_frames(map, 77), Error);
}

TEST_CASE("pairing picks the most covisible earlier frame, ties to the smallest") {
  // Frame 3 shares one point with frame 1 and one with frame 2: tie -> frame 1.
  // Frame 4 shares nothing with anyone earlier.
  const SlamMap map = SlamMap::build(tiny(4, {{1, 2}, {1, 3}, {2, 3}, {4}, {4}}));
  const auto pairs = pairing(map);
  REQUIRE(pairs.size() == 4);
  CHECK_FALSE(pairs[0].has_value());
  CHECK(pairs[1] == std::optional<std::size_t>(0));
  CHECK(pairs[2] == std::optional<std::size_t>(0));
  CHECK_FALSE(pairs[3].has_value());
}

TEST_CASE("forced set is every point seen in the last keyframe") {
  const SlamMap map = SlamMap::build(tiny(3, {{1, 3}, {1, 2}, {3}, {2}}));
  CHECK(forced_set(map) == std::vector<PointId>{10, 30});
}

TEST_CASE("selection problem checks budget and parameters") {
  auto map = std::make_shared<const SlamMap>(SlamMap::build(tiny(3, {{1, 3}, {1, 2}, {3}, {2}})));
  const auto p = SelectionProblem::with_last_frame_forced(map, 3);
  CHECK(p.forced == std::vector<std::size_t>{0, 2});
  auto code = [&](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::usage;
  };
  CHECK(code([&] { SelectionProblem::with_last_frame_forced(map, 1); }) == Errc::budget);
  CHECK(code([&] { SelectionProblem::make(map, 5, {}); }) == Errc::budget);
  CHECK(code([&] { SelectionProblem::make(map, 2, {}, 0.0); }) == Errc::config);
  CHECK(code([&] { SelectionProblem::make(map, 2, {}, 1e-4, -1.0); }) == Errc::config);
  CHECK(code([&] { SelectionProblem::make(map, 2, {9}); }) == Errc::lookup);
}
