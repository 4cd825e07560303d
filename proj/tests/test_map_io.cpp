#include <doctest.h>

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include "mapselect/error.hpp"
#include "mapselect/map_io.hpp"
#include "mapselect/simeval.hpp"

using namespace mapselect;

namespace {

World small_world() {
  WorldSpec spec;
  spec.frames = 12;
  spec.points_per_frame = 15;
  spec.seed = 9;
  return generate_world(spec);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mapselect_io_" + name);
}

double pose_gap(const SE3& a, const SE3& b) {
  return (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm();
}

void check_same(const MapData& a, const MapData& b) {
  CHECK(a.camera.fx == b.camera.fx);
  CHECK(a.camera.baseline == b.camera.baseline);
  REQUIRE(a.keyframes.size() == b.keyframes.size());
  REQUIRE(a.points.size() == b.points.size());
  REQUIRE(a.observations.size() == b.observations.size());
  for (std::size_t k = 0; k < a.keyframes.size(); ++k) {
    CHECK(a.keyframes[k].id == b.keyframes[k].id);
    CHECK(a.keyframes[k].index == b.keyframes[k].index);
    CHECK(a.keyframes[k].is_loop_frame == b.keyframes[k].is_loop_frame);
    CHECK(pose_gap(a.keyframes[k].pose, b.keyframes[k].pose) < 1e-12);
  }
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    CHECK(a.points[k].id == b.points[k].id);
    CHECK(a.points[k].position == b.points[k].position);
  }
  for (std::size_t k = 0; k < a.observations.size(); ++k) {
    CHECK(a.observations[k].point_id == b.observations[k].point_id);
    CHECK(a.observations[k].frame_id == b.observations[k].frame_id);
    CHECK(a.observations[k].kind == b.observations[k].kind);
    CHECK(a.observations[k].measurement == b.observations[k].measurement);
    CHECK(a.observations[k].sigma == b.observations[k].sigma);
  }
}

std::optional<Errc> code_of(const std::string& text) {
  try {
    parse_map(text);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("map text round-trips") {
  const World w = small_world();
  MapFile file{w.data, TruthRecords::from(w.data, w.truth)};
  const std::string text = format_map(file);
  const MapFile back = parse_map(text);
  check_same(w.data, back.data);
  REQUIRE(back.truth);
  CHECK(back.truth->points == file.truth->points);
  for (const auto& [id, pose] : file.truth->poses) CHECK(pose_gap(pose, back.truth->poses.at(id)) < 1e-12);
  // Records without a rotation are reproduced byte for byte.
  auto without_poses = [](const std::string& t) {
    std::istringstream in(t);
    std::string out, line;
    while (std::getline(in, line)) {
      if (line.rfind("keyframe", 0) != 0 && line.rfind("truth_pose", 0) != 0) out += line + '\n';
    }
    return out;
  };
  CHECK(without_poses(format_map(back)) == without_poses(text));
}

TEST_CASE("gzip and plain files load identically") {
  const World w = small_world();
  const MapFile file{w.data, std::nullopt};
  const auto plain = temp_path("plain.map");
  const auto packed = temp_path("packed.map.gz");
  save_map(plain, file);
  save_map(packed, file);
  CHECK(std::filesystem::file_size(packed) < std::filesystem::file_size(plain));
  CHECK(read_file(plain) == read_file(packed));
  check_same(load_map(packed).data, w.data);
  CHECK_FALSE(load_map(packed).truth);
  std::filesystem::remove(plain);
  std::filesystem::remove(packed);
}

TEST_CASE("truth aligns with storage order") {
  const World w = small_world();
  const auto records = TruthRecords::from(w.data, w.truth);
  const auto map = SlamMap::build(w.data);
  const GroundTruth aligned = records.aligned(map);
  REQUIRE(aligned.points.size() == map.num_points());
  for (std::size_t k = 0; k < map.num_points(); ++k) {
    CHECK(aligned.points[k] == records.points.at(map.points()[k].id));
  }
  TruthRecords partial = records;
  partial.points.erase(partial.points.begin());
  CHECK_THROWS_AS(partial.aligned(map), Error);
}

TEST_CASE("malformed map text is rejected with a line number") {
  const std::string head = std::string(kMapVersion) + "\ncamera 400 400 320 240 0.5\n";
  CHECK(code_of("") == Errc::data);
  CHECK(code_of("wrong/1\n") == Errc::data);
  CHECK(code_of(std::string(kMapVersion) + "\n") == Errc::data);
  CHECK(code_of(head + "keyframe 1 1 2 0 0 0 0 0 0 0\n") == Errc::data);  // non-unit quaternion
  CHECK(code_of(head + "keyframe 1 1 1 0 0 0 0 0 0 2\n") == Errc::data);  // loop flag
  CHECK(code_of(head + "point 1 0 0\n") == Errc::data);
  CHECK(code_of(head + "point 1 0 0 x\n") == Errc::data);
  CHECK(code_of(head + "obs stereo 1 1 1 2 3\n") == Errc::data);
  CHECK(code_of(head + "obs radar 1 1 1 2 3 1\n") == Errc::data);
  CHECK(code_of(head + "bogus\n") == Errc::data);
  CHECK(code_of(head + "# comment\n\npoint 1 0 0 1\n") == std::nullopt);
  try {
    parse_map(head + "\npoint 1 0 0\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("missing files raise io errors") {
  try {
    load_map(temp_path("does_not_exist.map"));
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
}

TEST_CASE("selection files round-trip and are parsed strictly") {
  SelectionFile s{"odom", 3, 12.5, 0.25, 40, {2, 7, 11}};
  const auto text = format_selection(s);
  const auto back = parse_selection(text);
  CHECK(back.kind == s.kind);
  CHECK(back.budget == s.budget);
  CHECK(back.value == s.value);
  CHECK(back.seconds == s.seconds);
  CHECK(back.gain_evals == s.gain_evals);
  CHECK(back.ids == s.ids);

  const auto path = temp_path("sel.txt");
  save_selection(path, s);
  CHECK(load_selection(path).ids == s.ids);
  std::filesystem::remove(path);

  SelectionFile unsorted = s;
  unsorted.ids = {7, 2, 11};
  CHECK_THROWS_AS(parse_selection(format_selection(unsorted)), Error);
  CHECK_THROWS_AS(parse_selection(""), Error);
  CHECK_THROWS_AS(parse_selection(text.substr(0, text.size() - 3)), Error);
}
