#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapselect/geometry.hpp"

namespace mapselect {

using PointId = std::int64_t;
using FrameId = std::int64_t;

struct MapPoint {
  PointId id = 0;
  Vec3 position = Vec3::Zero();
};

struct Keyframe {
  FrameId id = 0;
  int index = 1;  // temporal order, contiguous 1..t
  SE3 pose;       // world -> camera
  bool is_loop_frame = false;
};

struct Observation {
  PointId point_id = 0;
  FrameId frame_id = 0;
  ObsKind kind = ObsKind::stereo;
  Vec3 measurement = Vec3::Zero();  // (u_left, v, u_right); mono uses (u, v)
  double sigma = 1.0;               // pixels
};

/// Raw map content as loaded or generated, before indexing.
struct MapData {
  CameraIntrinsics camera;
  std::vector<Keyframe> keyframes;
  std::vector<MapPoint> points;
  std::vector<Observation> observations;
};

struct Diagnostic {
  enum class Kind {
    invalid_camera,
    duplicate_point_id,
    duplicate_frame_id,
    bad_frame_index,
    rotation_not_orthonormal,
    nonfinite_value,
    dangling_point,
    dangling_frame,
    duplicate_observation,
    nonpositive_sigma,
    behind_camera,
  };
  Kind kind;
  std::string message;
};

const char* to_string(Diagnostic::Kind kind) noexcept;

/// Every invariant violation in the map; empty iff well-formed. Orphan points
/// (no observations) are legal and not reported.
std::vector<Diagnostic> validate(const MapData& data);

/// Validated, indexed, immutable map.
///
/// Points are stored in ascending id order, so "smallest dense index" and
/// "smallest id" coincide. Keyframes are stored in temporal order; algorithms
/// address them by slot = index - 1.
class SlamMap {
 public:
  struct ObsRef {
    std::size_t frame;        // slot
    std::size_t observation;  // index into observations()
  };

  /// Throws Errc::data listing the diagnostics when validation fails.
  static SlamMap build(MapData data);

  const CameraIntrinsics& camera() const { return data_.camera; }
  std::span<const Keyframe> keyframes() const { return data_.keyframes; }
  std::span<const MapPoint> points() const { return data_.points; }
  std::span<const Observation> observations() const { return data_.observations; }
  const MapData& data() const { return data_; }

  std::size_t num_frames() const { return data_.keyframes.size(); }
  std::size_t num_points() const { return data_.points.size(); }

  /// Throws Errc::lookup for unknown ids.
  std::size_t point_index(PointId id) const;
  std::size_t frame_slot(FrameId id) const;

  /// Observations of a point, ascending frame slot.
  std::span<const ObsRef> point_observations(std::size_t point) const {
    return {obs_refs_.data() + point_offsets_[point],
            obs_refs_.data() + point_offsets_[point + 1]};
  }
  /// Points observed in a frame, ascending point index.
  std::span<const std::size_t> frame_points(std::size_t slot) const {
    return {frame_point_list_.data() + frame_offsets_[slot],
            frame_point_list_.data() + frame_offsets_[slot + 1]};
  }

  bool is_orphan(std::size_t point) const {
    return point_offsets_[point] == point_offsets_[point + 1];
  }
  std::vector<std::size_t> loop_frames() const;

 private:
  MapData data_;
  std::unordered_map<PointId, std::size_t> point_lookup_;
  std::unordered_map<FrameId, std::size_t> frame_lookup_;
  std::vector<std::size_t> point_offsets_;
  std::vector<ObsRef> obs_refs_;
  std::vector<std::size_t> frame_offsets_;
  std::vector<std::size_t> frame_point_list_;
};

/// Frame slots observing the point, ascending. Throws Errc::lookup.
std::vector<std::size_t> covisible_frames(const SlamMap& map, PointId point);

/// Number of points observed in both frames (slots). Throws Errc::lookup.
std::size_t covisibility_count(const SlamMap& map, std::size_t frame_a, std::size_t frame_b);

/// For each frame slot j >= 1, the earlier slot sharing the most points
/// (ties -> smallest slot); nullopt for slot 0 and for frames with no covisible
/// predecessor.
std::vector<std::optional<std::size_t>> pairing(const SlamMap& map);

/// Ids of all points observed in the last keyframe, ascending.
std::vector<PointId> forced_set(const SlamMap& map);

/// Immutable input shared by every selector.
struct SelectionProblem {
  std::shared_ptr<const SlamMap> map;
  std::size_t budget = 0;
  std::vector<std::size_t> forced;  // dense point indices, ascending
  double prior_epsilon = 1e-4;
  double noise_scale = 1.0;

  /// Checks |forced| <= budget <= n (Errc::budget) and prior_epsilon > 0,
  /// noise_scale > 0 (Errc::config).
  static SelectionProblem make(std::shared_ptr<const SlamMap> map, std::size_t budget,
                               std::vector<std::size_t> forced, double prior_epsilon = 1e-4,
                               double noise_scale = 1.0);

  /// Forced set taken from the last keyframe.
  static SelectionProblem with_last_frame_forced(std::shared_ptr<const SlamMap> map,
                                                 std::size_t budget,
                                                 double prior_epsilon = 1e-4,
                                                 double noise_scale = 1.0);

  const SlamMap& slam_map() const { return *map; }
  std::size_t num_points() const { return map->num_points(); }
  std::size_t num_frames() const { return map->num_frames(); }
};

}  // namespace mapselect
