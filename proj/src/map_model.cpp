#include "mapselect/map_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mapselect/error.hpp"

namespace mapselect {

const char* to_string(Diagnostic::Kind kind) noexcept {
  using K = Diagnostic::Kind;
  switch (kind) {
    case K::invalid_camera: return "invalid_camera";
    case K::duplicate_point_id: return "duplicate_point_id";
    case K::duplicate_frame_id: return "duplicate_frame_id";
    case K::bad_frame_index: return "bad_frame_index";
    case K::rotation_not_orthonormal: return "rotation_not_orthonormal";
    case K::nonfinite_value: return "nonfinite_value";
    case K::dangling_point: return "dangling_point";
    case K::dangling_frame: return "dangling_frame";
    case K::duplicate_observation: return "duplicate_observation";
    case K::nonpositive_sigma: return "nonpositive_sigma";
    case K::behind_camera: return "behind_camera";
  }
  return "unknown";
}

namespace {

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace

std::vector<Diagnostic> validate(const MapData& data) {
  using K = Diagnostic::Kind;
  std::vector<Diagnostic> out;
  auto report = [&](K kind, std::string msg) { out.push_back({kind, std::move(msg)}); };

  const auto& cam = data.camera;
  if (!cam.valid() || !std::isfinite(cam.cx) || !std::isfinite(cam.cy)) {
    report(K::invalid_camera, "camera requires fx, fy, baseline > 0 and finite principal point");
  }

  std::unordered_map<PointId, const MapPoint*> points;
  for (const auto& p : data.points) {
    if (!points.emplace(p.id, &p).second) report(K::duplicate_point_id, cat("point id ", p.id));
    if (!p.position.allFinite()) report(K::nonfinite_value, cat("point ", p.id, " position"));
  }

  std::unordered_map<FrameId, const Keyframe*> frames;
  std::vector<int> indices;
  for (const auto& kf : data.keyframes) {
    if (!frames.emplace(kf.id, &kf).second) report(K::duplicate_frame_id, cat("frame id ", kf.id));
    indices.push_back(kf.index);
    if (!kf.pose.rotation.allFinite() || !kf.pose.translation.allFinite()) {
      report(K::nonfinite_value, cat("frame ", kf.id, " pose"));
    } else if (kf.pose.orthonormality_error() > 1e-9) {
      report(K::rotation_not_orthonormal,
             cat("frame ", kf.id, " rotation deviates by ", kf.pose.orthonormality_error()));
    }
  }
  std::sort(indices.begin(), indices.end());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] != static_cast<int>(k) + 1) {
      report(K::bad_frame_index, "keyframe indices must be a contiguous 1..t ordering");
      break;
    }
  }

  std::set<std::pair<PointId, FrameId>> seen;
  for (const auto& ob : data.observations) {
    const auto pit = points.find(ob.point_id);
    const auto fit = frames.find(ob.frame_id);
    if (pit == points.end()) {
      report(K::dangling_point, cat("observation references missing point ", ob.point_id));
    }
    if (fit == frames.end()) {
      report(K::dangling_frame, cat("observation references missing frame ", ob.frame_id));
    }
    if (!seen.emplace(ob.point_id, ob.frame_id).second) {
      report(K::duplicate_observation,
             cat("duplicate observation of point ", ob.point_id, " in frame ", ob.frame_id));
    }
    if (!(ob.sigma > 0.0)) {
      report(K::nonpositive_sigma,
             cat("observation (", ob.point_id, ", ", ob.frame_id, ") sigma ", ob.sigma));
    }
    const int dim = measurement_dim(ob.kind);
    if (!ob.measurement.head(dim).allFinite()) {
      report(K::nonfinite_value, cat("observation (", ob.point_id, ", ", ob.frame_id, ")"));
    }
    if (pit != points.end() && fit != frames.end() && pit->second->position.allFinite()) {
      const Vec3 pc = fit->second->pose * pit->second->position;
      if (!(pc.z() > kDepthFloor)) {
        report(K::behind_camera,
               cat("point ", ob.point_id, " behind camera of frame ", ob.frame_id));
      }
    }
  }
  return out;
}

SlamMap SlamMap::build(MapData data) {
  const auto diagnostics = validate(data);
  if (!diagnostics.empty()) {
    std::ostringstream os;
    os << "invalid map (" << diagnostics.size() << " problems)";
    for (std::size_t k = 0; k < std::min<std::size_t>(diagnostics.size(), 5); ++k) {
      os << "; " << diagnostics[k].message;
    }
    throw Error(Errc::data, os.str());
  }

  SlamMap map;
  std::sort(data.points.begin(), data.points.end(),
            [](const MapPoint& a, const MapPoint& b) { return a.id < b.id; });
  std::sort(data.keyframes.begin(), data.keyframes.end(),
            [](const Keyframe& a, const Keyframe& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < data.points.size(); ++i) map.point_lookup_[data.points[i].id] = i;
  for (std::size_t j = 0; j < data.keyframes.size(); ++j) map.frame_lookup_[data.keyframes[j].id] = j;

  // Observations sorted by (point, frame slot) so each point owns a contiguous run.
  auto key = [&map](const Observation& o) {
    return std::pair{map.point_lookup_.at(o.point_id), map.frame_lookup_.at(o.frame_id)};
  };
  std::stable_sort(data.observations.begin(), data.observations.end(),
                   [&](const Observation& a, const Observation& b) { return key(a) < key(b); });

  const std::size_t n = data.points.size();
  const std::size_t t = data.keyframes.size();
  map.point_offsets_.assign(n + 1, 0);
  map.obs_refs_.reserve(data.observations.size());
  std::vector<std::size_t> per_frame(t + 1, 0);
  for (std::size_t k = 0; k < data.observations.size(); ++k) {
    const auto [pi, fj] = key(data.observations[k]);
    ++map.point_offsets_[pi + 1];
    ++per_frame[fj + 1];
    map.obs_refs_.push_back({fj, k});
  }
  std::partial_sum(map.point_offsets_.begin(), map.point_offsets_.end(), map.point_offsets_.begin());
  std::partial_sum(per_frame.begin(), per_frame.end(), per_frame.begin());
  map.frame_offsets_ = per_frame;
  map.frame_point_list_.resize(data.observations.size());
  std::vector<std::size_t> fill(per_frame.begin(), per_frame.end() - 1);
  // Iterating in point order keeps each frame's list sorted by point index.
  for (std::size_t k = 0; k < data.observations.size(); ++k) {
    const auto [pi, fj] = key(data.observations[k]);
    map.frame_point_list_[fill[fj]++] = pi;
  }
  map.data_ = std::move(data);
  return map;
}

std::size_t SlamMap::point_index(PointId id) const {
  const auto it = point_lookup_.find(id);
  if (it == point_lookup_.end()) throw Error(Errc::lookup, cat("unknown point id ", id));
  return it->second;
}

std::size_t SlamMap::frame_slot(FrameId id) const {
  const auto it = frame_lookup_.find(id);
  if (it == frame_lookup_.end()) throw Error(Errc::lookup, cat("unknown frame id ", id));
  return it->second;
}

std::vector<std::size_t> SlamMap::loop_frames() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < data_.keyframes.size(); ++j) {
    if (data_.keyframes[j].is_loop_frame) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> covisible_frames(const SlamMap& map, PointId point) {
  std::vector<std::size_t> out;
  for (const auto& ref : map.point_observations(map.point_index(point))) out.push_back(ref.frame);
  return out;
}

std::size_t covisibility_count(const SlamMap& map, std::size_t frame_a, std::size_t frame_b) {
  if (frame_a >= map.num_frames() || frame_b >= map.num_frames()) {
    throw Error(Errc::lookup, cat("unknown frame slot ", std::max(frame_a, frame_b)));
  }
  const auto a = map.frame_points(frame_a);
  const auto b = map.frame_points(frame_b);
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::vector<std::optional<std::size_t>> pairing(const SlamMap& map) {
  const std::size_t t = map.num_frames();
  std::vector<std::optional<std::size_t>> out(t);
  std::vector<std::size_t> counts(t, 0);
  for (std::size_t j = 1; j < t; ++j) {
    std::fill(counts.begin(), counts.begin() + j, 0);
    for (std::size_t point : map.frame_points(j)) {
      for (const auto& ref : map.point_observations(point)) {
        if (ref.frame >= j) break;
        ++counts[ref.frame];
      }
    }
    std::size_t best = 0;
    for (std::size_t jp = 0; jp < j; ++jp) {
      if (counts[jp] > best) {
        best = counts[jp];
        out[j] = jp;
      }
    }
  }
  return out;
}

std::vector<PointId> forced_set(const SlamMap& map) {
  std::vector<PointId> out;
  if (map.num_frames() == 0) return out;
  for (std::size_t point : map.frame_points(map.num_frames() - 1)) {
    out.push_back(map.points()[point].id);
  }
  return out;
}

SelectionProblem SelectionProblem::make(std::shared_ptr<const SlamMap> map, std::size_t budget,
                                        std::vector<std::size_t> forced, double prior_epsilon,
                                        double noise_scale) {
  if (!map) throw Error(Errc::config, "selection problem without a map");
  std::sort(forced.begin(), forced.end());
  forced.erase(std::unique(forced.begin(), forced.end()), forced.end());
  for (std::size_t f : forced) {
    if (f >= map->num_points()) throw Error(Errc::lookup, cat("forced point index ", f));
  }
  if (budget > map->num_points()) {
    throw Error(Errc::budget, cat("budget ", budget, " exceeds map size ", map->num_points()));
  }
  if (forced.size() > budget) {
    throw Error(Errc::budget,
                cat("budget ", budget, " is smaller than the forced set (", forced.size(), ")"));
  }
  if (!(prior_epsilon > 0.0)) throw Error(Errc::config, "prior_epsilon must be positive");
  if (!(noise_scale > 0.0)) throw Error(Errc::config, "noise_scale must be positive");
  SelectionProblem p;
  p.map = std::move(map);
  p.budget = budget;
  p.forced = std::move(forced);
  p.prior_epsilon = prior_epsilon;
  p.noise_scale = noise_scale;
  return p;
}

SelectionProblem SelectionProblem::with_last_frame_forced(std::shared_ptr<const SlamMap> map,
                                                          std::size_t budget,
                                                          double prior_epsilon,
                                                          double noise_scale) {
  std::vector<std::size_t> forced;
  if (map && map->num_frames() > 0) {
    const auto pts = map->frame_points(map->num_frames() - 1);
    forced.assign(pts.begin(), pts.end());
  }
  return make(std::move(map), budget, std::move(forced), prior_epsilon, noise_scale);
}

}  // namespace mapselect
