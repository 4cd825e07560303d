#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mapselect/map_model.hpp"
#include "mapselect/simeval.hpp"

namespace mapselect {

inline constexpr std::string_view kMapVersion = "mapselect/1";
inline constexpr std::string_view kSelectionVersion = "mapselect-selection/1";

/// Ground truth keyed by id, as stored on disk.
struct TruthRecords {
  std::map<FrameId, SE3> poses;
  std::map<PointId, Vec3> points;

  /// Records for a world whose truth is aligned with `data`'s vectors.
  static TruthRecords from(const MapData& data, const GroundTruth& truth);
  /// Truth in the map's storage order; throws Errc::data when incomplete.
  GroundTruth aligned(const SlamMap& map) const;
};

struct MapFile {
  MapData data;
  std::optional<TruthRecords> truth;
};

/// Text form of a map. Doubles use the shortest round-trip representation.
std::string format_map(const MapFile& file);

/// Parses the text form and checks quaternion norms (1e-6). Throws Errc::data
/// with the offending line number. Does not run validate().
MapFile parse_map(std::string_view text);

/// Reads plain or gzip files (detected by magic bytes). Throws Errc::io.
std::string read_file(const std::filesystem::path& path);
/// Writes gzip when `gzip` is set. Throws Errc::io.
void write_file(const std::filesystem::path& path, std::string_view content, bool gzip = false);

MapFile load_map(const std::filesystem::path& path);
/// gzip is used for paths ending in ".gz".
void save_map(const std::filesystem::path& path, const MapFile& file);

struct SelectionFile {
  std::string kind;
  std::size_t budget = 0;
  double value = 0.0;
  double seconds = 0.0;
  std::size_t gain_evals = 0;
  std::vector<PointId> ids;  // ascending
};

std::string format_selection(const SelectionFile& file);
/// Throws Errc::data on malformed content.
SelectionFile parse_selection(std::string_view text);

SelectionFile load_selection(const std::filesystem::path& path);
void save_selection(const std::filesystem::path& path, const SelectionFile& file);

}  // namespace mapselect
