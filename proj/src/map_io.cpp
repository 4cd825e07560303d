#include "mapselect/map_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mapselect/error.hpp"

namespace mapselect {

TruthRecords TruthRecords::from(const MapData& data, const GroundTruth& truth) {
  if (truth.poses.size() != data.keyframes.size() || truth.points.size() != data.points.size()) {
    throw Error(Errc::data, "ground truth does not match the map");
  }
  TruthRecords out;
  for (std::size_t k = 0; k < truth.poses.size(); ++k) out.poses[data.keyframes[k].id] = truth.poses[k];
  for (std::size_t k = 0; k < truth.points.size(); ++k) out.points[data.points[k].id] = truth.points[k];
  return out;
}

GroundTruth TruthRecords::aligned(const SlamMap& map) const {
  GroundTruth out;
  for (const auto& kf : map.keyframes()) {
    const auto it = poses.find(kf.id);
    if (it == poses.end()) throw Error(Errc::data, "ground truth missing frame " + std::to_string(kf.id));
    out.poses.push_back(it->second);
  }
  for (const auto& p : map.points()) {
    const auto it = points.find(p.id);
    if (it == points.end()) throw Error(Errc::data, "ground truth missing point " + std::to_string(p.id));
    out.points.push_back(it->second);
  }
  return out;
}

namespace {

class Writer {
 public:
  Writer& word(std::string_view w) {
    sep();
    out_ += w;
    return *this;
  }
  Writer& num(double v) {
    sep();
    char buf[64];
    out_.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    return *this;
  }
  Writer& num(std::int64_t v) {
    sep();
    char buf[32];
    out_.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    return *this;
  }
  Writer& num(std::size_t v) { return num(static_cast<std::int64_t>(v)); }
  Writer& pose(const SE3& pose) {
    Eigen::Quaterniond q(pose.rotation);
    q.normalize();
    if (q.w() < 0) q.coeffs() *= -1.0;
    num(q.w()).num(q.x()).num(q.y()).num(q.z());
    return vec(pose.translation);
  }
  Writer& vec(const Vec3& v) { return num(v.x()).num(v.y()).num(v.z()); }
  void end() {
    out_ += '\n';
    fresh_ = true;
  }
  std::string take() { return std::move(out_); }

 private:
  void sep() {
    if (!fresh_) out_ += ' ';
    fresh_ = false;
  }
  std::string out_;
  bool fresh_ = true;
};

// Whitespace-separated tokens of one line with typed accessors.
class Line {
 public:
  Line(std::string_view text, std::size_t number) : number_(number) {
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r')) ++pos;
      std::size_t end = pos;
      while (end < text.size() && text[end] != ' ' && text[end] != '\t' && text[end] != '\r') ++end;
      if (end > pos) tokens_.push_back(text.substr(pos, end - pos));
      pos = end;
    }
  }

  bool empty() const { return tokens_.empty() || tokens_[0].front() == '#'; }
  std::size_t size() const { return tokens_.size(); }
  std::string_view tag() const { return tokens_[0]; }
  std::string_view word(std::size_t k) const { return tokens_.at(k); }

  void expect(std::size_t count) const {
    if (tokens_.size() != count) {
      fail("'" + std::string(tag()) + "' expects " + std::to_string(count - 1) + " fields, got " +
           std::to_string(tokens_.size() - 1));
    }
  }

  double real(std::size_t k) const {
    double v = 0.0;
    const auto tok = tokens_.at(k);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) fail("bad number '" + std::string(tok) + "'");
    return v;
  }

  std::int64_t integer(std::size_t k) const {
    std::int64_t v = 0;
    const auto tok = tokens_.at(k);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) fail("bad integer '" + std::string(tok) + "'");
    return v;
  }

  std::size_t count(std::size_t k) const {
    const std::int64_t v = integer(k);
    if (v < 0) fail("negative count");
    return static_cast<std::size_t>(v);
  }

  Vec3 vec(std::size_t k) const { return {real(k), real(k + 1), real(k + 2)}; }

  SE3 pose(std::size_t k) const {
    const Eigen::Quaterniond q(real(k), real(k + 1), real(k + 2), real(k + 3));
    if (std::abs(q.norm() - 1.0) > 1e-6) fail("quaternion is not unit length");
    return SE3::from_quaternion(q.normalized(), vec(k + 4));
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::data, "line " + std::to_string(number_) + ": " + msg);
  }

 private:
  std::vector<std::string_view> tokens_;
  std::size_t number_;
};

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    fn(Line(text.substr(pos, end - pos), number));
    pos = end + 1;
  }
}

ObsKind parse_kind(const Line& line, std::size_t k) {
  if (line.word(k) == "stereo") return ObsKind::stereo;
  if (line.word(k) == "mono") return ObsKind::mono;
  line.fail("observation kind must be stereo or mono");
}

}  // namespace

std::string format_map(const MapFile& file) {
  const MapData& d = file.data;
  Writer w;
  w.word(kMapVersion).end();
  w.word("camera").num(d.camera.fx).num(d.camera.fy).num(d.camera.cx).num(d.camera.cy).num(d.camera.baseline).end();
  for (const auto& kf : d.keyframes) {
    w.word("keyframe").num(kf.id).num(static_cast<std::int64_t>(kf.index)).pose(kf.pose)
        .num(static_cast<std::int64_t>(kf.is_loop_frame ? 1 : 0)).end();
  }
  for (const auto& p : d.points) w.word("point").num(p.id).vec(p.position).end();
  for (const auto& o : d.observations) {
    w.word("obs").word(o.kind == ObsKind::stereo ? "stereo" : "mono").num(o.point_id).num(o.frame_id);
    w.num(o.measurement.x()).num(o.measurement.y());
    if (o.kind == ObsKind::stereo) w.num(o.measurement.z());
    w.num(o.sigma).end();
  }
  if (file.truth) {
    for (const auto& [id, pose] : file.truth->poses) w.word("truth_pose").num(id).pose(pose).end();
    for (const auto& [id, p] : file.truth->points) w.word("truth_point").num(id).vec(p).end();
  }
  return w.take();
}

MapFile parse_map(std::string_view text) {
  MapFile file;
  bool have_version = false;
  bool have_camera = false;
  for_each_line(text, [&](const Line& line) {
    if (line.empty()) return;
    if (!have_version) {
      if (line.size() != 1 || line.tag() != kMapVersion) {
        line.fail("expected version tag '" + std::string(kMapVersion) + "'");
      }
      have_version = true;
      return;
    }
    const auto tag = line.tag();
    if (tag == "camera") {
      line.expect(6);
      if (have_camera) line.fail("duplicate camera line");
      file.data.camera = {line.real(1), line.real(2), line.real(3), line.real(4), line.real(5)};
      have_camera = true;
    } else if (tag == "keyframe") {
      line.expect(11);
      Keyframe kf;
      kf.id = line.integer(1);
      kf.index = static_cast<int>(line.integer(2));
      kf.pose = line.pose(3);
      const auto loop = line.integer(10);
      if (loop != 0 && loop != 1) line.fail("loop flag must be 0 or 1");
      kf.is_loop_frame = loop == 1;
      file.data.keyframes.push_back(kf);
    } else if (tag == "point") {
      line.expect(5);
      file.data.points.push_back({line.integer(1), line.vec(2)});
    } else if (tag == "obs") {
      if (line.size() < 2) line.fail("observation kind missing");
      Observation o;
      o.kind = parse_kind(line, 1);
      line.expect(o.kind == ObsKind::stereo ? 8 : 7);
      o.point_id = line.integer(2);
      o.frame_id = line.integer(3);
      o.measurement = Vec3(line.real(4), line.real(5), o.kind == ObsKind::stereo ? line.real(6) : 0.0);
      o.sigma = line.real(o.kind == ObsKind::stereo ? 7 : 6);
      file.data.observations.push_back(o);
    } else if (tag == "truth_pose") {
      line.expect(9);
      if (!file.truth) file.truth.emplace();
      if (!file.truth->poses.emplace(line.integer(1), line.pose(2)).second) line.fail("duplicate truth_pose");
    } else if (tag == "truth_point") {
      line.expect(5);
      if (!file.truth) file.truth.emplace();
      if (!file.truth->points.emplace(line.integer(1), line.vec(2)).second) line.fail("duplicate truth_point");
    } else {
      line.fail("unknown record '" + std::string(tag) + "'");
    }
  });
  if (!have_version) throw Error(Errc::data, "empty map file");
  if (!have_camera) throw Error(Errc::data, "map file has no camera line");
  return file;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() < 2 || static_cast<unsigned char>(raw[0]) != 0x1f ||
      static_cast<unsigned char>(raw[1]) != 0x8b) {
    return raw;
  }
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(Errc::io, "zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(raw.data());
  zs.avail_in = static_cast<uInt>(raw.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::io, "corrupt gzip data in " + path.string());
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(Errc::io, "truncated gzip data in " + path.string());
    }
  }
  inflateEnd(&zs);
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content, bool gzip) {
  std::string bytes;
  if (gzip) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
      throw Error(Errc::io, "zlib init failed");
    }
    bytes.resize(deflateBound(&zs, static_cast<uLong>(content.size())));
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(content.data()));
    zs.avail_in = static_cast<uInt>(content.size());
    zs.next_out = reinterpret_cast<Bytef*>(bytes.data());
    zs.avail_out = static_cast<uInt>(bytes.size());
    const int rc = deflate(&zs, Z_FINISH);
    bytes.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error(Errc::io, "gzip compression failed");
  } else {
    bytes.assign(content);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

MapFile load_map(const std::filesystem::path& path) { return parse_map(read_file(path)); }

void save_map(const std::filesystem::path& path, const MapFile& file) {
  write_file(path, format_map(file), path.extension() == ".gz");
}

std::string format_selection(const SelectionFile& file) {
  Writer w;
  w.word(kSelectionVersion).end();
  w.word("kind").word(file.kind).end();
  w.word("budget").num(file.budget).end();
  w.word("value").num(file.value).end();
  w.word("seconds").num(file.seconds).end();
  w.word("gain_evals").num(file.gain_evals).end();
  w.word("ids").num(file.ids.size()).end();
  for (const PointId id : file.ids) w.num(id).end();
  return w.take();
}

SelectionFile parse_selection(std::string_view text) {
  SelectionFile file;
  enum class Stage { version, header, ids } stage = Stage::version;
  std::size_t expected_ids = 0;
  bool have_ids_line = false;
  bool have[5] = {};
  for_each_line(text, [&](const Line& line) {
    if (line.empty()) return;
    if (stage == Stage::version) {
      if (line.size() != 1 || line.tag() != kSelectionVersion) {
        line.fail("expected version tag '" + std::string(kSelectionVersion) + "'");
      }
      stage = Stage::header;
      return;
    }
    if (stage == Stage::ids) {
      line.expect(1);
      if (file.ids.size() == expected_ids) line.fail("more ids than announced");
      file.ids.push_back(line.integer(0));
      return;
    }
    const auto tag = line.tag();
    line.expect(2);
    auto once = [&](int slot) {
      if (have[slot]) line.fail("duplicate '" + std::string(tag) + "'");
      have[slot] = true;
    };
    if (tag == "kind") {
      once(0);
      file.kind = std::string(line.word(1));
    } else if (tag == "budget") {
      once(1);
      file.budget = line.count(1);
    } else if (tag == "value") {
      once(2);
      file.value = line.real(1);
    } else if (tag == "seconds") {
      once(3);
      file.seconds = line.real(1);
    } else if (tag == "gain_evals") {
      once(4);
      file.gain_evals = line.count(1);
    } else if (tag == "ids") {
      expected_ids = line.count(1);
      have_ids_line = true;
      stage = Stage::ids;
    } else {
      line.fail("unknown record '" + std::string(tag) + "'");
    }
  });
  if (stage == Stage::version) throw Error(Errc::data, "empty selection file");
  if (!have_ids_line) throw Error(Errc::data, "selection file has no ids block");
  if (!std::all_of(std::begin(have), std::end(have), [](bool b) { return b; })) {
    throw Error(Errc::data, "selection file header incomplete");
  }
  if (file.ids.size() != expected_ids) throw Error(Errc::data, "selection file lists fewer ids than announced");
  if (!std::is_sorted(file.ids.begin(), file.ids.end()) ||
      std::adjacent_find(file.ids.begin(), file.ids.end()) != file.ids.end()) {
    throw Error(Errc::data, "selection ids must be strictly ascending");
  }
  return file;
}

SelectionFile load_selection(const std::filesystem::path& path) { return parse_selection(read_file(path)); }

void save_selection(const std::filesystem::path& path, const SelectionFile& file) {
  write_file(path, format_selection(file), path.extension() == ".gz");
}

}  // namespace mapselect
