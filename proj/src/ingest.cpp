#include "activelo/ingest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "activelo/rng.hpp"
#include "activelo/util.hpp"

namespace fs = std::filesystem;

namespace activelo {

// -------------------- pose files

std::vector<Pose> load_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open pose file: " + path);

  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    std::istringstream ss(line);
    double v[12];
    int got = 0;
    while (got < 12 && (ss >> v[got])) ++got;
    std::string extra;
    if (got < 12 || (ss >> extra)) {
      fail(ErrorKind::parse, path + ": line " + std::to_string(line_no) +
                                 ": expected 12 values per pose");
    }

    Pose p;
    p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    p.translation << v[3], v[7], v[11];

    double err = orthonormality_error(p.rotation);
    if (err > 1e-2) {
      fail(ErrorKind::parse, path + ": line " + std::to_string(line_no) +
                                 ": rotation is not orthonormal (error " +
                                 format_double(err) + ")");
    }
    if (err > 1e-6) p.rotation = orthonormalized(p.rotation);
    poses.push_back(p);
  }
  if (poses.empty()) fail(ErrorKind::parse, path + ": no poses found");
  return poses;
}

void save_pose_file(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write pose file: " + path);
  char buf[32];
  for (const Pose& p : poses) {
    double v[12] = {p.rotation(0, 0), p.rotation(0, 1), p.rotation(0, 2), p.translation(0),
                    p.rotation(1, 0), p.rotation(1, 1), p.rotation(1, 2), p.translation(1),
                    p.rotation(2, 0), p.rotation(2, 1), p.rotation(2, 2), p.translation(2)};
    for (int i = 0; i < 12; ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", v[i]);
      out << buf << (i == 11 ? '\n' : ' ');
    }
  }
  if (!out) fail(ErrorKind::io, "write failed: " + path);
}

// -------------------- point cloud files

CloudLoadResult load_point_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(ErrorKind::io, "cannot open point cloud: " + path);
  std::streamsize bytes = in.tellg();
  in.seekg(0);
  if (bytes % 16 != 0) {
    fail(ErrorKind::parse, path + ": size " + std::to_string(bytes) +
                               " is not a multiple of 16 bytes");
  }

  size_t n = static_cast<size_t>(bytes) / 16;
  std::vector<float> raw(n * 4);
  if (n > 0 && !in.read(reinterpret_cast<char*>(raw.data()), bytes)) {
    fail(ErrorKind::io, "read failed: " + path);
  }

  CloudLoadResult res;
  res.cloud.points.reserve(n);
  res.cloud.intensity.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    float x = raw[4 * i], y = raw[4 * i + 1], z = raw[4 * i + 2];
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      ++res.dropped_nan;
      continue;
    }
    res.cloud.points.emplace_back(x, y, z);
    res.cloud.intensity.push_back(raw[4 * i + 3]);
  }
  if (n == 0) log_warn("empty point cloud file: " + path);
  return res;
}

void save_point_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write point cloud: " + path);
  for (int i = 0; i < cloud.size(); ++i) {
    float rec[4] = {static_cast<float>(cloud.points[i].x()),
                    static_cast<float>(cloud.points[i].y()),
                    static_cast<float>(cloud.points[i].z()),
                    cloud.has_intensity() ? cloud.intensity[i] : 0.0f};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  if (!out) fail(ErrorKind::io, "write failed: " + path);
}

// -------------------- cloud sources

VectorCloudSource::VectorCloudSource(std::vector<PointCloud> frames) {
  frames_.reserve(frames.size());
  for (auto& f : frames) frames_.push_back(std::make_shared<const PointCloud>(std::move(f)));
}

std::shared_ptr<const PointCloud> VectorCloudSource::frame(int index) const {
  if (index < 0 || index >= frame_count())
    fail(ErrorKind::invalid_argument, "cloud frame index out of range: " + std::to_string(index));
  return frames_[index];
}

namespace {

class DirectoryCloudSource : public CloudSource {
 public:
  DirectoryCloudSource(std::string dir, std::vector<std::string> files, int cache_frames)
      : dir_(std::move(dir)), files_(std::move(files)), cache_cap_(cache_frames) {}

  int frame_count() const override { return static_cast<int>(files_.size()); }

  std::shared_ptr<const PointCloud> frame(int index) const override {
    if (index < 0 || index >= frame_count())
      fail(ErrorKind::invalid_argument,
           "cloud frame index out of range: " + std::to_string(index));
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(index);
      if (it != cache_.end()) return it->second;
    }
    CloudLoadResult res = load_point_cloud(files_[index]);
    if (res.dropped_nan > 0) {
      log_warn(files_[index] + ": dropped " + std::to_string(res.dropped_nan) +
               " non-finite points");
    }
    res.cloud.frame_index = index;
    auto cloud = std::make_shared<const PointCloud>(std::move(res.cloud));
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_.emplace(index, cloud).second) {
      lru_.push_back(index);
      if (static_cast<int>(lru_.size()) > cache_cap_) {
        cache_.erase(lru_.front());
        lru_.pop_front();
      }
    }
    return cloud;
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
  int cache_cap_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::shared_ptr<const PointCloud>> cache_;
  mutable std::deque<int> lru_;
};

}  // namespace

std::shared_ptr<CloudSource> make_directory_cloud_source(const std::string& dir,
                                                         int cache_frames) {
  if (!fs::is_directory(dir)) fail(ErrorKind::io, "not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::io, "no .bin clouds in directory: " + dir);
  return std::make_shared<DirectoryCloudSource>(dir, std::move(files),
                                                cache_frames < 1 ? 1 : cache_frames);
}

// -------------------- sequences

std::string weather_name(Weather w) {
  return w == Weather::snowy ? "snowy" : "general";
}

Weather weather_from_name(const std::string& name) {
  if (name == "general") return Weather::general;
  if (name == "snowy") return Weather::snowy;
  fail(ErrorKind::parse, "unknown weather tag: " + name);
}

Pose SequenceRecord::relative_gt(int i) const {
  if (!has_gt()) fail(ErrorKind::invalid_argument, "sequence '" + id + "' has no ground truth");
  if (i < 0 || i + 1 >= static_cast<int>(gt_poses.size()))
    fail(ErrorKind::invalid_argument, "sequence '" + id + "': no frame pair at " + std::to_string(i));
  return compose(invert(gt_poses[i + 1]), gt_poses[i]);
}

// -------------------- synthetic sequences

namespace {

// Fixed environment parameters for the synthetic corridor.
constexpr double kGroundZ = -1.8;
constexpr double kGroundStep = 1.5;
constexpr double kGroundOffsets[5] = {-3.0, -1.5, 0.0, 1.5, 3.0};
constexpr double kBoxSpacing = 6.0;
constexpr double kBoxOffset = 4.0;
constexpr double kBoxHalf[3] = {0.8, 0.8, 1.2};
constexpr double kBoxCenterZ = -0.6;
constexpr int kFaceGrid = 4;
constexpr double kClutterMarginXy = 20.0;
constexpr double kClutterZMin = -2.0;
constexpr double kClutterZMax = 6.0;

struct TrajectoryBuild {
  std::vector<Vec3> positions;
  std::vector<double> headings;  // heading of the step leaving each frame
};

TrajectoryBuild build_trajectory(const SynthSpec& spec) {
  TrajectoryBuild t;
  double heading = 0.0;
  Vec3 p = Vec3::Zero();
  t.positions.push_back(p);

  std::vector<double> step_headings;
  for (const SynthSegment& seg : spec.segments) {
    if (seg.length <= 0 || seg.speed <= 0)
      fail(ErrorKind::invalid_argument, "synthetic segment needs positive length and speed");
    heading = wrap_angle(heading + seg.turn);
    long steps = std::lround(seg.length / seg.speed * spec.frame_rate);
    if (steps < 1) steps = 1;
    double step_len = seg.speed / spec.frame_rate;
    Vec3 dir(std::cos(heading), std::sin(heading), 0.0);
    for (long s = 0; s < steps; ++s) {
      p += dir * step_len;
      t.positions.push_back(p);
      step_headings.push_back(heading);
    }
  }

  t.headings = step_headings;
  t.headings.push_back(step_headings.back());  // last frame keeps its arrival heading
  return t;
}

struct ArcWalker {
  const std::vector<Vec3>& pts;
  std::vector<double> cum;

  explicit ArcWalker(const std::vector<Vec3>& p) : pts(p) {
    cum.resize(p.size(), 0.0);
    for (size_t i = 1; i < p.size(); ++i) cum[i] = cum[i - 1] + (p[i] - p[i - 1]).norm();
  }

  double total() const { return cum.back(); }

  void at(double s, Vec3* pos, Vec3* dir) const {
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    size_t i = it == cum.begin() ? 0 : static_cast<size_t>(it - cum.begin()) - 1;
    if (i + 1 >= pts.size()) i = pts.size() - 2;
    Vec3 d = pts[i + 1] - pts[i];
    double len = d.norm();
    d = len > 1e-12 ? Vec3(d / len) : Vec3(1, 0, 0);
    *pos = pts[i] + d * (s - cum[i]);
    *dir = d;
  }
};

void sample_box(const Vec3& center, std::vector<Vec3>* out) {
  for (int axis = 0; axis < 3; ++axis) {
    int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int sign = -1; sign <= 1; sign += 2) {
      for (int i = 0; i < kFaceGrid; ++i) {
        for (int j = 0; j < kFaceGrid; ++j) {
          Vec3 q = center;
          q[axis] += sign * kBoxHalf[axis];
          q[u] += -kBoxHalf[u] + (i + 0.5) * 2.0 * kBoxHalf[u] / kFaceGrid;
          q[v] += -kBoxHalf[v] + (j + 0.5) * 2.0 * kBoxHalf[v] / kFaceGrid;
          out->push_back(q);
        }
      }
    }
  }
}

std::vector<Vec3> build_structure(const std::vector<Vec3>& path, int points_per_frame) {
  ArcWalker walk(path);
  std::vector<Vec3> world;

  Vec3 pos, dir;
  for (double s = 0.0; s <= walk.total(); s += kGroundStep) {
    walk.at(s, &pos, &dir);
    Vec3 perp(-dir.y(), dir.x(), 0.0);
    for (double off : kGroundOffsets) {
      Vec3 q = pos + perp * off;
      q.z() = kGroundZ;
      world.push_back(q);
    }
  }

  int station = 0;
  for (double s = 0.0; s <= walk.total(); s += kBoxSpacing, ++station) {
    walk.at(s, &pos, &dir);
    Vec3 perp(-dir.y(), dir.x(), 0.0);
    double side = station % 2 == 0 ? 1.0 : -1.0;
    Vec3 center = pos + perp * (side * kBoxOffset);
    center.z() = kBoxCenterZ;
    sample_box(center, &world);
  }

  int n = static_cast<int>(world.size());
  if (points_per_frame > 0 && points_per_frame < n) {
    std::vector<Vec3> kept;
    kept.reserve(points_per_frame);
    for (int i = 0; i < points_per_frame; ++i) {
      kept.push_back(world[static_cast<size_t>(i) * n / points_per_frame]);
    }
    world.swap(kept);
  }
  return world;
}

class SyntheticCloudSource : public CloudSource {
 public:
  SyntheticCloudSource(SynthSpec spec, uint64_t seed, std::vector<Pose> poses,
                       std::vector<Vec3> structure)
      : spec_(std::move(spec)), seed_(seed), poses_(std::move(poses)),
        structure_(std::move(structure)) {
    Vec3 lo = poses_.front().translation;
    Vec3 hi = lo;
    for (const Pose& p : poses_) {
      lo = lo.cwiseMin(p.translation);
      hi = hi.cwiseMax(p.translation);
    }
    clutter_lo_ = Vec3(lo.x() - kClutterMarginXy, lo.y() - kClutterMarginXy, kClutterZMin);
    clutter_hi_ = Vec3(hi.x() + kClutterMarginXy, hi.y() + kClutterMarginXy, kClutterZMax);
    double f = spec_.clutter_fraction;
    clutter_count_ = f > 0 ? std::lround(f / (1.0 - f) * static_cast<double>(structure_.size()))
                           : 0;
  }

  int frame_count() const override { return static_cast<int>(poses_.size()); }

  std::shared_ptr<const PointCloud> frame(int index) const override {
    if (index < 0 || index >= frame_count())
      fail(ErrorKind::invalid_argument,
           "cloud frame index out of range: " + std::to_string(index));
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(index);
      if (it != cache_.end()) return it->second;
    }
    auto cloud = std::make_shared<const PointCloud>(generate(index));
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_.emplace(index, cloud).second) {
      lru_.push_back(index);
      if (lru_.size() > 8) {
        cache_.erase(lru_.front());
        lru_.pop_front();
      }
    }
    return cloud;
  }

 private:
  PointCloud generate(int index) const {
    Rng rng(mix_seed(seed_, 0x517e0000ull + static_cast<uint64_t>(index)));
    const Pose& pose = poses_[index];
    Mat3 rt = pose.rotation.transpose();

    PointCloud cloud;
    cloud.frame_index = index;
    cloud.points.reserve(structure_.size() + clutter_count_);
    cloud.intensity.reserve(structure_.size() + clutter_count_);

    for (const Vec3& world : structure_) {
      Vec3 q = rt * (world - pose.translation);
      if (spec_.noise_sigma > 0) {
        q += Vec3(rng.normal(spec_.noise_sigma), rng.normal(spec_.noise_sigma),
                  rng.normal(spec_.noise_sigma));
      }
      cloud.points.push_back(q);
      cloud.intensity.push_back(0.7f);
    }
    for (long c = 0; c < clutter_count_; ++c) {
      Vec3 world(clutter_lo_.x() + rng.uniform() * (clutter_hi_.x() - clutter_lo_.x()),
                 clutter_lo_.y() + rng.uniform() * (clutter_hi_.y() - clutter_lo_.y()),
                 clutter_lo_.z() + rng.uniform() * (clutter_hi_.z() - clutter_lo_.z()));
      cloud.points.push_back(rt * (world - pose.translation));
      cloud.intensity.push_back(0.2f);
    }
    return cloud;
  }

  SynthSpec spec_;
  uint64_t seed_;
  std::vector<Pose> poses_;
  std::vector<Vec3> structure_;
  Vec3 clutter_lo_, clutter_hi_;
  long clutter_count_ = 0;
  mutable std::mutex mutex_;
  mutable std::map<int, std::shared_ptr<const PointCloud>> cache_;
  mutable std::deque<int> lru_;
};

}  // namespace

SequenceRecord synth_sequence(const SynthSpec& spec, uint64_t seed, const std::string& id) {
  if (spec.segments.empty())
    fail(ErrorKind::invalid_argument, "synthetic sequence needs at least one segment");
  if (spec.frame_rate <= 0)
    fail(ErrorKind::invalid_argument, "synthetic sequence needs a positive frame rate");
  if (spec.clutter_fraction < 0 || spec.clutter_fraction >= 1)
    fail(ErrorKind::invalid_argument, "clutter_fraction must lie in [0, 1)");

  TrajectoryBuild traj = build_trajectory(spec);

  SequenceRecord rec;
  rec.id = id;
  rec.frame_rate = spec.frame_rate;
  rec.positions = traj.positions;
  rec.gt_poses.reserve(traj.positions.size());
  for (size_t i = 0; i < traj.positions.size(); ++i) {
    Pose p;
    double h = traj.headings[i];
    p.rotation << std::cos(h), -std::sin(h), 0, std::sin(h), std::cos(h), 0, 0, 0, 1;
    p.translation = traj.positions[i];
    rec.gt_poses.push_back(p);
  }

  std::vector<Vec3> structure = build_structure(traj.positions, spec.points_per_frame);
  rec.clouds = std::make_shared<SyntheticCloudSource>(spec, seed, rec.gt_poses,
                                                      std::move(structure));
  return rec;
}

// -------------------- pool

const SequenceRecord* SamplePool::find(const std::string& id) const {
  for (const auto& s : sequences)
    if (s.id == id) return &s;
  return nullptr;
}

const SequenceRecord& SamplePool::at(const std::string& id) const {
  const SequenceRecord* rec = find(id);
  if (!rec) fail(ErrorKind::invalid_argument, "unknown sequence id: " + id);
  return *rec;
}

std::vector<std::string> SamplePool::ids() const {
  std::vector<std::string> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(s.id);
  return out;
}

std::vector<std::string> SamplePool::ids_with_weather(Weather w) const {
  std::vector<std::string> out;
  for (const auto& s : sequences)
    if (s.weather == w) out.push_back(s.id);
  return out;
}

namespace {

std::string resolve_path(const fs::path& base_dir, const std::string& rel) {
  fs::path p(rel);
  return p.is_absolute() ? p.string() : (base_dir / p).string();
}

SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::string& id) {
  SynthSpec spec;
  if (!j.contains("segments") || !j["segments"].is_array() || j["segments"].empty())
    fail(ErrorKind::parse, "sequence '" + id + "': synthetic entry needs segments");
  for (const auto& s : j["segments"]) {
    SynthSegment seg;
    seg.length = s.at("length").get<double>();
    seg.speed = s.at("speed").get<double>();
    if (s.contains("turn_deg")) {
      seg.turn = s["turn_deg"].get<double>() * std::numbers::pi / 180.0;
    } else if (s.contains("turn_rad")) {
      seg.turn = s["turn_rad"].get<double>();
    }
    spec.segments.push_back(seg);
  }
  spec.clutter_fraction = j.value("clutter_fraction", 0.0);
  spec.noise_sigma = j.value("noise_sigma", 0.0);
  spec.points_per_frame = j.value("points_per_frame", 0);
  return spec;
}

}  // namespace

SamplePool build_pool(const std::string& manifest_path) {
  std::string text = read_text_file(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, manifest_path + ": " + e.what());
  }

  if (!j.contains("sequences") || !j["sequences"].is_array() || j["sequences"].empty())
    fail(ErrorKind::parse, manifest_path + ": manifest has no sequences");

  fs::path base_dir = fs::path(manifest_path).parent_path();
  SamplePool pool;
  pool.manifest_path = manifest_path;
  std::set<std::string> seen;

  try {
    for (const auto& entry : j["sequences"]) {
      if (!entry.contains("id") || !entry["id"].is_string())
        fail(ErrorKind::parse, manifest_path + ": sequence entry without string id");
      std::string id = entry["id"].get<std::string>();
      if (!seen.insert(id).second)
        fail(ErrorKind::parse, manifest_path + ": duplicate sequence id: " + id);

      double frame_rate = entry.value("frame_rate", 10.0);
      if (frame_rate <= 0)
        fail(ErrorKind::parse, "sequence '" + id + "': frame_rate must be positive");
      Weather weather = weather_from_name(entry.value("weather", std::string("general")));

      SequenceRecord rec;
      if (entry.contains("synthetic")) {
        SynthSpec spec = synth_spec_from_json(entry["synthetic"], id);
        spec.frame_rate = frame_rate;
        uint64_t seed = entry["synthetic"].value("seed", hash_string(id));
        rec = synth_sequence(spec, seed, id);
      } else {
        if (!entry.contains("pose_file"))
          fail(ErrorKind::parse, "sequence '" + id + "': pose_file is required");
        std::string pose_path = resolve_path(base_dir, entry["pose_file"].get<std::string>());
        if (!fs::exists(pose_path))
          fail(ErrorKind::io, "sequence '" + id + "': missing pose file: " + pose_path);

        rec.id = id;
        rec.gt_poses = load_pose_file(pose_path);
        // Re-anchor at the first frame; relative poses are unaffected.
        Vec3 origin = rec.gt_poses.front().translation;
        for (Pose& p : rec.gt_poses) p.translation -= origin;
        rec.positions.reserve(rec.gt_poses.size());
        for (const Pose& p : rec.gt_poses) rec.positions.push_back(p.translation);

        if (entry.contains("cloud_dir")) {
          std::string dir = resolve_path(base_dir, entry["cloud_dir"].get<std::string>());
          auto source = make_directory_cloud_source(dir);
          if (source->frame_count() != static_cast<int>(rec.gt_poses.size())) {
            fail(ErrorKind::parse,
                 "sequence '" + id + "': " + std::to_string(source->frame_count()) +
                     " clouds but " + std::to_string(rec.gt_poses.size()) + " poses");
          }
          rec.clouds = source;
        }
      }
      rec.frame_rate = frame_rate;
      rec.weather = weather;
      pool.sequences.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, manifest_path + ": " + e.what());
  }
  return pool;
}

}  // namespace activelo
