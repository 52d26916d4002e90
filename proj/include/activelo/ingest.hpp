#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "activelo/geom.hpp"

namespace activelo {

// Absolute poses, one per line: 12 floats, the row-major top 3x4 of the
// homogeneous world-from-frame transform. Rotations with orthonormality
// drift above 1e-6 are re-orthonormalized; above 1e-2 the line is rejected.
std::vector<Pose> load_pose_file(const std::string& path);

// 9 significant digits per value; load(save(x)) then save again is
// byte-identical.
void save_pose_file(const std::string& path, const std::vector<Pose>& poses);

struct CloudLoadResult {
  PointCloud cloud;
  size_t dropped_nan = 0;
};

// Binary records of little-endian float32 x, y, z, intensity. Points with a
// non-finite coordinate are dropped and counted.
CloudLoadResult load_point_cloud(const std::string& path);
void save_point_cloud(const std::string& path, const PointCloud& cloud);

// Lazily resolves frame index -> cloud. Implementations are internally
// synchronized and safe for concurrent readers.
class CloudSource {
 public:
  virtual ~CloudSource() = default;
  virtual int frame_count() const = 0;
  virtual std::shared_ptr<const PointCloud> frame(int index) const = 0;
};

class VectorCloudSource : public CloudSource {
 public:
  explicit VectorCloudSource(std::vector<PointCloud> frames);
  int frame_count() const override { return static_cast<int>(frames_.size()); }
  std::shared_ptr<const PointCloud> frame(int index) const override;

 private:
  std::vector<std::shared_ptr<const PointCloud>> frames_;
};

// Reads *.bin files from a directory in lexicographic order, with a bounded
// in-memory cache.
std::shared_ptr<CloudSource> make_directory_cloud_source(const std::string& dir,
                                                         int cache_frames = 32);

enum class Weather { general, snowy };

std::string weather_name(Weather w);
Weather weather_from_name(const std::string& name);

struct SequenceRecord {
  std::string id;
  // Origin-normalized: positions[0] == (0,0,0) and positions[i] equals
  // gt_poses[i].translation exactly.
  std::vector<Vec3> positions;
  std::vector<Pose> gt_poses;  // empty when ground truth is absent
  std::shared_ptr<const CloudSource> clouds;  // may be null
  double frame_rate = 10.0;
  Weather weather = Weather::general;

  int frame_count() const { return static_cast<int>(positions.size()); }
  bool has_gt() const { return !gt_poses.empty(); }

  // T mapping frame i coordinates into frame i+1: inv(T_{i+1}) * T_i.
  Pose relative_gt(int i) const;
};

struct SynthSegment {
  double length = 0.0;   // meters
  double speed = 1.0;    // m/s
  double turn = 0.0;     // radians, heading change applied before the segment
};

struct SynthSpec {
  std::vector<SynthSegment> segments;
  double frame_rate = 10.0;
  double clutter_fraction = 0.0;  // in [0, 1)
  double noise_sigma = 0.0;       // meters, per-point Gaussian on structure
  // 0 keeps every structure sample; otherwise the fixed environment is
  // thinned to roughly this many structure points per frame.
  int points_per_frame = 0;
};

// Planar piecewise trajectory through a fixed corridor of planes (ground
// strips and box faces). Structure points are identical world points in
// every frame; clutter is redrawn per frame, so with exact poses clutter is
// the only source of non-matching points. Deterministic given (spec, seed).
SequenceRecord synth_sequence(const SynthSpec& spec, uint64_t seed,
                              const std::string& id = "synthetic");

struct SamplePool {
  std::vector<SequenceRecord> sequences;
  std::string manifest_path;

  const SequenceRecord* find(const std::string& id) const;
  const SequenceRecord& at(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::vector<std::string> ids_with_weather(Weather w) const;
  int size() const { return static_cast<int>(sequences.size()); }
};

// JSON manifest:
//   {"sequences": [
//     {"id": "00", "weather": "general", "frame_rate": 10.0,
//      "pose_file": "poses/00.txt", "cloud_dir": "clouds/00"},
//     {"id": "s1", "weather": "snowy", "frame_rate": 10.0,
//      "synthetic": {"seed": 7, "clutter_fraction": 0.4,
//                    "segments": [{"length": 40, "speed": 4, "turn_deg": 0}]}}
//   ]}
// Paths resolve relative to the manifest directory. Duplicate ids and
// missing files are errors naming the offending sequence.
SamplePool build_pool(const std::string& manifest_path);

}  // namespace activelo
