#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "activelo/ingest.hpp"
#include "activelo/kdtree.hpp"
#include "activelo/rng.hpp"
#include "activelo/util.hpp"
#include "oracles.hpp"

using namespace activelo;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_SUITE("ingest") {

TEST_CASE("pose files stabilize after one save/load cycle") {
  oracle::TempDir tmp("poses");
  Rng rng(31);
  std::vector<Pose> poses;
  for (int i = 0; i < 12; ++i) poses.push_back(oracle::random_pose(rng, 3.0, 40.0));

  std::string path = tmp.str("a.txt");
  save_pose_file(path, poses);
  std::vector<Pose> loaded = load_pose_file(path);
  REQUIRE(loaded.size() == poses.size());
  for (size_t i = 0; i < poses.size(); ++i) {
    CHECK((loaded[i].rotation - poses[i].rotation).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((loaded[i].translation - poses[i].translation).norm() < 1e-6);
    CHECK(is_valid_rotation(loaded[i].rotation, 1e-6));
  }

  // the decimal form is a fixpoint: saving what was loaded changes nothing
  std::string path2 = tmp.str("b.txt");
  save_pose_file(path2, loaded);
  CHECK(read_text_file(path) == read_text_file(path2));
}

TEST_CASE("pose file rejects malformed lines and repairs mild drift") {
  oracle::TempDir tmp("poses-bad");

  std::string short_line = tmp.str("short.txt");
  write_text_file(short_line, "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0\n");
  std::string msg = oracle::thrown_message([&] { load_pose_file(short_line); });
  CHECK(msg.find("line 2") != std::string::npos);

  std::string bad_rot = tmp.str("badrot.txt");
  write_text_file(bad_rot, "1.5 0 0 0 0 1.5 0 0 0 0 1.5 0\n");
  CHECK(oracle::thrown_kind([&] { load_pose_file(bad_rot); }) == ErrorKind::parse);

  // drift around 1e-4 is re-orthonormalized rather than rejected
  std::string drift = tmp.str("drift.txt");
  write_text_file(drift, "1.0001 0 0 2 0 1 0 3 0 0 1 4\n");
  std::vector<Pose> fixed = load_pose_file(drift);
  REQUIRE(fixed.size() == 1);
  CHECK(is_valid_rotation(fixed[0].rotation, 1e-9));
  CHECK(fixed[0].translation == Vec3(2, 3, 4));

  CHECK(oracle::thrown_kind([&] { load_pose_file(tmp.str("absent.txt")); }) == ErrorKind::io);

  std::string empty = tmp.str("empty.txt");
  write_text_file(empty, "\n\n");
  CHECK(oracle::thrown_kind([&] { load_pose_file(empty); }) == ErrorKind::parse);
}

TEST_CASE("point cloud binary round trip drops non-finite points") {
  oracle::TempDir tmp("clouds");
  PointCloud cloud;
  Rng rng(32);
  for (int i = 0; i < 100; ++i) {
    cloud.points.emplace_back(rng.normal(10.0), rng.normal(10.0), rng.normal(2.0));
    cloud.intensity.push_back(static_cast<float>(rng.uniform()));
  }
  std::string path = tmp.str("c.bin");
  save_point_cloud(path, cloud);
  CloudLoadResult r = load_point_cloud(path);
  CHECK(r.dropped_nan == 0);
  REQUIRE(r.cloud.size() == cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    // float32 storage: agreement to single precision
    CHECK((r.cloud.points[i] - cloud.points[i]).norm() < 1e-4);
    CHECK(r.cloud.intensity[i] == cloud.intensity[i]);
  }

  // a second save of the loaded cloud is byte-identical
  std::string path2 = tmp.str("c2.bin");
  save_point_cloud(path2, r.cloud);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  PointCloud with_nan = cloud;
  with_nan.points[7].y() = std::numeric_limits<double>::quiet_NaN();
  save_point_cloud(tmp.str("nan.bin"), with_nan);
  CloudLoadResult rn = load_point_cloud(tmp.str("nan.bin"));
  CHECK(rn.dropped_nan == 1);
  CHECK(rn.cloud.size() == cloud.size() - 1);

  // truncated record
  std::ofstream out(tmp.str("trunc.bin"), std::ios::binary);
  char junk[10] = {};
  out.write(junk, sizeof junk);
  out.close();
  CHECK(oracle::thrown_kind([&] { load_point_cloud(tmp.str("trunc.bin")); }) ==
        ErrorKind::parse);
}

TEST_CASE("directory cloud source orders frames lexicographically and caches") {
  oracle::TempDir tmp("clouddir");
  for (int i = 0; i < 3; ++i) {
    PointCloud c;
    c.points.emplace_back(static_cast<double>(i), 0.0, 0.0);
    char name[32];
    std::snprintf(name, sizeof name, "%06d.bin", i);
    save_point_cloud(tmp.str(name), c);
  }
  auto src = make_directory_cloud_source(tmp.str());
  REQUIRE(src->frame_count() == 3);
  for (int i = 0; i < 3; ++i) {
    auto c = src->frame(i);
    CHECK(c->frame_index == i);
    CHECK(c->points[0].x() == Approx(static_cast<double>(i)));
  }
  CHECK(src->frame(1).get() == src->frame(1).get());  // cached pointer reused
  CHECK_THROWS_AS((void)src->frame(3), Error);
  CHECK_THROWS_AS((void)src->frame(-1), Error);

  CHECK(oracle::thrown_kind([&] { make_directory_cloud_source(tmp.str("nope")); }) ==
        ErrorKind::io);
}

TEST_CASE("synthetic trajectory geometry follows the segment plan") {
  SynthSpec spec;
  spec.frame_rate = 10.0;
  spec.segments = {{20.0, 5.0, 0.0}, {10.0, 2.0, kPi / 2}};
  SequenceRecord rec = synth_sequence(spec, 99, "turny");

  // 20m at 5m/s, 10Hz -> 40 steps; 10m at 2m/s -> 50 steps; plus the origin
  REQUIRE(rec.frame_count() == 1 + 40 + 50);
  CHECK(rec.positions.front() == Vec3::Zero());
  CHECK(rec.positions[40].x() == Approx(20.0).epsilon(1e-12));
  CHECK(rec.positions[40].y() == Approx(0.0).scale(1.0));
  // second leg turns left and ends 10m up in y
  CHECK(rec.positions.back().x() == Approx(20.0).epsilon(1e-9));
  CHECK(rec.positions.back().y() == Approx(10.0).epsilon(1e-9));

  // per-frame step length inside each leg
  CHECK((rec.positions[1] - rec.positions[0]).norm() == Approx(0.5).epsilon(1e-12));
  CHECK((rec.positions[41] - rec.positions[40]).norm() == Approx(0.2).epsilon(1e-12));

  // ground truth carries the positions exactly and yaw follows the heading
  REQUIRE(rec.has_gt());
  for (int i = 0; i < rec.frame_count(); ++i)
    CHECK(rec.gt_poses[i].translation == rec.positions[i]);
  CHECK((rec.gt_poses[10].rotation * Vec3::UnitX() - Vec3::UnitX()).norm() < 1e-12);
  CHECK((rec.gt_poses[50].rotation * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-12);

  // relative pose maps the sensor center where it should land
  Pose rel = rec.relative_gt(3);
  Vec3 in_next = rel.rotation * Vec3::Zero() + rel.translation;
  Vec3 expect = rec.gt_poses[4].rotation.transpose() *
                (rec.positions[3] - rec.positions[4]);
  CHECK((in_next - expect).norm() < 1e-12);
}

TEST_CASE("synthetic clouds: fixed structure, per-frame clutter, exact matches") {
  SynthSpec spec;
  spec.frame_rate = 10.0;
  spec.segments = {{12.0, 3.0, 0.0}};
  spec.clutter_fraction = 0.25;
  spec.points_per_frame = 200;  // below the raw corridor count, so it pins the size

  SequenceRecord a = synth_sequence(spec, 7, "a");
  SequenceRecord b = synth_sequence(spec, 7, "b");
  SequenceRecord c = synth_sequence(spec, 8, "c");

  auto ca = a.clouds->frame(3);
  auto cb = b.clouds->frame(3);
  auto cc = c.clouds->frame(3);

  // same seed -> bitwise identical frames
  REQUIRE(ca->size() == cb->size());
  for (int i = 0; i < ca->size(); ++i) CHECK(ca->points[i] == cb->points[i]);

  // clutter count and intensity split
  const int n_structure = 200;
  long n_clutter = std::lround(0.25 / 0.75 * n_structure);
  REQUIRE(ca->size() == n_structure + n_clutter);
  for (int i = 0; i < n_structure; ++i) CHECK(ca->intensity[i] == 0.7f);
  for (int i = n_structure; i < ca->size(); ++i) CHECK(ca->intensity[i] == 0.2f);

  // different seed shares the structure prefix but not the clutter
  bool clutter_differs = false;
  for (int i = 0; i < n_structure; ++i) CHECK(ca->points[i] == cc->points[i]);
  for (int i = n_structure; i < ca->size(); ++i)
    clutter_differs = clutter_differs || ca->points[i] != cc->points[i];
  CHECK(clutter_differs);

  // structure points are the same world points in every frame: transforming
  // one frame by the true relative pose lands each structure point exactly
  // on its counterpart
  SynthSpec clean = spec;
  clean.clutter_fraction = 0.0;
  SequenceRecord pure = synth_sequence(clean, 7, "pure");
  auto f0 = pure.clouds->frame(0);
  auto f1 = pure.clouds->frame(1);
  Pose rel = pure.relative_gt(0);
  KdTree tree(f1->points);
  for (const Vec3& p : f0->points) {
    Vec3 moved = rel.rotation * p + rel.translation;
    CHECK(tree.nearest(moved).distance < 1e-9);
  }
}

TEST_CASE("synthetic guards reject bad specs") {
  SynthSpec spec;
  spec.segments = {{10.0, 2.0, 0.0}};
  spec.clutter_fraction = 1.0;
  CHECK(oracle::thrown_kind([&] { synth_sequence(spec, 1); }) == ErrorKind::invalid_argument);
  spec.clutter_fraction = 0.0;
  spec.segments.clear();
  CHECK(oracle::thrown_kind([&] { synth_sequence(spec, 1); }) == ErrorKind::invalid_argument);
  spec.segments = {{-5.0, 2.0, 0.0}};
  CHECK(oracle::thrown_kind([&] { synth_sequence(spec, 1); }) == ErrorKind::invalid_argument);
}

TEST_CASE("manifest pool builds from synthetic and pose-file entries") {
  oracle::TempDir tmp("pool");

  // pose-file sequence starting away from the origin
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i) {
    Pose p;
    p.translation = Vec3(100.0 + i, 50.0, 0.0);
    poses.push_back(p);
  }
  save_pose_file(tmp.str("00.txt"), poses);

  std::string manifest = R"({
    "sequences": [
      {"id": "00", "pose_file": "00.txt"},
      {"id": "syn", "weather": "snowy", "frame_rate": 5.0,
       "synthetic": {"seed": 3, "segments": [{"length": 10, "speed": 2, "turn_deg": 90}]}}
    ]
  })";
  write_text_file(tmp.str("manifest.json"), manifest);

  SamplePool pool = build_pool(tmp.str("manifest.json"));
  REQUIRE(pool.size() == 2);
  CHECK(pool.ids() == std::vector<std::string>{"00", "syn"});
  CHECK(pool.ids_with_weather(Weather::general) == std::vector<std::string>{"00"});
  CHECK(pool.ids_with_weather(Weather::snowy) == std::vector<std::string>{"syn"});

  const SequenceRecord& s0 = pool.at("00");
  CHECK(s0.positions.front() == Vec3::Zero());  // re-anchored
  CHECK(s0.positions[1].x() == Approx(1.0));
  CHECK_FALSE(s0.clouds);
  CHECK(s0.frame_rate == 10.0);

  const SequenceRecord& s1 = pool.at("syn");
  CHECK(s1.frame_rate == 5.0);
  CHECK(s1.weather == Weather::snowy);
  // turn_deg 90 turns the whole (single-segment) walk along +y
  CHECK(s1.positions.back().y() == Approx(10.0).epsilon(1e-9));
  CHECK(s1.clouds != nullptr);

  CHECK(pool.find("nope") == nullptr);
  CHECK(oracle::thrown_kind([&] { pool.at("nope"); }) == ErrorKind::invalid_argument);
}

TEST_CASE("manifest errors name the offending sequence") {
  oracle::TempDir tmp("pool-bad");

  write_text_file(tmp.str("dup.json"),
                  R"({"sequences": [
                       {"id": "x", "synthetic": {"segments": [{"length": 5, "speed": 1}]}},
                       {"id": "x", "synthetic": {"segments": [{"length": 5, "speed": 1}]}}]})");
  std::string msg = oracle::thrown_message([&] { build_pool(tmp.str("dup.json")); });
  CHECK(msg.find("duplicate") != std::string::npos);

  write_text_file(tmp.str("missing.json"),
                  R"({"sequences": [{"id": "p", "pose_file": "gone.txt"}]})");
  CHECK(oracle::thrown_kind([&] { build_pool(tmp.str("missing.json")); }) == ErrorKind::io);

  write_text_file(tmp.str("noseq.json"), R"({"sequences": []})");
  CHECK(oracle::thrown_kind([&] { build_pool(tmp.str("noseq.json")); }) == ErrorKind::parse);

  write_text_file(tmp.str("garbage.json"), "{not json");
  CHECK(oracle::thrown_kind([&] { build_pool(tmp.str("garbage.json")); }) == ErrorKind::parse);

  write_text_file(tmp.str("badweather.json"),
                  R"({"sequences": [{"id": "w", "weather": "hail",
                       "synthetic": {"segments": [{"length": 5, "speed": 1}]}}]})");
  CHECK(oracle::thrown_kind([&] { build_pool(tmp.str("badweather.json")); }) ==
        ErrorKind::parse);

  CHECK(oracle::thrown_kind([&] { build_pool(tmp.str("absent.json")); }) == ErrorKind::io);
}

TEST_CASE("cloud_dir frame count must match the pose count") {
  oracle::TempDir tmp("pool-clouds");
  std::vector<Pose> poses(3);
  for (int i = 0; i < 3; ++i) poses[i].translation = Vec3(i, 0, 0);
  save_pose_file(tmp.str("p.txt"), poses);
  std::filesystem::create_directories(tmp.path / "c");
  PointCloud one;
  one.points.emplace_back(0, 0, 0);
  save_point_cloud(tmp.str("c/000000.bin"), one);
  save_point_cloud(tmp.str("c/000001.bin"), one);

  write_text_file(tmp.str("m.json"),
                  R"({"sequences": [{"id": "p", "pose_file": "p.txt", "cloud_dir": "c"}]})");
  std::string msg = oracle::thrown_message([&] { build_pool(tmp.str("m.json")); });
  CHECK(msg.find("2 clouds but 3 poses") != std::string::npos);
  CHECK(msg.find("'p'") != std::string::npos);

  save_point_cloud(tmp.str("c/000002.bin"), one);
  SamplePool pool = build_pool(tmp.str("m.json"));
  REQUIRE(pool.size() == 1);
  CHECK(pool.at("p").clouds->frame_count() == 3);
}

TEST_CASE("weather names round trip") {
  CHECK(weather_name(Weather::general) == "general");
  CHECK(weather_name(Weather::snowy) == "snowy");
  CHECK(weather_from_name("general") == Weather::general);
  CHECK(weather_from_name("snowy") == Weather::snowy);
  CHECK(oracle::thrown_kind([] { weather_from_name("fog"); }) == ErrorKind::parse);
}

}  // TEST_SUITE
