#include "activelo/predictor.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include "activelo/kdtree.hpp"
#include "activelo/rng.hpp"
#include "activelo/util.hpp"

namespace activelo {

Pose checked_predict(const Predictor& predictor, const PredictRequest& req) {
  if (!req.source || !req.target)
    fail(ErrorKind::invalid_argument, "predict: request has no clouds");
  Pose p = predictor.predict(req);
  if (!p.translation.allFinite() || !p.rotation.allFinite() ||
      !is_valid_rotation(p.rotation, 1e-6)) {
    fail(ErrorKind::numeric, "predictor '" + predictor.info().name +
                                 "' returned an invalid pose for pair " +
                                 req.key.sequence_id + ":" +
                                 std::to_string(req.key.source_frame) + "->" +
                                 std::to_string(req.key.target_frame));
  }
  return p;
}

// -------------------- normals

NormalField estimate_normals(const PointCloud& cloud, int k_neighbors) {
  if (k_neighbors < 3)
    fail(ErrorKind::invalid_argument, "estimate_normals: need at least 3 neighbors");
  NormalField field;
  size_t n = cloud.size();
  field.normals.assign(n, Vec3::Zero());
  field.valid.assign(n, 0);
  if (n < 3) return field;

  KdTree tree(cloud.points);
  int k = std::min<int>(k_neighbors, static_cast<int>(n));
  for (size_t i = 0; i < n; ++i) {
    auto hits = tree.knn(cloud.points[i], k);
    Vec3 mean = Vec3::Zero();
    for (const auto& h : hits) mean += cloud.points[h.index];
    mean /= static_cast<double>(hits.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& h : hits) {
      Vec3 d = cloud.points[h.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(hits.size());

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    double l_max = eig.eigenvalues()(2);
    double l_mid = eig.eigenvalues()(1);
    // A surface needs two spread directions; collinear neighborhoods have none.
    if (!(l_max > 0) || l_mid / l_max < 1e-4) continue;

    Vec3 normal = eig.eigenvectors().col(0);
    if (normal.dot(cloud.points[i]) > 0) normal = -normal;
    field.normals[i] = normal;
    field.valid[i] = 1;
  }
  return field;
}

// -------------------- voxel filter

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (voxel <= 0) return cloud;
  PointCloud out;
  out.frame_index = cloud.frame_index;
  std::set<std::array<int64_t, 3>> seen;
  bool intensity = cloud.has_intensity();
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    std::array<int64_t, 3> key = {static_cast<int64_t>(std::floor(p.x() / voxel)),
                                  static_cast<int64_t>(std::floor(p.y() / voxel)),
                                  static_cast<int64_t>(std::floor(p.z() / voxel))};
    if (!seen.insert(key).second) continue;
    out.points.push_back(p);
    if (intensity) out.intensity.push_back(cloud.intensity[i]);
  }
  return out;
}

// -------------------- ICP

namespace {

Mat3 so3_exp(const Vec3& w) {
  double theta = w.norm();
  if (theta < 1e-12) {
    Mat3 skew;
    skew << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    return Mat3::Identity() + skew;
  }
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

struct NormalSystem {
  Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
  double sse = 0.0;
  int accepted = 0;
};

NormalSystem build_system(const PointCloud& source, const PointCloud& target,
                          const KdTree& tree, const NormalField& normals,
                          const Pose& pose, double gate, bool with_system) {
  NormalSystem sys;
  double gate_sq = gate * gate;
  for (const Vec3& p : source.points) {
    Vec3 moved = pose.rotation * p + pose.translation;
    KdTree::Hit hit = tree.nearest(moved);
    if (hit.distance * hit.distance > gate_sq) continue;
    if (!normals.valid[hit.index]) continue;
    const Vec3& n = normals.normals[hit.index];
    double r = n.dot(moved - target.points[hit.index]);
    sys.sse += r * r;
    ++sys.accepted;
    if (with_system) {
      Eigen::Matrix<double, 6, 1> j;
      j.head<3>() = moved.cross(n);
      j.tail<3>() = n;
      sys.H += j * j.transpose();
      sys.g += j * r;
    }
  }
  return sys;
}

double system_rms(const NormalSystem& sys) {
  if (sys.accepted < 6)
    fail(ErrorKind::numeric,
         "icp: degenerate normal system, only " + std::to_string(sys.accepted) +
             " accepted correspondences");
  return std::sqrt(sys.sse / sys.accepted);
}

}  // namespace

Pose icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                        const Pose& init, const IcpParams& params,
                        std::vector<double>* rms_trace) {
  const PointCloud* src = &source;
  const PointCloud* tgt = &target;
  PointCloud src_filtered, tgt_filtered;
  if (params.voxel > 0) {
    src_filtered = voxel_downsample(source, params.voxel);
    tgt_filtered = voxel_downsample(target, params.voxel);
    src = &src_filtered;
    tgt = &tgt_filtered;
  }
  if (src->size() == 0 || tgt->size() == 0)
    fail(ErrorKind::invalid_argument, "icp: empty cloud");

  KdTree tree(tgt->points);
  NormalField normals = estimate_normals(*tgt, params.k_neighbors);

  Pose pose = init;
  NormalSystem sys = build_system(*src, *tgt, tree, normals, pose, params.gate, true);
  double rms = system_rms(sys);
  if (rms_trace) rms_trace->push_back(rms);

  for (int iter = 0; iter < params.max_iters; ++iter) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(sys.H);
    double l_min = eig.eigenvalues()(0);
    double l_max = eig.eigenvalues()(5);
    if (!(l_max > 0) || l_min / l_max < 1e-12)
      fail(ErrorKind::numeric, "icp: degenerate normal system, conditioning ratio too small");

    Eigen::Matrix<double, 6, 1> delta = sys.H.ldlt().solve(-sys.g);

    // Fresh-correspondence RMS with step halving keeps the cost non-increasing.
    double scale = 1.0;
    bool accepted_step = false;
    Pose candidate;
    NormalSystem cand_sys;
    double cand_rms = rms;
    for (int halving = 0; halving < 10; ++halving) {
      Vec3 omega = scale * delta.head<3>();
      Vec3 dt = scale * delta.tail<3>();
      Mat3 upd = so3_exp(omega);
      candidate.rotation = orthonormalized(upd * pose.rotation);
      candidate.translation = upd * pose.translation + dt;
      cand_sys = build_system(*src, *tgt, tree, normals, candidate, params.gate, true);
      cand_rms = system_rms(cand_sys);
      if (cand_rms <= rms) {
        accepted_step = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted_step) break;

    double improvement = rms - cand_rms;
    pose = candidate;
    sys = cand_sys;
    rms = cand_rms;
    if (rms_trace) rms_trace->push_back(rms);
    if (improvement < params.tol) break;
  }
  return pose;
}

// -------------------- predictors

OraclePredictor::OraclePredictor(const SamplePool* pool) : pool_(pool) {
  if (!pool_) fail(ErrorKind::invalid_argument, "oracle predictor requires a sample pool");
}

PredictorInfo OraclePredictor::info() const { return {"oracle", true}; }

Pose OraclePredictor::ground_truth(const PredictRequest& req) const {
  const SequenceRecord* seq = pool_->find(req.key.sequence_id);
  if (!seq)
    fail(ErrorKind::invalid_argument,
         "oracle: unknown sequence '" + req.key.sequence_id + "'");
  if (!seq->has_gt())
    fail(ErrorKind::invalid_argument,
         "oracle: sequence '" + req.key.sequence_id + "' has no ground truth");
  int n = seq->frame_count();
  if (req.key.source_frame < 0 || req.key.source_frame >= n ||
      req.key.target_frame < 0 || req.key.target_frame >= n) {
    fail(ErrorKind::invalid_argument,
         "oracle: pair " + std::to_string(req.key.source_frame) + "->" +
             std::to_string(req.key.target_frame) + " out of range for '" +
             req.key.sequence_id + "'");
  }
  Pose rel = compose(invert(seq->gt_poses[req.key.target_frame]),
                     seq->gt_poses[req.key.source_frame]);
  if (req.augmentation) rel = compose(*req.augmentation, rel);
  return rel;
}

Pose OraclePredictor::predict(const PredictRequest& req) const {
  return ground_truth(req);
}

NoisyOraclePredictor::NoisyOraclePredictor(const SamplePool* pool, double sigma_rot,
                                           double sigma_trans, uint64_t seed)
    : OraclePredictor(pool), sigma_rot_(sigma_rot), sigma_trans_(sigma_trans),
      seed_(seed) {
  if (sigma_rot < 0 || sigma_trans < 0)
    fail(ErrorKind::invalid_argument, "noisy oracle: sigmas must be non-negative");
}

PredictorInfo NoisyOraclePredictor::info() const {
  std::ostringstream name;
  name << "noisy(" << sigma_rot_ << "," << sigma_trans_ << ")";
  return {name.str(), true};
}

Pose NoisyOraclePredictor::predict(const PredictRequest& req) const {
  Pose clean = ground_truth(req);
  uint64_t s = mix_seed(seed_, hash_string(req.key.sequence_id));
  s = mix_seed(s, static_cast<uint64_t>(req.key.source_frame));
  s = mix_seed(s, static_cast<uint64_t>(req.augmentation_index + 1));
  Rng rng(s);
  // The draw order is fixed so every noise level consumes the same stream.
  Vec3 axis = rng.unit_vector();
  double angle = std::abs(rng.normal(sigma_rot_));
  Vec3 dt(rng.normal(sigma_trans_), rng.normal(sigma_trans_), rng.normal(sigma_trans_));
  Pose noise;
  noise.rotation = so3_exp(axis * angle);
  noise.translation = dt;
  return compose(noise, clean);
}

IcpPredictor::IcpPredictor(const IcpParams& params) : params_(params) {}

PredictorInfo IcpPredictor::info() const { return {"icp", true}; }

Pose IcpPredictor::predict(const PredictRequest& req) const {
  if (!req.source || !req.target)
    fail(ErrorKind::invalid_argument, "icp: request has no clouds");
  return icp_point_to_plane(*req.source, *req.target, Pose::identity(), params_);
}

PredictorSpec parse_predictor_spec(const std::string& text) {
  PredictorSpec spec;
  if (text == "icp" || text == "oracle") {
    spec.kind = text;
    return spec;
  }
  const std::string prefix = "noisy:";
  if (text.rfind(prefix, 0) == 0) {
    spec.kind = "noisy";
    std::string args = text.substr(prefix.size());
    size_t comma = args.find(',');
    if (comma == std::string::npos)
      fail(ErrorKind::parse, "predictor spec '" + text +
                                 "': expected noisy:<sigma_rot>,<sigma_trans>");
    try {
      size_t used = 0;
      spec.sigma_rot = std::stod(args.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing");
      std::string rest = args.substr(comma + 1);
      spec.sigma_trans = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorKind::parse, "predictor spec '" + text + "': bad sigma values");
    }
    if (spec.sigma_rot < 0 || spec.sigma_trans < 0)
      fail(ErrorKind::parse, "predictor spec '" + text + "': sigmas must be non-negative");
    return spec;
  }
  fail(ErrorKind::parse, "unknown predictor '" + text +
                             "'; expected icp, oracle, or noisy:<sigma_rot>,<sigma_trans>");
}

std::shared_ptr<const Predictor> make_predictor(const PredictorSpec& spec,
                                                const SamplePool* pool, uint64_t seed,
                                                const IcpParams& icp) {
  if (spec.kind == "icp") return std::make_shared<IcpPredictor>(icp);
  if (spec.kind == "oracle") return std::make_shared<OraclePredictor>(pool);
  if (spec.kind == "noisy")
    return std::make_shared<NoisyOraclePredictor>(pool, spec.sigma_rot, spec.sigma_trans,
                                                  seed);
  fail(ErrorKind::invalid_argument, "unknown predictor kind '" + spec.kind + "'");
}

}  // namespace activelo
