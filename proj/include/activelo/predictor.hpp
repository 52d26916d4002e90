#pragma once

#include <memory>
#include <string>
#include <vector>

#include "activelo/cloud.hpp"
#include "activelo/geom.hpp"
#include "activelo/ingest.hpp"

namespace activelo {

// Identifies a (source frame -> target frame) registration task.
struct PairKey {
  std::string sequence_id;
  int source_frame = -1;
  int target_frame = -1;
};

// One prediction task. When `augmentation` is set, `target` has already been
// transformed by it and `augmentation_index` says which perturbation draw this
// is; predictors that look up ground truth need both to answer consistently.
struct PredictRequest {
  const PointCloud* source = nullptr;
  const PointCloud* target = nullptr;
  PairKey key;
  const Pose* augmentation = nullptr;
  int augmentation_index = -1;
};

struct PredictorInfo {
  std::string name;
  bool deterministic = true;
};

// Contract for anything that estimates the pose taking source-frame points
// into the target frame. Implementations must be safe to call concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictorInfo info() const = 0;
  virtual Pose predict(const PredictRequest& req) const = 0;
};

// Runs predict() and validates the result: finite translation and a rotation
// that is orthonormal to 1e-6. Throws ErrorKind::numeric otherwise.
Pose checked_predict(const Predictor& predictor, const PredictRequest& req);

// -------------------- geometry helpers shared by ICP and the loss terms

struct NormalField {
  std::vector<Vec3> normals;
  std::vector<char> valid;
};

// k-NN covariance normals, oriented toward the sensor origin. Points whose
// neighborhood is rank-deficient (collinear or degenerate) are masked invalid.
NormalField estimate_normals(const PointCloud& cloud, int k_neighbors);

// Grid filter keeping the first point seen in each cell, in input order.
// voxel <= 0 returns the cloud unchanged.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

// -------------------- point-to-plane ICP

struct IcpParams {
  int k_neighbors = 10;     // neighborhood for target normals
  double gate = 1.0;        // correspondence distance cutoff (meters)
  int max_iters = 30;
  double tol = 1e-6;        // stop when the RMS improvement falls below this
  double voxel = 0.0;       // optional pre-filter for both clouds
};

// Returns the pose taking source points into the target frame. Monotone in
// the gated RMS point-to-plane residual (step halving on regressions).
// Throws ErrorKind::numeric when the normal system is degenerate.
Pose icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                        const Pose& init, const IcpParams& params = {},
                        std::vector<double>* rms_trace = nullptr);

// -------------------- predictors

// Answers with the ground-truth relative pose (composed with the request's
// augmentation when present). Requires pool sequences with ground truth.
class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(const SamplePool* pool);
  PredictorInfo info() const override;
  Pose predict(const PredictRequest& req) const override;

 protected:
  Pose ground_truth(const PredictRequest& req) const;

 private:
  const SamplePool* pool_;
};

// Oracle with seeded pose noise. The draw stream is keyed by (seed, sequence,
// source frame, augmentation index) so results do not depend on evaluation
// order, and the same draws are consumed at every noise level.
class NoisyOraclePredictor : public OraclePredictor {
 public:
  NoisyOraclePredictor(const SamplePool* pool, double sigma_rot, double sigma_trans,
                       uint64_t seed);
  PredictorInfo info() const override;
  Pose predict(const PredictRequest& req) const override;

 private:
  double sigma_rot_;
  double sigma_trans_;
  uint64_t seed_;
};

class IcpPredictor : public Predictor {
 public:
  explicit IcpPredictor(const IcpParams& params);
  PredictorInfo info() const override;
  Pose predict(const PredictRequest& req) const override;

 private:
  IcpParams params_;
};

// Spec strings: "icp", "oracle", "noisy:<sigma_rot>,<sigma_trans>".
struct PredictorSpec {
  std::string kind;
  double sigma_rot = 0.0;
  double sigma_trans = 0.0;
};

PredictorSpec parse_predictor_spec(const std::string& text);

// Oracle kinds need a pool with ground truth; `seed` feeds the noisy oracle.
std::shared_ptr<const Predictor> make_predictor(const PredictorSpec& spec,
                                                const SamplePool* pool, uint64_t seed,
                                                const IcpParams& icp = {});

}  // namespace activelo
