#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "activelo/geom.hpp"
#include "activelo/ingest.hpp"
#include "activelo/predictor.hpp"

namespace activelo {

// Perturbation draws around an expected relative pose. Each axis gets its own
// spread proportional to the expected motion on that axis, floored so that
// near-zero components still move.
struct AugmentationConfig {
  int count = 8;
  double alpha = 0.1;
  double floor_trans = 0.02;  // meters
  double floor_rot = 0.005;   // radians
  uint64_t seed = 0;
};

// Deterministic given (expected, cfg, pair_seed); the draw order per
// augmentation is x, y, z, roll, pitch, yaw.
std::vector<Pose> sample_augmentations(const Pose& expected, const AugmentationConfig& cfg,
                                       uint64_t pair_seed);

// Undoes a perturbation of the target frame: the prediction made against the
// perturbed target, mapped back to the unperturbed pair.
Pose recover_pose(const Pose& augmentation, const Pose& predicted);

// Mean squared deviation of translations from their mean.
double translation_variance(const std::vector<Pose>& recovered);

// Mean squared geodesic distance of rotations from their Euler-mean rotation.
double rotation_variance(const std::vector<Pose>& recovered);

// Mean |n . (p' - q)| over gated correspondences with valid target normals.
// Throws ErrorKind::numeric when nothing is accepted.
double scene_recon_loss(const Pose& predicted, const PointCloud& source,
                        const PointCloud& target, const NormalField& target_normals,
                        double gate);

// Variance of the recovered poses; augmentations whose prediction failed are
// dropped, and fewer than two survivors is an error.
double prediction_inconsistency(const std::vector<Pose>& recovered);

struct PairMetrics {
  double recon = 0.0;
  double incon = 0.0;
  int augmentations_used = 0;
};

struct AisConfig {
  int h = 5;                // sequences admitted per round
  int iterations = 6;
  double w_recon = 0.5;
  double w_incon = 0.5;
  bool normalize = true;    // min-max across the remaining pool each round
  int stride = 1;           // evaluate every stride-th consecutive pair
  double recon_gate = 1.0;
  int normal_k = 10;
  double voxel = 0.3;       // applied once here, not inside the predictor
  AugmentationConfig aug;
  int workers = 0;          // 0 = all hardware threads
};

// Both losses for one consecutive pair (frame, frame+1). One unperturbed
// prediction is shared: it scores reconstruction and centers the perturbation
// draws.
PairMetrics evaluate_pair(const Predictor& predictor, const SequenceRecord& seq,
                          int frame, const AisConfig& cfg);

struct SequenceLossReport {
  std::string id;
  double recon = 0.0;       // mean over evaluated pairs
  double incon = 0.0;
  double loss_raw = 0.0;    // w_recon * recon + w_incon * incon
  double loss = 0.0;        // normalized at round scope when enabled
  int pairs = 0;
  int pairs_failed = 0;
};

// Means over the sequence's evaluated pairs. Pairs that fail numerically are
// skipped and counted; a sequence with no usable pair is an error.
SequenceLossReport sequence_loss(const Predictor& predictor, const SequenceRecord& seq,
                                 const AisConfig& cfg);

// Losses for every id in `remaining` (parallel across sequences), then the
// round-scope normalization that fills `loss`.
std::vector<SequenceLossReport> evaluate_remaining(const Predictor& predictor,
                                                   const SamplePool& pool,
                                                   const std::vector<std::string>& remaining,
                                                   const AisConfig& cfg);

// Top h report ids by (loss descending, id ascending).
std::vector<std::string> select_increment(const std::vector<SequenceLossReport>& reports,
                                          int h);

struct RoundReport {
  int round = 0;  // 1-based
  std::vector<SequenceLossReport> losses;  // remaining pool, evaluation order
  std::vector<std::string> admitted;       // rank order
};

struct AisResult {
  std::vector<RoundReport> rounds;
  std::vector<std::string> selected;  // admission order
  std::vector<int> selected_round;    // parallel to selected; 0 = initial set
};

// Returns the predictor to use for a round, given everything admitted so far.
// Stands in for retraining between rounds; round is 1-based.
using TrainingHook =
    std::function<std::shared_ptr<const Predictor>(int round, const std::vector<std::string>& selected)>;

// Iterative admission: each round trains via the hook, scores the remaining
// pool, and admits the top h. Stops early when the pool is exhausted.
AisResult run_active_loop(const SamplePool& pool, const std::vector<std::string>& initial,
                          const AisConfig& cfg, const TrainingHook& train);

}  // namespace activelo
