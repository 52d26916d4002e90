#include "activelo/ais.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "activelo/kdtree.hpp"
#include "activelo/rng.hpp"
#include "activelo/util.hpp"

namespace activelo {

std::vector<Pose> sample_augmentations(const Pose& expected, const AugmentationConfig& cfg,
                                       uint64_t pair_seed) {
  if (cfg.count < 0)
    fail(ErrorKind::invalid_argument, "augmentation count must be non-negative");
  if (cfg.alpha < 0 || cfg.floor_trans < 0 || cfg.floor_rot < 0)
    fail(ErrorKind::invalid_argument, "augmentation spreads must be non-negative");

  EulerAngles e = rotation_to_euler(expected.rotation);
  double sx = std::max(cfg.alpha * std::abs(expected.translation.x()), cfg.floor_trans);
  double sy = std::max(cfg.alpha * std::abs(expected.translation.y()), cfg.floor_trans);
  double sz = std::max(cfg.alpha * std::abs(expected.translation.z()), cfg.floor_trans);
  double sr = std::max(cfg.alpha * std::abs(e.roll), cfg.floor_rot);
  double sp = std::max(cfg.alpha * std::abs(e.pitch), cfg.floor_rot);
  double sw = std::max(cfg.alpha * std::abs(e.yaw), cfg.floor_rot);

  Rng rng(pair_seed);
  std::vector<Pose> augs;
  augs.reserve(cfg.count);
  for (int k = 0; k < cfg.count; ++k) {
    Vec3 dt(rng.normal(sx), rng.normal(sy), rng.normal(sz));
    EulerAngles de{rng.normal(sr), rng.normal(sp), rng.normal(sw)};
    Pose a;
    a.rotation = euler_to_rotation(de);
    a.translation = dt;
    augs.push_back(a);
  }
  return augs;
}

Pose recover_pose(const Pose& augmentation, const Pose& predicted) {
  // R = aug_R^T * pred_R, t = aug_R^T * (pred_t - aug_t).
  return compose(invert(augmentation), predicted);
}

double translation_variance(const std::vector<Pose>& recovered) {
  if (recovered.empty())
    fail(ErrorKind::invalid_argument, "translation_variance: empty pose list");
  Vec3 mean = Vec3::Zero();
  for (const Pose& p : recovered) mean += p.translation;
  mean /= static_cast<double>(recovered.size());
  double var = 0.0;
  for (const Pose& p : recovered) var += (p.translation - mean).squaredNorm();
  return var / static_cast<double>(recovered.size());
}

double rotation_variance(const std::vector<Pose>& recovered) {
  if (recovered.empty())
    fail(ErrorKind::invalid_argument, "rotation_variance: empty pose list");
  std::vector<Mat3> rotations;
  rotations.reserve(recovered.size());
  for (const Pose& p : recovered) rotations.push_back(p.rotation);
  Mat3 mean = mean_rotation(rotations);
  double var = 0.0;
  for (const Mat3& r : rotations) {
    double d = geodesic_distance(mean, r);
    var += d * d;
  }
  return var / static_cast<double>(rotations.size());
}

double scene_recon_loss(const Pose& predicted, const PointCloud& source,
                        const PointCloud& target, const NormalField& target_normals,
                        double gate) {
  if (target.size() == 0 || source.size() == 0)
    fail(ErrorKind::invalid_argument, "reconstruction loss: empty cloud");
  if (static_cast<int>(target_normals.normals.size()) != target.size())
    fail(ErrorKind::invalid_argument, "reconstruction loss: normals do not match target");
  KdTree tree(target.points);
  double gate_sq = gate * gate;
  double sum = 0.0;
  int accepted = 0;
  for (const Vec3& p : source.points) {
    Vec3 moved = predicted.rotation * p + predicted.translation;
    KdTree::Hit hit = tree.nearest(moved);
    if (hit.distance * hit.distance > gate_sq) continue;
    if (!target_normals.valid[hit.index]) continue;
    sum += std::abs(target_normals.normals[hit.index].dot(moved - target.points[hit.index]));
    ++accepted;
  }
  if (accepted == 0)
    fail(ErrorKind::numeric, "reconstruction loss: no accepted correspondences");
  return sum / accepted;
}

double prediction_inconsistency(const std::vector<Pose>& recovered) {
  if (recovered.size() < 2)
    fail(ErrorKind::numeric, "prediction inconsistency needs at least 2 recovered poses, got " +
                                 std::to_string(recovered.size()));
  return rotation_variance(recovered) + translation_variance(recovered);
}

PairMetrics evaluate_pair(const Predictor& predictor, const SequenceRecord& seq,
                          int frame, const AisConfig& cfg) {
  if (!seq.clouds)
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' has no clouds");
  if (frame < 0 || frame + 1 >= seq.clouds->frame_count())
    fail(ErrorKind::invalid_argument,
         "pair " + std::to_string(frame) + "->" + std::to_string(frame + 1) +
             " out of range for '" + seq.id + "'");
  if (cfg.aug.count < 2)
    fail(ErrorKind::invalid_argument, "need at least 2 augmentations per pair");

  PointCloud source = voxel_downsample(*seq.clouds->frame(frame), cfg.voxel);
  PointCloud target = voxel_downsample(*seq.clouds->frame(frame + 1), cfg.voxel);
  NormalField normals = estimate_normals(target, cfg.normal_k);

  PairKey key{seq.id, frame, frame + 1};
  PredictRequest base{&source, &target, key, nullptr, -1};
  Pose expected = checked_predict(predictor, base);

  PairMetrics m;
  m.recon = scene_recon_loss(expected, source, target, normals, cfg.recon_gate);

  uint64_t pair_seed = mix_seed(mix_seed(cfg.aug.seed, hash_string(seq.id)),
                                static_cast<uint64_t>(frame));
  std::vector<Pose> augs = sample_augmentations(expected, cfg.aug, pair_seed);
  std::vector<Pose> recovered;
  recovered.reserve(augs.size());
  for (size_t k = 0; k < augs.size(); ++k) {
    PointCloud aug_target = transform_cloud(augs[k], target);
    PredictRequest req{&source, &aug_target, key, &augs[k], static_cast<int>(k)};
    try {
      recovered.push_back(recover_pose(augs[k], checked_predict(predictor, req)));
    } catch (const Error&) {
      // A failed perturbation drops out; the survivor count is reported.
    }
  }
  m.incon = prediction_inconsistency(recovered);
  m.augmentations_used = static_cast<int>(recovered.size());
  return m;
}

SequenceLossReport sequence_loss(const Predictor& predictor, const SequenceRecord& seq,
                                 const AisConfig& cfg) {
  if (cfg.stride < 1) fail(ErrorKind::invalid_argument, "pair stride must be at least 1");
  if (!seq.clouds)
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' has no clouds");
  if (seq.clouds->frame_count() < 2)
    fail(ErrorKind::invalid_argument, "sequence '" + seq.id + "' has fewer than 2 frames");

  SequenceLossReport rep;
  rep.id = seq.id;
  for (int i = 0; i + 1 < seq.clouds->frame_count(); i += cfg.stride) {
    try {
      PairMetrics m = evaluate_pair(predictor, seq, i, cfg);
      rep.recon += m.recon;
      rep.incon += m.incon;
      ++rep.pairs;
    } catch (const Error& e) {
      ++rep.pairs_failed;
      log_warn("sequence '" + seq.id + "' pair " + std::to_string(i) + "->" +
               std::to_string(i + 1) + " skipped: " + e.what());
    }
  }
  if (rep.pairs == 0)
    fail(ErrorKind::numeric, "sequence '" + seq.id + "': no usable pairs");
  rep.recon /= rep.pairs;
  rep.incon /= rep.pairs;
  rep.loss_raw = cfg.w_recon * rep.recon + cfg.w_incon * rep.incon;
  rep.loss = rep.loss_raw;
  return rep;
}

std::vector<SequenceLossReport> evaluate_remaining(const Predictor& predictor,
                                                   const SamplePool& pool,
                                                   const std::vector<std::string>& remaining,
                                                   const AisConfig& cfg) {
  std::vector<SequenceLossReport> reports(remaining.size());
  parallel_for(static_cast<int>(remaining.size()), cfg.workers, [&](int i) {
    const SequenceRecord* seq = pool.find(remaining[i]);
    if (!seq)
      fail(ErrorKind::invalid_argument, "unknown sequence id '" + remaining[i] + "'");
    reports[i] = sequence_loss(predictor, *seq, cfg);
  });

  if (cfg.normalize && !reports.empty()) {
    auto span_of = [&](auto get) {
      double lo = get(reports[0]), hi = lo;
      for (const auto& r : reports) {
        lo = std::min(lo, get(r));
        hi = std::max(hi, get(r));
      }
      return std::pair<double, double>(lo, hi - lo);
    };
    auto [recon_lo, recon_span] = span_of([](const SequenceLossReport& r) { return r.recon; });
    auto [incon_lo, incon_span] = span_of([](const SequenceLossReport& r) { return r.incon; });
    for (auto& r : reports) {
      double nr = recon_span > 0 ? (r.recon - recon_lo) / recon_span : 0.0;
      double ni = incon_span > 0 ? (r.incon - incon_lo) / incon_span : 0.0;
      r.loss = cfg.w_recon * nr + cfg.w_incon * ni;
    }
  }
  return reports;
}

std::vector<std::string> select_increment(const std::vector<SequenceLossReport>& reports,
                                          int h) {
  if (h < 1) fail(ErrorKind::invalid_argument, "per-round admission count must be at least 1");
  std::vector<const SequenceLossReport*> order;
  order.reserve(reports.size());
  for (const auto& r : reports) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const SequenceLossReport* a, const SequenceLossReport* b) {
              return a->loss > b->loss || (a->loss == b->loss && a->id < b->id);
            });
  std::vector<std::string> admitted;
  for (int i = 0; i < h && i < static_cast<int>(order.size()); ++i)
    admitted.push_back(order[i]->id);
  return admitted;
}

AisResult run_active_loop(const SamplePool& pool, const std::vector<std::string>& initial,
                          const AisConfig& cfg, const TrainingHook& train) {
  if (initial.empty())
    fail(ErrorKind::invalid_argument, "active selection needs a non-empty initial set");
  if (cfg.iterations < 0)
    fail(ErrorKind::invalid_argument, "iteration count must be non-negative");
  if (!train) fail(ErrorKind::invalid_argument, "active selection needs a training hook");

  std::set<std::string> taken;
  for (const std::string& id : initial) {
    if (!pool.find(id))
      fail(ErrorKind::invalid_argument, "initial selection: unknown sequence id '" + id + "'");
    if (!taken.insert(id).second)
      fail(ErrorKind::invalid_argument, "initial selection: duplicate sequence id '" + id + "'");
  }

  AisResult res;
  res.selected = initial;
  res.selected_round.assign(initial.size(), 0);

  std::vector<std::string> remaining;
  for (const std::string& id : pool.ids())
    if (!taken.count(id)) remaining.push_back(id);

  for (int round = 1; round <= cfg.iterations; ++round) {
    if (remaining.empty()) break;
    std::shared_ptr<const Predictor> predictor = train(round, res.selected);
    if (!predictor) fail(ErrorKind::internal, "training hook returned no predictor");

    RoundReport rr;
    rr.round = round;
    rr.losses = evaluate_remaining(*predictor, pool, remaining, cfg);
    rr.admitted = select_increment(rr.losses, cfg.h);

    for (const std::string& id : rr.admitted) {
      res.selected.push_back(id);
      res.selected_round.push_back(round);
      taken.insert(id);
    }
    std::vector<std::string> next;
    next.reserve(remaining.size());
    for (const std::string& id : remaining)
      if (!taken.count(id)) next.push_back(id);
    remaining.swap(next);

    res.rounds.push_back(std::move(rr));
  }
  return res;
}

}  // namespace activelo
