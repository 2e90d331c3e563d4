#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dmst/core.hpp"

namespace dmst {

struct EvalBox {
  std::int64_t id = 0;
  BBox box;
};

// One scoring cell: ground truth vs hypothesis boxes. `frame` is an opaque
// key; multi-sensor evaluation pools cells keyed by (sensor, frame).
struct EvalFrame {
  std::int64_t frame = 0;
  std::vector<EvalBox> gt;
  std::vector<EvalBox> hyp;
};

struct MotScore {
  double mota = 0, motp = 0;
  std::int64_t fp = 0, fn = 0, ids = 0;
  double idf1 = 0, idp = 0, idr = 0;
};

// CLEAR MOT: per-frame minimum-cost matching on (1 - IoU) gated at the
// threshold, with the previous frame's correspondences carried over while
// still valid. MOTA = 1 - (FP+FN+IDS)/total_gt, MOTP = mean IoU of matches.
MotScore clear_mot(std::vector<EvalFrame> frames, double iou_threshold = 0.5);

struct IdentityScore {
  double idf1 = 0, idp = 0, idr = 0;
};

// Trajectory-level identity scores: one global maximum-overlap matching
// between ground-truth and hypothesis trajectories over the whole sequence.
IdentityScore identity_scores(std::vector<EvalFrame> frames, double iou_threshold = 0.5);

// clear_mot with the identity fields filled in.
MotScore evaluate_frames(std::vector<EvalFrame> frames, double iou_threshold = 0.5);

enum class GalleryMode { Full, Average, RandomBins, OrientationBins };

struct ReidRecord {
  std::int64_t id = 0;
  Eigen::VectorXd feature;
  double ratio = 0;  // S2T ratio; NaN when keypoints were unusable
};

struct Rank1Result {
  double accuracy = 0;
  std::int64_t gallery_features = 0;  // features stored after the mode transform
};

// Rank-1 re-ID accuracy under a gallery transform: Full keeps everything,
// Average keeps one mean per identity, RandomBins splits each identity's
// features into two random halves, OrientationBins keeps one mean per
// (identity, S2T k-means bin). Queries are matched by nearest neighbor in
// feature space.
Rank1Result rank1(const std::vector<ReidRecord>& gallery,
                  const std::vector<ReidRecord>& queries, GalleryMode mode, int L,
                  std::uint64_t seed);

}  // namespace dmst
