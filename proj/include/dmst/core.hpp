#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmst/error.hpp"

namespace dmst {

// Axis-aligned image-plane box: top-left corner plus size, in pixels.
struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
};

double iou(const BBox& a, const BBox& b);

struct Keypoint {
  double x = 0, y = 0;
  double c = 0;  // confidence in [0, 1]
};

struct TorsoKeypoints {
  Keypoint right_shoulder, left_shoulder, right_hip, left_hip;
};

// One observation: where it was seen, what it looks like, and the torso
// keypoints the orientation descriptor is computed from. gt_id is carried
// only for evaluation and never used by the tracker itself.
struct Detection {
  int sensor_id = 0;
  int frame = 0;
  BBox bbox;
  Eigen::VectorXd embedding;
  TorsoKeypoints keypoints;
  std::optional<int> gt_id;

  // Measurement vector consumed by the Kalman filter: box center + size.
  Eigen::Vector4d position_measurement() const {
    return {bbox.cx(), bbox.cy(), bbox.w, bbox.h};
  }
};

void validate_detection(const Detection& d, int n_f);

// [sensor][frame] -> detections of that frame.
using DetectionStreams = std::vector<std::vector<std::vector<Detection>>>;

enum class BinMode { Uniform, Kmeans };

// Motion-model noise levels. Nothing here is learned; all values are plain
// config knobs (see README for the corresponding keys).
struct MotionNoise {
  double q_pos = 1.0;   // process noise, position (px^2)
  double q_vel = 0.25;  // process noise, velocity ((px/frame)^2)
  double q_box = 1.0;   // process noise, box size (px^2)
  double r_meas = 4.0;  // measurement noise, all four components (px^2)
  double p0_pos = 10.0; // initial covariance, position / box size
  double p0_vel = 25.0; // initial covariance, velocity
  double p0_box = 10.0;
};

struct RunConfig {
  int n_f = 128;         // embedding dimension, fixed per run
  int L = 6;             // orientation bin count
  int batch_len = 150;   // frames per fusion cycle (T)
  int n_p = 20;          // particles per sensor
  double beta = 1.0;     // spatial softmin temperature
  double gamma = 1.0;    // appearance softmin temperature
  double dt = 1.0;       // frame interval
  double new_track_likelihood = 0.01;
  int miss_limit = 30;   // consecutive missed frames before termination
  double cs_threshold = 0.8;  // cross-sensor gating distance
  double resample_ess_frac = 0.5;
  BinMode bin_mode = BinMode::Uniform;
  std::uint64_t seed = 0;
  bool use_position = true;  // ablation switch: false = appearance-only association
  MotionNoise noise;
};

// Returns cfg unchanged when every invariant holds; otherwise reports the
// first violated field by name.
const RunConfig& validate_config(const RunConfig& cfg);

RunConfig load_config(const std::string& path);

struct Identity {
  int sensor_id = 0;
  int local_track_id = 0;
  std::optional<std::int64_t> global_id;
};

inline bool same_track(const Identity& a, const Identity& b) {
  return a.sensor_id == b.sensor_id && a.local_track_id == b.local_track_id;
}

// Stable global-id encoding for an unmatched track. Canonical component
// members keep this id when merged, so an id only ever changes by being
// relabeled to a canonical one.
std::int64_t self_global_id(int sensor_id, int local_track_id);

}  // namespace dmst
