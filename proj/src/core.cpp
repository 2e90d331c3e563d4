#include "dmst/core.hpp"

#include <algorithm>
#include <cmath>

#include "dmst/kv.hpp"

namespace dmst {

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(a.x, b.x);
  const double iy = std::max(a.y, b.y);
  const double ix2 = std::min(a.x + a.w, b.x + b.w);
  const double iy2 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix2 - ix;
  const double ih = iy2 - iy;
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

void validate_detection(const Detection& d, int n_f) {
  if (d.frame < 0) fail(ErrorCode::InvalidConfig, "detection frame must be >= 0");
  if (!(d.bbox.w > 0) || !(d.bbox.h > 0))
    fail(ErrorCode::InvalidConfig, "detection box size must be > 0");
  if (d.embedding.size() != n_f)
    fail(ErrorCode::DimensionMismatch,
         "embedding length " + std::to_string(d.embedding.size()) +
             " != n_f " + std::to_string(n_f));
  for (const Keypoint* k : {&d.keypoints.right_shoulder, &d.keypoints.left_shoulder,
                            &d.keypoints.right_hip, &d.keypoints.left_hip}) {
    if (!(k->c >= 0.0 && k->c <= 1.0))
      fail(ErrorCode::InvalidConfig, "keypoint confidence must be in [0, 1]");
  }
}

const RunConfig& validate_config(const RunConfig& cfg) {
  if (cfg.n_f < 1) fail(ErrorCode::InvalidConfig, "n_f must be >= 1");
  if (cfg.L < 1) fail(ErrorCode::InvalidConfig, "L must be >= 1");
  if (cfg.batch_len < 1) fail(ErrorCode::InvalidConfig, "batch_len must be >= 1");
  if (cfg.n_p < 1) fail(ErrorCode::InvalidConfig, "n_p must be >= 1");
  if (!(cfg.beta > 0)) fail(ErrorCode::InvalidConfig, "beta must be > 0");
  if (!(cfg.gamma > 0)) fail(ErrorCode::InvalidConfig, "gamma must be > 0");
  if (!(cfg.dt > 0)) fail(ErrorCode::InvalidConfig, "dt must be > 0");
  if (!(cfg.new_track_likelihood > 0))
    fail(ErrorCode::InvalidConfig, "new_track_likelihood must be > 0");
  if (cfg.miss_limit < 0) fail(ErrorCode::InvalidConfig, "miss_limit must be >= 0");
  if (!(cfg.cs_threshold >= 0))
    fail(ErrorCode::InvalidConfig, "cs_threshold must be >= 0");
  if (!(cfg.resample_ess_frac > 0 && cfg.resample_ess_frac <= 1))
    fail(ErrorCode::InvalidConfig, "resample_ess_frac must be in (0, 1]");
  for (double q : {cfg.noise.q_pos, cfg.noise.q_vel, cfg.noise.q_box,
                   cfg.noise.r_meas, cfg.noise.p0_pos, cfg.noise.p0_vel,
                   cfg.noise.p0_box}) {
    if (!(q >= 0) || !std::isfinite(q))
      fail(ErrorCode::InvalidConfig, "noise values must be finite and >= 0");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  for (const auto& [key, value] : read_kv_file(path)) {
    if (key == "n_f") cfg.n_f = static_cast<int>(parse_int(value, key));
    else if (key == "L") cfg.L = static_cast<int>(parse_int(value, key));
    else if (key == "batch_len") cfg.batch_len = static_cast<int>(parse_int(value, key));
    else if (key == "n_p") cfg.n_p = static_cast<int>(parse_int(value, key));
    else if (key == "beta") cfg.beta = parse_double(value, key);
    else if (key == "gamma") cfg.gamma = parse_double(value, key);
    else if (key == "dt") cfg.dt = parse_double(value, key);
    else if (key == "new_track_likelihood") cfg.new_track_likelihood = parse_double(value, key);
    else if (key == "miss_limit") cfg.miss_limit = static_cast<int>(parse_int(value, key));
    else if (key == "cs_threshold") cfg.cs_threshold = parse_double(value, key);
    else if (key == "resample_ess_frac") cfg.resample_ess_frac = parse_double(value, key);
    else if (key == "bin_mode") {
      if (value == "uniform") cfg.bin_mode = BinMode::Uniform;
      else if (value == "kmeans") cfg.bin_mode = BinMode::Kmeans;
      else fail(ErrorCode::InvalidConfig, "bin_mode must be 'uniform' or 'kmeans'");
    } else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "use_position") cfg.use_position = parse_int(value, key) != 0;
    else if (key == "q_pos") cfg.noise.q_pos = parse_double(value, key);
    else if (key == "q_vel") cfg.noise.q_vel = parse_double(value, key);
    else if (key == "q_box") cfg.noise.q_box = parse_double(value, key);
    else if (key == "r_meas") cfg.noise.r_meas = parse_double(value, key);
    else if (key == "p0_pos") cfg.noise.p0_pos = parse_double(value, key);
    else if (key == "p0_vel") cfg.noise.p0_vel = parse_double(value, key);
    else if (key == "p0_box") cfg.noise.p0_box = parse_double(value, key);
    else fail(ErrorCode::InvalidConfig, "unknown config key: " + key);
  }
  validate_config(cfg);
  return cfg;
}

std::int64_t self_global_id(int sensor_id, int local_track_id) {
  // Readable composite id; local ids stay far below the multiplier.
  return static_cast<std::int64_t>(sensor_id) * 1000000 + local_track_id;
}

}  // namespace dmst
