#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dmst/core.hpp"

namespace dmst {

using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat46 = Eigen::Matrix<double, 4, 6>;

// State layout: [x, vx, y, vy, box_w, box_h] in image-plane pixels.
struct KalmanState {
  Vec6 mean = Vec6::Zero();
  Mat6 cov = Mat6::Identity();
};

// Constant-velocity transition on position, identity on box size; the
// measurement picks out [x, y, box_w, box_h].
struct MotionModel {
  Mat6 A;
  Mat46 C;
  Mat6 Q;
  Mat4 R;
  double dt = 1.0;

  static MotionModel constant_velocity(double dt, const MotionNoise& noise);
};

// Diffuse-velocity initialization from a first measurement.
KalmanState initial_state(const Vec4& z, const MotionNoise& noise);

KalmanState predict(const KalmanState& s, const MotionModel& m);

struct UpdateResult {
  KalmanState state;
  Mat4 innovation_cov;
};

// Standard Kalman update in Joseph form; returns the innovation covariance
// S = C P C^T + R consumed by the Mahalanobis gate. Throws
// SingularInnovation when S's condition number exceeds 1e12.
UpdateResult update(const KalmanState& s, const Vec4& z, const MotionModel& m);

double mahalanobis(const Vec4& z, const KalmanState& s, const MotionModel& m);

// One innovation factorization per track per frame; every detection in the
// frame gates and scores against the same S.
struct InnovationCache {
  Vec4 predicted_z;
  Mat4 S;
  Eigen::LLT<Mat4> llt;

  static InnovationCache make(const KalmanState& s, const MotionModel& m);
  double distance(const Vec4& z) const;
};

BBox box_from_state(const KalmanState& s);

}  // namespace dmst
