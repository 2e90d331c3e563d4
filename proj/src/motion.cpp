#include "dmst/motion.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace dmst {

namespace {

constexpr double kMaxCondition = 1e12;

Mat4 checked_innovation(const KalmanState& s, const MotionModel& m) {
  Mat4 S = m.C * s.cov * m.C.transpose() + m.R;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Mat4> es(S);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0) || hi / lo > kMaxCondition)
    fail(ErrorCode::SingularInnovation, "innovation covariance is not invertible");
  return S;
}

}  // namespace

MotionModel MotionModel::constant_velocity(double dt, const MotionNoise& noise) {
  MotionModel m;
  m.dt = dt;
  m.A = Mat6::Identity();
  m.A(0, 1) = dt;
  m.A(2, 3) = dt;
  m.C = Mat46::Zero();
  m.C(0, 0) = 1;
  m.C(1, 2) = 1;
  m.C(2, 4) = 1;
  m.C(3, 5) = 1;
  m.Q = Mat6::Zero();
  m.Q.diagonal() << noise.q_pos, noise.q_vel, noise.q_pos, noise.q_vel,
      noise.q_box, noise.q_box;
  m.R = noise.r_meas * Mat4::Identity();
  return m;
}

KalmanState initial_state(const Vec4& z, const MotionNoise& noise) {
  KalmanState s;
  s.mean << z(0), 0, z(1), 0, z(2), z(3);
  s.cov = Mat6::Zero();
  s.cov.diagonal() << noise.p0_pos, noise.p0_vel, noise.p0_pos, noise.p0_vel,
      noise.p0_box, noise.p0_box;
  return s;
}

KalmanState predict(const KalmanState& s, const MotionModel& m) {
  KalmanState out;
  out.mean = m.A * s.mean;
  out.cov = m.A * s.cov * m.A.transpose() + m.Q;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

UpdateResult update(const KalmanState& s, const Vec4& z, const MotionModel& m) {
  const Mat4 S = checked_innovation(s, m);
  const Eigen::LLT<Mat4> llt(S);
  // K = P C^T S^{-1}; solve on the transpose to stay factorization-based.
  const Eigen::Matrix<double, 6, 4> PCt = s.cov * m.C.transpose();
  const Eigen::Matrix<double, 6, 4> K = llt.solve(PCt.transpose()).transpose();

  UpdateResult out;
  out.innovation_cov = S;
  out.state.mean = s.mean + K * (z - m.C * s.mean);
  const Mat6 IKC = Mat6::Identity() - K * m.C;
  out.state.cov = IKC * s.cov * IKC.transpose() + K * m.R * K.transpose();
  out.state.cov = 0.5 * (out.state.cov + out.state.cov.transpose()).eval();
  return out;
}

double mahalanobis(const Vec4& z, const KalmanState& s, const MotionModel& m) {
  return InnovationCache::make(s, m).distance(z);
}

InnovationCache InnovationCache::make(const KalmanState& s, const MotionModel& m) {
  InnovationCache c;
  c.predicted_z = m.C * s.mean;
  c.S = checked_innovation(s, m);
  c.llt.compute(c.S);
  return c;
}

double InnovationCache::distance(const Vec4& z) const {
  const Vec4 r = z - predicted_z;
  const double sq = r.dot(llt.solve(r));
  return sq > 0 ? std::sqrt(sq) : 0.0;
}

BBox box_from_state(const KalmanState& s) {
  const double w = s.mean(4), h = s.mean(5);
  return {s.mean(0) - 0.5 * w, s.mean(2) - 0.5 * h, w, h};
}

}  // namespace dmst
