#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "dmst/core.hpp"
#include "dmst/gallery.hpp"
#include "dmst/motion.hpp"
#include "dmst/orientation.hpp"
#include "dmst/rng.hpp"

namespace dmst {

// Chi-square(4) quantile at 0.95, applied to the squared Mahalanobis
// distance: assignments beyond it are pruned from the proposal support.
inline constexpr double kSquaredGate = 9.5;

struct TrackState {
  KalmanState kf;
  BinnedGallery gallery;  // this sensor's own detections; what goes on the wire
  BinnedGallery fused;    // operative appearance model, enriched by matched peers
  int first_frame = 0;
  int last_seen = 0;
  int misses = 0;
  bool alive = true;
  // Posterior box per assigned frame, current batch only.
  std::vector<std::pair<int, BBox>> batch_boxes;
};

struct AssignmentRecord {
  int detection_index = 0;
  int track_id = 0;
  bool born = false;  // assignment created the track
};

using FrameAssignments = std::vector<AssignmentRecord>;

// One data-association hypothesis: assignment history plus the per-track
// Kalman states and galleries it implies.
struct Particle {
  double weight = 1.0;
  std::map<int, TrackState> tracks;  // local track id -> state
  int next_track_id = 0;
  std::vector<std::pair<int, FrameAssignments>> history;  // per frame, current batch
};

struct FilterContext {
  RunConfig cfg;
  MotionModel model;
  BinBoundaries bins;

  static FilterContext make(const RunConfig& cfg);
};

// Softmin over Mahalanobis distances to each track's predicted measurement;
// components sum to 1.
std::vector<double> spatial_likelihood(const Vec4& z, std::span<const KalmanState> tracks,
                                       const MotionModel& m, double beta);

// Softmin over nearest-bin distances per gallery; components sum to 1.
std::vector<double> appearance_likelihood(const Eigen::VectorXd& embedding,
                                          std::span<const BinnedGallery* const> galleries,
                                          double gamma);

struct JointLikelihood {
  std::vector<double> probs;  // per track, then the new-track entry last
  double normalizer = 0.0;    // pre-normalization mass; the particle weight factor
};

// Combines per-track spatial and appearance factors with the new-track
// pseudo-likelihood and renormalizes.
JointLikelihood combine_likelihoods(const std::vector<double>& spatial,
                                    const std::vector<double>& appearance,
                                    double new_track_likelihood);

struct TrackView {
  const KalmanState* kf = nullptr;
  const BinnedGallery* gallery = nullptr;
};

JointLikelihood joint_assignment_likelihood(const Detection& det,
                                            std::span<const TrackView> tracks,
                                            const RunConfig& cfg, const MotionModel& m);

// One RBPF frame for one particle: predict all live tracks, then for each
// detection in random order sample a target from the joint likelihood
// restricted to gate-passing unassigned tracks (sequential sampling without
// replacement keeps the frame one-to-one). The particle weight picks up the
// restricted normalizer per detection. Assigned tracks get the Kalman update
// and a gallery absorb, NEW spawns a track, and tracks silent for more than
// miss_limit consecutive frames are terminated.
void step_particle(Particle& p, int frame, std::span<const Detection> detections,
                   const FilterContext& ctx, Rng& rng);

void normalize_weights(std::vector<Particle>& particles);
double effective_sample_size(const std::vector<Particle>& particles);

// Unconditional systematic resampling; output weights are uniform.
std::vector<Particle> systematic_resample(const std::vector<Particle>& particles, Rng& rng);

// Resamples only when ESS drops below resample_ess_frac * n_p.
std::vector<Particle> resample(std::vector<Particle> particles, const RunConfig& cfg, Rng& rng);

// Maximum-weight particle; ties go to the lowest index.
const Particle& map_particle(const std::vector<Particle>& particles);

}  // namespace dmst
