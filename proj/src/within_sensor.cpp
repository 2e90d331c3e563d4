#include "dmst/within_sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dmst {

namespace {

// exp(-temp * (d - min d)) normalized. The shift cancels in the quotient, so
// the result matches the unshifted softmin exactly while staying in range.
std::vector<double> softmin(const std::vector<double>& dists, double temp) {
  const double lo = *std::min_element(dists.begin(), dists.end());
  std::vector<double> out(dists.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    out[i] = std::exp(-temp * (dists[i] - lo));
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

int sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void absorb_detection(TrackState& t, const Detection& det, const FilterContext& ctx) {
  int bin;
  try {
    bin = bin_index(s2t_ratio(det.keypoints), ctx.bins);
  } catch (const Error&) {
    // No usable keypoints: file the feature under the track's modal bin.
    bin = std::max(0, t.gallery.most_populated_bin());
  }
  t.gallery.absorb(det.embedding, bin);
  t.fused.absorb(det.embedding, bin);
}

}  // namespace

FilterContext FilterContext::make(const RunConfig& cfg) {
  validate_config(cfg);
  FilterContext ctx;
  ctx.cfg = cfg;
  ctx.model = MotionModel::constant_velocity(cfg.dt, cfg.noise);
  ctx.bins = uniform_bins(cfg.L);
  return ctx;
}

std::vector<double> spatial_likelihood(const Vec4& z, std::span<const KalmanState> tracks,
                                       const MotionModel& m, double beta) {
  if (tracks.empty())
    fail(ErrorCode::Internal, "spatial_likelihood needs at least one track");
  std::vector<double> d(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) d[i] = mahalanobis(z, tracks[i], m);
  return softmin(d, beta);
}

std::vector<double> appearance_likelihood(const Eigen::VectorXd& embedding,
                                          std::span<const BinnedGallery* const> galleries,
                                          double gamma) {
  if (galleries.empty())
    fail(ErrorCode::Internal, "appearance_likelihood needs at least one gallery");
  std::vector<double> d(galleries.size());
  for (std::size_t i = 0; i < galleries.size(); ++i)
    d[i] = nearest_bin_distance(*galleries[i], embedding);
  return softmin(d, gamma);
}

JointLikelihood combine_likelihoods(const std::vector<double>& spatial,
                                    const std::vector<double>& appearance,
                                    double new_track_likelihood) {
  if (!spatial.empty() && !appearance.empty() && spatial.size() != appearance.size())
    fail(ErrorCode::Internal, "likelihood vectors differ in length");
  const std::size_t n = appearance.empty() ? spatial.size() : appearance.size();
  JointLikelihood out;
  out.probs.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.0;
    if (!spatial.empty()) v *= spatial[i];
    if (!appearance.empty()) v *= appearance[i];
    out.probs[i] = v;
  }
  out.probs[n] = new_track_likelihood;
  out.normalizer = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  for (double& v : out.probs) v /= out.normalizer;
  return out;
}

JointLikelihood joint_assignment_likelihood(const Detection& det,
                                            std::span<const TrackView> tracks,
                                            const RunConfig& cfg, const MotionModel& m) {
  std::vector<double> spatial, appearance;
  if (!tracks.empty()) {
    std::vector<const BinnedGallery*> galleries(tracks.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) galleries[i] = tracks[i].gallery;
    appearance = appearance_likelihood(det.embedding, galleries, cfg.gamma);
    if (cfg.use_position) {
      std::vector<KalmanState> states(tracks.size());
      for (std::size_t i = 0; i < tracks.size(); ++i) states[i] = *tracks[i].kf;
      spatial = spatial_likelihood(det.position_measurement(), states, m, cfg.beta);
    }
  }
  return combine_likelihoods(spatial, appearance, cfg.new_track_likelihood);
}

void step_particle(Particle& p, int frame, std::span<const Detection> detections,
                   const FilterContext& ctx, Rng& rng) {
  // Predict every live track once, then cache its innovation factorization;
  // every detection this frame gates against the same S.
  std::vector<int> live;
  for (auto& [id, t] : p.tracks) {
    if (!t.alive) continue;
    t.kf = predict(t.kf, ctx.model);
    live.push_back(id);
  }
  std::map<int, InnovationCache> gates;
  if (ctx.cfg.use_position)
    for (int id : live) gates.emplace(id, InnovationCache::make(p.tracks[id].kf, ctx.model));

  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  FrameAssignments records;
  std::set<int> taken;
  for (int di : order) {
    const Detection& det = detections[static_cast<std::size_t>(di)];
    const Vec4 z = det.position_measurement();

    std::vector<int> candidates;
    std::vector<double> spatial_d;
    for (int id : live) {
      if (taken.count(id)) continue;
      if (ctx.cfg.use_position) {
        const double d = gates.at(id).distance(z);
        if (d * d > kSquaredGate) continue;
        spatial_d.push_back(d);
      }
      candidates.push_back(id);
    }

    std::vector<double> spatial, appearance;
    if (!candidates.empty()) {
      std::vector<double> app_d(candidates.size());
      for (std::size_t i = 0; i < candidates.size(); ++i)
        app_d[i] = nearest_bin_distance(p.tracks[candidates[i]].fused, det.embedding);
      appearance = softmin(app_d, ctx.cfg.gamma);
      if (ctx.cfg.use_position) spatial = softmin(spatial_d, ctx.cfg.beta);
    }
    const JointLikelihood jl =
        combine_likelihoods(spatial, appearance, ctx.cfg.new_track_likelihood);
    p.weight *= jl.normalizer;
    const int choice = sample_index(jl.probs, rng);

    if (choice == static_cast<int>(candidates.size())) {
      const int id = p.next_track_id++;
      TrackState t;
      t.kf = initial_state(z, ctx.cfg.noise);
      t.gallery = BinnedGallery(ctx.cfg.L, ctx.cfg.n_f);
      t.fused = t.gallery;
      absorb_detection(t, det, ctx);
      t.first_frame = frame;
      t.last_seen = frame;
      t.batch_boxes.emplace_back(frame, box_from_state(t.kf));
      p.tracks.emplace(id, std::move(t));
      records.push_back({di, id, true});
    } else {
      const int id = candidates[static_cast<std::size_t>(choice)];
      TrackState& t = p.tracks[id];
      t.kf = update(t.kf, z, ctx.model).state;
      absorb_detection(t, det, ctx);
      t.last_seen = frame;
      t.misses = 0;
      t.batch_boxes.emplace_back(frame, box_from_state(t.kf));
      taken.insert(id);
      records.push_back({di, id, false});
    }
  }

  for (int id : live) {
    if (taken.count(id)) continue;
    TrackState& t = p.tracks[id];
    if (++t.misses > ctx.cfg.miss_limit) t.alive = false;
  }
  std::sort(records.begin(), records.end(),
            [](const AssignmentRecord& a, const AssignmentRecord& b) {
              return a.detection_index < b.detection_index;
            });
  p.history.emplace_back(frame, std::move(records));
}

void normalize_weights(std::vector<Particle>& particles) {
  if (particles.empty()) fail(ErrorCode::EmptyParticleSet, "no particles");
  double total = 0.0;
  for (const Particle& p : particles) total += p.weight;
  if (!(total > 0) || !std::isfinite(total)) {
    // Every hypothesis underflowed; fall back to uniform.
    for (Particle& p : particles) p.weight = 1.0 / particles.size();
    return;
  }
  for (Particle& p : particles) p.weight /= total;
}

double effective_sample_size(const std::vector<Particle>& particles) {
  double sq = 0.0;
  for (const Particle& p : particles) sq += p.weight * p.weight;
  return sq > 0 ? 1.0 / sq : 0.0;
}

std::vector<Particle> systematic_resample(const std::vector<Particle>& particles, Rng& rng) {
  if (particles.empty()) fail(ErrorCode::EmptyParticleSet, "no particles");
  const std::size_t n = particles.size();
  const double u0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::vector<Particle> out;
  out.reserve(n);
  double cum = particles[0].weight;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (u0 + i) / n;
    while (!(u < cum) && j + 1 < n) cum += particles[++j].weight;
    out.push_back(particles[j]);
    out.back().weight = 1.0 / n;
  }
  return out;
}

std::vector<Particle> resample(std::vector<Particle> particles, const RunConfig& cfg, Rng& rng) {
  if (particles.empty()) fail(ErrorCode::EmptyParticleSet, "no particles");
  if (effective_sample_size(particles) <
      cfg.resample_ess_frac * static_cast<double>(particles.size()))
    return systematic_resample(particles, rng);
  return particles;
}

const Particle& map_particle(const std::vector<Particle>& particles) {
  if (particles.empty()) fail(ErrorCode::EmptyParticleSet, "no particles");
  std::size_t best = 0;
  for (std::size_t i = 1; i < particles.size(); ++i)
    if (particles[i].weight > particles[best].weight) best = i;
  return particles[best];
}

}  // namespace dmst
