#include "dmst/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dmst {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinTorso = 1e-6;  // px
}  // namespace

double s2t_ratio(const TorsoKeypoints& kp) {
  const Keypoint& rs = kp.right_shoulder;
  const Keypoint& ls = kp.left_shoulder;
  const Keypoint& rh = kp.right_hip;
  const Keypoint& lh = kp.left_hip;
  const double total_conf = rs.c + ls.c + rh.c + lh.c;
  if (!(total_conf > 0))
    fail(ErrorCode::AllOccluded, "all torso keypoint confidences are zero");

  const double width =
      ((rs.c + ls.c) * (rs.x - ls.x) + (rh.c + lh.c) * (rh.x - lh.x)) / total_conf;
  // Image y grows downward: torso length is hips minus shoulders, so an
  // upright person yields a positive length and a person facing away from
  // the camera a positive ratio.
  const double length =
      ((rs.c + rh.c) * (rh.y - rs.y) + (ls.c + lh.c) * (lh.y - ls.y)) / total_conf;
  if (std::abs(length) < kMinTorso)
    fail(ErrorCode::DegenerateTorso, "torso length below 1e-6 px");

  const double r = width / length;
  if (!std::isfinite(r)) fail(ErrorCode::DegenerateTorso, "non-finite S2T ratio");
  return r;
}

BinBoundaries uniform_bins(int L) {
  if (L < 1) fail(ErrorCode::InvalidConfig, "L must be >= 1");
  BinBoundaries b;
  b.edges.reserve(L + 1);
  b.edges.push_back(-kInf);
  for (int k = 1; k < L; ++k) b.edges.push_back(-1.0 + 2.0 * k / L);
  b.edges.push_back(kInf);
  return b;
}

BinBoundaries kmeans_bins(std::vector<double> ratios, int L) {
  if (L < 1) fail(ErrorCode::InvalidConfig, "L must be >= 1");
  std::sort(ratios.begin(), ratios.end());
  const int n = static_cast<int>(ratios.size());
  int distinct = n > 0 ? 1 : 0;
  for (int i = 1; i < n; ++i)
    if (ratios[i] != ratios[i - 1]) ++distinct;
  if (distinct < L)
    fail(ErrorCode::TooFewSamples,
         "k-means with L=" + std::to_string(L) + " needs at least L distinct ratios, got " +
             std::to_string(distinct));

  // Optimal 1-D clusters are contiguous in sorted order, so exhaustive
  // search reduces to a partition DP over prefix sums.
  std::vector<double> sum(n + 1, 0.0), sumsq(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    sum[i + 1] = sum[i] + ratios[i];
    sumsq[i + 1] = sumsq[i] + ratios[i] * ratios[i];
  }
  const auto sse = [&](int i, int j) {  // inclusive range
    const double s = sum[j + 1] - sum[i];
    const double s2 = sumsq[j + 1] - sumsq[i];
    const double v = s2 - s * s / (j - i + 1);
    return v > 0 ? v : 0.0;
  };

  // cost[k][i] = optimal SSE for clustering ratios[i..n-1] into k clusters.
  std::vector<std::vector<double>> cost(L + 1, std::vector<double>(n + 1, kInf));
  for (int i = 0; i < n; ++i) cost[1][i] = sse(i, n - 1);
  for (int k = 2; k <= L; ++k)
    for (int i = 0; i + k <= n; ++i) {
      double best = kInf;
      for (int t = i; t <= n - k; ++t) {
        const double c = sse(i, t) + cost[k - 1][t + 1];
        if (c < best) best = c;
      }
      cost[k][i] = best;
    }

  // Reconstruct left to right; strict '<' keeps the earliest split on ties,
  // i.e. the lowest leftmost center.
  std::vector<double> centers;
  int i = 0;
  for (int k = L; k >= 2; --k) {
    int best_t = i;
    double best = kInf;
    for (int t = i; t <= n - k; ++t) {
      const double c = sse(i, t) + cost[k - 1][t + 1];
      if (c < best) {
        best = c;
        best_t = t;
      }
    }
    centers.push_back((sum[best_t + 1] - sum[i]) / (best_t - i + 1));
    i = best_t + 1;
  }
  centers.push_back((sum[n] - sum[i]) / (n - i));

  BinBoundaries b;
  b.edges.reserve(L + 1);
  b.edges.push_back(-kInf);
  for (int k = 0; k + 1 < L; ++k)
    b.edges.push_back(0.5 * (centers[k] + centers[k + 1]));
  b.edges.push_back(kInf);
  for (int k = 0; k + 1 <= L; ++k)
    if (!(b.edges[k] < b.edges[k + 1]))
      fail(ErrorCode::Internal, "k-means produced non-increasing bin edges");
  return b;
}

BinBoundaries fit_bins(const std::vector<double>& ratios, int L, BinMode mode,
                       std::uint64_t /*seed*/) {
  // Both modes are deterministic; the seed parameter is kept for interface
  // stability.
  if (mode == BinMode::Uniform) return uniform_bins(L);
  return kmeans_bins(ratios, L);
}

int bin_index(double ratio, const BinBoundaries& b) {
  if (!std::isfinite(ratio))
    fail(ErrorCode::Internal, "bin_index requires a finite ratio");
  const auto it = std::upper_bound(b.edges.begin(), b.edges.end(), ratio);
  const int idx = static_cast<int>(it - b.edges.begin()) - 1;
  return std::clamp(idx, 0, b.bins() - 1);
}

}  // namespace dmst
