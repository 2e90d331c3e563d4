#pragma once

#include <cstdint>
#include <vector>

#include "dmst/core.hpp"

namespace dmst {

// Signed shoulder-width to torso-length ratio, the orientation proxy.
// Positive means the subject faces away from the camera, negative toward it.
// Keypoints are confidence-weighted, so occluded points contribute nothing.
// Throws AllOccluded when every confidence is zero and DegenerateTorso when
// the weighted torso length collapses below 1e-6 px.
double s2t_ratio(const TorsoKeypoints& kp);

// L+1 bin edges; the outer two are -inf/+inf sentinels so every finite ratio
// lands in a bin. Bins are half-open on the right: [edges[l], edges[l+1]).
struct BinBoundaries {
  std::vector<double> edges;
  int bins() const { return static_cast<int>(edges.size()) - 1; }
};

// L equal-width bins over [-1, 1] with open outer sentinels.
BinBoundaries uniform_bins(int L);

// Exact 1-D k-means over the given ratios (dynamic program over contiguous
// partitions of the sorted values, O(n^2 L)); interior edges are midpoints
// between consecutive cluster centers. Ties between equal-SSE partitions go
// to the partition with the lowest leftmost center.
BinBoundaries kmeans_bins(std::vector<double> ratios, int L);

BinBoundaries fit_bins(const std::vector<double>& ratios, int L, BinMode mode,
                       std::uint64_t seed);

int bin_index(double ratio, const BinBoundaries& b);

}  // namespace dmst
