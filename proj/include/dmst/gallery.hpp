#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dmst/error.hpp"

namespace dmst {

// Per-track appearance summary: one running-mean embedding per orientation
// bin plus a count. Footprint is O(L * n_f) no matter how many detections
// the track absorbs.
class BinnedGallery {
 public:
  BinnedGallery() = default;
  BinnedGallery(int L, int n_f);

  int bins() const { return static_cast<int>(slots_.size()); }
  int feature_dim() const { return n_f_; }
  bool empty() const;  // zero detections absorbed
  std::int64_t total_count() const;

  bool bin_empty(int bin) const;
  std::int64_t bin_count(int bin) const;
  const Eigen::VectorXd& bin_mean(int bin) const;

  // Folds the embedding into the bin's running mean. The stored mean stays
  // the exact arithmetic mean of everything absorbed into that bin.
  void absorb(const Eigen::VectorXd& embedding, int bin);

  // Wire decode path: install a slot wholesale.
  void restore_slot(int bin, Eigen::VectorXd mean, std::int64_t count);

  // Count-weighted mean across all populated bins.
  Eigen::VectorXd overall_mean() const;

  // Lowest-index bin with the highest count; -1 when empty.
  int most_populated_bin() const;

 private:
  struct Slot {
    Eigen::VectorXd mean;
    std::int64_t count = 0;
  };
  std::vector<Slot> slots_;
  int n_f_ = 0;
};

// Distance between two galleries: Euclidean norm over the bins populated in
// both, rescaled by sqrt(L / shared) so different overlap counts stay
// comparable. With no shared bin it falls back to the distance between the
// count-weighted overall means.
double gallery_distance(const BinnedGallery& a, const BinnedGallery& b);

// Minimum L2 distance from the embedding to any populated bin mean.
double nearest_bin_distance(const BinnedGallery& g, const Eigen::VectorXd& embedding);

// Per-bin count-weighted combination; empty + x = x.
BinnedGallery merge(const BinnedGallery& a, const BinnedGallery& b);

}  // namespace dmst
