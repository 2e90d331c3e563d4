#include "dmst/gallery.hpp"

#include <cmath>
#include <string>

namespace dmst {

namespace {

void check_compatible(const BinnedGallery& a, const BinnedGallery& b) {
  if (a.bins() != b.bins() || a.feature_dim() != b.feature_dim())
    fail(ErrorCode::DimensionMismatch,
         "galleries differ in shape: " + std::to_string(a.bins()) + "x" +
             std::to_string(a.feature_dim()) + " vs " + std::to_string(b.bins()) +
             "x" + std::to_string(b.feature_dim()));
}

}  // namespace

BinnedGallery::BinnedGallery(int L, int n_f) : slots_(L), n_f_(n_f) {
  if (L < 1) fail(ErrorCode::InvalidConfig, "L must be >= 1");
  if (n_f < 1) fail(ErrorCode::InvalidConfig, "n_f must be >= 1");
}

bool BinnedGallery::empty() const { return total_count() == 0; }

std::int64_t BinnedGallery::total_count() const {
  std::int64_t c = 0;
  for (const Slot& s : slots_) c += s.count;
  return c;
}

bool BinnedGallery::bin_empty(int bin) const { return slots_.at(bin).count == 0; }

std::int64_t BinnedGallery::bin_count(int bin) const { return slots_.at(bin).count; }

const Eigen::VectorXd& BinnedGallery::bin_mean(int bin) const {
  const Slot& s = slots_.at(bin);
  if (s.count == 0) fail(ErrorCode::BothEmpty, "bin " + std::to_string(bin) + " is empty");
  return s.mean;
}

void BinnedGallery::absorb(const Eigen::VectorXd& embedding, int bin) {
  if (bin < 0 || bin >= bins())
    fail(ErrorCode::Internal, "bin index out of range: " + std::to_string(bin));
  if (embedding.size() != n_f_)
    fail(ErrorCode::DimensionMismatch,
         "embedding length " + std::to_string(embedding.size()) + " != n_f " +
             std::to_string(n_f_));
  Slot& s = slots_[bin];
  if (s.count == 0) {
    s.mean = embedding;
    s.count = 1;
  } else {
    ++s.count;
    s.mean += (embedding - s.mean) / static_cast<double>(s.count);
  }
}

void BinnedGallery::restore_slot(int bin, Eigen::VectorXd mean, std::int64_t count) {
  if (bin < 0 || bin >= bins())
    fail(ErrorCode::Internal, "bin index out of range: " + std::to_string(bin));
  if (count < 0) fail(ErrorCode::Internal, "negative slot count");
  if (count > 0 && mean.size() != n_f_)
    fail(ErrorCode::DimensionMismatch, "slot mean length != n_f");
  slots_[bin].mean = std::move(mean);
  slots_[bin].count = count;
}

Eigen::VectorXd BinnedGallery::overall_mean() const {
  if (empty()) fail(ErrorCode::BothEmpty, "gallery has no absorbed detections");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_f_);
  std::int64_t total = 0;
  for (const Slot& s : slots_) {
    if (s.count == 0) continue;
    acc += static_cast<double>(s.count) * s.mean;
    total += s.count;
  }
  return acc / static_cast<double>(total);
}

int BinnedGallery::most_populated_bin() const {
  int best = -1;
  std::int64_t best_count = 0;
  for (int l = 0; l < bins(); ++l) {
    if (slots_[l].count > best_count) {
      best_count = slots_[l].count;
      best = l;
    }
  }
  return best;
}

double gallery_distance(const BinnedGallery& a, const BinnedGallery& b) {
  check_compatible(a, b);
  if (a.empty() || b.empty())
    fail(ErrorCode::BothEmpty, "gallery with no absorbed detections");
  const int L = a.bins();
  int shared = 0;
  double sq = 0.0;
  for (int l = 0; l < L; ++l) {
    if (a.bin_empty(l) || b.bin_empty(l)) continue;
    ++shared;
    sq += (a.bin_mean(l) - b.bin_mean(l)).squaredNorm();
  }
  if (shared == 0) return (a.overall_mean() - b.overall_mean()).norm();
  return std::sqrt(sq) * std::sqrt(static_cast<double>(L) / shared);
}

double nearest_bin_distance(const BinnedGallery& g, const Eigen::VectorXd& embedding) {
  if (g.empty()) fail(ErrorCode::BothEmpty, "gallery has no absorbed detections");
  if (embedding.size() != g.feature_dim())
    fail(ErrorCode::DimensionMismatch, "embedding length != n_f");
  double best = std::numeric_limits<double>::infinity();
  for (int l = 0; l < g.bins(); ++l) {
    if (g.bin_empty(l)) continue;
    best = std::min(best, (g.bin_mean(l) - embedding).norm());
  }
  return best;
}

BinnedGallery merge(const BinnedGallery& a, const BinnedGallery& b) {
  check_compatible(a, b);
  BinnedGallery out(a.bins(), a.feature_dim());
  for (int l = 0; l < a.bins(); ++l) {
    const std::int64_t ca = a.bin_count(l), cb = b.bin_count(l);
    if (ca == 0 && cb == 0) continue;
    if (ca == 0) {
      out.restore_slot(l, b.bin_mean(l), cb);
    } else if (cb == 0) {
      out.restore_slot(l, a.bin_mean(l), ca);
    } else {
      const double wa = static_cast<double>(ca), wb = static_cast<double>(cb);
      out.restore_slot(l, (wa * a.bin_mean(l) + wb * b.bin_mean(l)) / (wa + wb),
                       ca + cb);
    }
  }
  return out;
}

}  // namespace dmst
