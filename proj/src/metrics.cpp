#include "dmst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "dmst/assignment.hpp"
#include "dmst/orientation.hpp"
#include "dmst/rng.hpp"

namespace dmst {

namespace {

// Large-M costs: any gate-passing match beats a dummy, any dummy beats a
// gated-out cell, so the solver maximizes valid matches first and match
// quality second.
constexpr double kDummyCost = 1e6;
constexpr double kForbidden = 1e9;

void sort_frames(std::vector<EvalFrame>& frames) {
  std::stable_sort(frames.begin(), frames.end(),
                   [](const EvalFrame& a, const EvalFrame& b) { return a.frame < b.frame; });
}

}  // namespace

MotScore clear_mot(std::vector<EvalFrame> frames, double iou_threshold) {
  sort_frames(frames);
  MotScore score;
  std::int64_t total_gt = 0;
  std::int64_t matched_total = 0;
  double iou_sum = 0.0;

  std::map<std::int64_t, std::int64_t> prev_match;  // gt id -> hyp id, previous frame
  std::map<std::int64_t, std::int64_t> last_known;  // gt id -> hyp id, any earlier frame

  for (const EvalFrame& fr : frames) {
    total_gt += static_cast<std::int64_t>(fr.gt.size());
    std::map<std::int64_t, std::int64_t> matches;
    std::set<std::size_t> used_gt, used_hyp;

    // Continuity: keep last frame's correspondence while it still overlaps.
    for (std::size_t gi = 0; gi < fr.gt.size(); ++gi) {
      const auto it = prev_match.find(fr.gt[gi].id);
      if (it == prev_match.end()) continue;
      for (std::size_t hi = 0; hi < fr.hyp.size(); ++hi) {
        if (fr.hyp[hi].id != it->second || used_hyp.count(hi)) continue;
        const double v = iou(fr.gt[gi].box, fr.hyp[hi].box);
        if (v >= iou_threshold) {
          matches[fr.gt[gi].id] = fr.hyp[hi].id;
          used_gt.insert(gi);
          used_hyp.insert(hi);
          iou_sum += v;
          ++matched_total;
        }
        break;
      }
    }

    // Remaining boxes: minimum-cost assignment on 1 - IoU.
    std::vector<std::size_t> free_gt, free_hyp;
    for (std::size_t gi = 0; gi < fr.gt.size(); ++gi)
      if (!used_gt.count(gi)) free_gt.push_back(gi);
    for (std::size_t hi = 0; hi < fr.hyp.size(); ++hi)
      if (!used_hyp.count(hi)) free_hyp.push_back(hi);
    if (!free_gt.empty() && !free_hyp.empty()) {
      const int n = static_cast<int>(free_gt.size());
      const int m = static_cast<int>(free_hyp.size());
      const int k = std::max(n, m);
      Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(k, k, kDummyCost);
      Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(k, k);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const double v = iou(fr.gt[free_gt[i]].box, fr.hyp[free_hyp[j]].box);
          overlap(i, j) = v;
          cost(i, j) = v >= iou_threshold ? 1.0 - v : kForbidden;
        }
      const std::vector<int> col = solve_assignment(cost);
      for (int i = 0; i < n; ++i) {
        const int j = col[i];
        if (j < 0 || j >= m || cost(i, j) >= kDummyCost) continue;
        matches[fr.gt[free_gt[i]].id] = fr.hyp[free_hyp[j]].id;
        iou_sum += overlap(i, j);
        ++matched_total;
      }
    }

    for (const auto& [gt_id, hyp_id] : matches) {
      const auto it = last_known.find(gt_id);
      if (it != last_known.end() && it->second != hyp_id) ++score.ids;
      last_known[gt_id] = hyp_id;
    }
    score.fn += static_cast<std::int64_t>(fr.gt.size()) -
                static_cast<std::int64_t>(matches.size());
    score.fp += static_cast<std::int64_t>(fr.hyp.size()) -
                static_cast<std::int64_t>(matches.size());
    prev_match = std::move(matches);
  }

  score.motp = matched_total > 0 ? iou_sum / static_cast<double>(matched_total) : 0.0;
  score.mota = total_gt > 0
                   ? 1.0 - static_cast<double>(score.fp + score.fn + score.ids) /
                               static_cast<double>(total_gt)
                   : 1.0;
  return score;
}

IdentityScore identity_scores(std::vector<EvalFrame> frames, double iou_threshold) {
  // Per-trajectory-pair count of cells where both are present and overlap.
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> overlap;
  std::map<std::int64_t, std::int64_t> gt_frames, hyp_frames;
  for (const EvalFrame& fr : frames) {
    for (const EvalBox& g : fr.gt) ++gt_frames[g.id];
    for (const EvalBox& h : fr.hyp) ++hyp_frames[h.id];
    for (const EvalBox& g : fr.gt)
      for (const EvalBox& h : fr.hyp)
        if (iou(g.box, h.box) >= iou_threshold) ++overlap[{g.id, h.id}];
  }

  std::vector<std::int64_t> gt_ids, hyp_ids;
  for (const auto& [id, _] : gt_frames) gt_ids.push_back(id);
  for (const auto& [id, _] : hyp_frames) hyp_ids.push_back(id);

  std::int64_t id_tp = 0;
  if (!gt_ids.empty() && !hyp_ids.empty()) {
    const int n = static_cast<int>(gt_ids.size());
    const int m = static_cast<int>(hyp_ids.size());
    const int k = std::max(n, m);
    // Maximize matched frames: minimize negated overlap, zero for dummies.
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const auto it = overlap.find({gt_ids[i], hyp_ids[j]});
        if (it != overlap.end()) cost(i, j) = -static_cast<double>(it->second);
      }
    const std::vector<int> col = solve_assignment(cost);
    for (int i = 0; i < n; ++i) {
      const int j = col[i];
      if (j < 0 || j >= m) continue;
      const auto it = overlap.find({gt_ids[i], hyp_ids[j]});
      if (it != overlap.end()) id_tp += it->second;
    }
  }

  std::int64_t total_gt = 0, total_hyp = 0;
  for (const auto& [_, c] : gt_frames) total_gt += c;
  for (const auto& [_, c] : hyp_frames) total_hyp += c;

  IdentityScore s;
  s.idp = total_hyp > 0 ? static_cast<double>(id_tp) / static_cast<double>(total_hyp) : 0.0;
  s.idr = total_gt > 0 ? static_cast<double>(id_tp) / static_cast<double>(total_gt) : 0.0;
  s.idf1 = (total_gt + total_hyp) > 0
               ? 2.0 * static_cast<double>(id_tp) / static_cast<double>(total_gt + total_hyp)
               : 0.0;
  return s;
}

MotScore evaluate_frames(std::vector<EvalFrame> frames, double iou_threshold) {
  MotScore score = clear_mot(frames, iou_threshold);
  const IdentityScore id = identity_scores(std::move(frames), iou_threshold);
  score.idf1 = id.idf1;
  score.idp = id.idp;
  score.idr = id.idr;
  return score;
}

Rank1Result rank1(const std::vector<ReidRecord>& gallery,
                  const std::vector<ReidRecord>& queries, GalleryMode mode, int L,
                  std::uint64_t seed) {
  if (gallery.empty()) fail(ErrorCode::EmptyGallery, "gallery is empty");
  const Eigen::Index n_f = gallery.front().feature.size();
  for (const ReidRecord& r : gallery)
    if (r.feature.size() != n_f)
      fail(ErrorCode::DimensionMismatch, "gallery feature lengths differ");

  std::set<std::int64_t> gallery_ids;
  for (const ReidRecord& r : gallery) gallery_ids.insert(r.id);
  for (const ReidRecord& q : queries)
    if (!gallery_ids.count(q.id))
      fail(ErrorCode::EmptyGallery,
           "query identity " + std::to_string(q.id) + " missing from gallery");

  // The transformed gallery: (owner id, representative feature) pairs.
  std::vector<std::pair<std::int64_t, Eigen::VectorXd>> store;
  switch (mode) {
    case GalleryMode::Full:
      for (const ReidRecord& r : gallery) store.emplace_back(r.id, r.feature);
      break;
    case GalleryMode::Average: {
      std::map<std::int64_t, std::pair<Eigen::VectorXd, std::int64_t>> acc;
      for (const ReidRecord& r : gallery) {
        auto [it, fresh] = acc.try_emplace(r.id, Eigen::VectorXd::Zero(n_f), 0);
        it->second.first += r.feature;
        ++it->second.second;
      }
      for (const auto& [id, s] : acc)
        store.emplace_back(id, s.first / static_cast<double>(s.second));
      break;
    }
    case GalleryMode::RandomBins: {
      // Two random halves per identity, seeded per identity.
      std::map<std::int64_t, std::array<std::pair<Eigen::VectorXd, std::int64_t>, 2>> acc;
      std::map<std::int64_t, Rng> rngs;
      for (const ReidRecord& r : gallery) {
        auto [rit, fresh] = rngs.try_emplace(r.id, Rng(derive_seed(seed, "random-bins",
                                                                   static_cast<std::uint64_t>(r.id))));
        const int half = static_cast<int>(std::uniform_int_distribution<int>(0, 1)(rit->second));
        auto [it, _] = acc.try_emplace(
            r.id, std::array<std::pair<Eigen::VectorXd, std::int64_t>, 2>{
                      std::pair{Eigen::VectorXd::Zero(n_f).eval(), std::int64_t{0}},
                      std::pair{Eigen::VectorXd::Zero(n_f).eval(), std::int64_t{0}}});
        it->second[half].first += r.feature;
        ++it->second[half].second;
      }
      for (const auto& [id, halves] : acc)
        for (const auto& [sum, count] : halves)
          if (count > 0) store.emplace_back(id, sum / static_cast<double>(count));
      break;
    }
    case GalleryMode::OrientationBins: {
      std::vector<double> ratios;
      for (const ReidRecord& r : gallery)
        if (std::isfinite(r.ratio)) ratios.push_back(r.ratio);
      const BinBoundaries bins = kmeans_bins(std::move(ratios), L);
      std::map<std::pair<std::int64_t, int>, std::pair<Eigen::VectorXd, std::int64_t>> acc;
      for (const ReidRecord& r : gallery) {
        // Records without a usable ratio land in the bin of ratio 0.
        const int bin = bin_index(std::isfinite(r.ratio) ? r.ratio : 0.0, bins);
        auto [it, fresh] = acc.try_emplace(std::pair{r.id, bin}, Eigen::VectorXd::Zero(n_f), 0);
        it->second.first += r.feature;
        ++it->second.second;
      }
      for (const auto& [key, s] : acc)
        store.emplace_back(key.first, s.first / static_cast<double>(s.second));
      break;
    }
  }

  std::int64_t correct = 0;
  for (const ReidRecord& q : queries) {
    if (q.feature.size() != n_f)
      fail(ErrorCode::DimensionMismatch, "query feature length differs from gallery");
    double best = std::numeric_limits<double>::infinity();
    std::int64_t best_id = store.front().first;
    for (const auto& [id, feat] : store) {
      const double d = (feat - q.feature).squaredNorm();
      if (d < best) {
        best = d;
        best_id = id;
      }
    }
    if (best_id == q.id) ++correct;
  }

  Rank1Result out;
  out.gallery_features = static_cast<std::int64_t>(store.size());
  out.accuracy = queries.empty()
                     ? 0.0
                     : static_cast<double>(correct) / static_cast<double>(queries.size());
  return out;
}

}  // namespace dmst
