#include "dmst/cross_sensor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dmst/assignment.hpp"

namespace dmst {

namespace {

// Union-find over (sensor, track) keys.
class ComponentMap {
 public:
  explicit ComponentMap(const std::vector<MatchSet>& matches) {
    for (const MatchSet& ms : matches)
      for (const MatchPair& mp : ms.pairs)
        unite({mp.a.sensor_id, mp.a.local_track_id},
              {mp.b.sensor_id, mp.b.local_track_id});
  }

  TrackKey find(TrackKey k) {
    auto it = parent_.find(k);
    if (it == parent_.end()) return k;
    const TrackKey root = find(it->second);
    it->second = root;
    return root;
  }

  std::map<TrackKey, std::vector<TrackKey>> components() {
    std::map<TrackKey, std::vector<TrackKey>> out;
    for (const auto& [k, _] : parent_) out[find(k)].push_back(k);
    for (auto& [root, members] : out)
      if (std::find(members.begin(), members.end(), root) == members.end())
        members.push_back(root);
    for (auto& [_, members] : out) std::sort(members.begin(), members.end());
    return out;
  }

 private:
  void unite(TrackKey a, TrackKey b) {
    parent_.try_emplace(a, a);
    parent_.try_emplace(b, b);
    const TrackKey ra = find(a), rb = find(b);
    if (ra == rb) return;
    // Root at the smaller key so the canonical member is the minimum.
    if (ra < rb)
      parent_[rb] = ra;
    else
      parent_[ra] = rb;
  }

  std::map<TrackKey, TrackKey> parent_;
};

}  // namespace

double similarity(const TrackSummary& a, const TrackSummary& b, double gamma) {
  return std::exp(-gamma * gallery_distance(a.gallery, b.gallery));
}

MatchSet associate_pair(const std::vector<TrackSummary>& sa,
                        const std::vector<TrackSummary>& sb, const RunConfig& cfg) {
  MatchSet out;
  if (sa.empty() || sb.empty()) return out;
  const int n = static_cast<int>(sa.size());
  const int m = static_cast<int>(sb.size());
  const int k = std::max(n, m);
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(k, k, cfg.cs_threshold);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost(i, j) = gallery_distance(sa[i].gallery, sb[j].gallery);
  const std::vector<int> col = solve_assignment(cost);
  for (int i = 0; i < n; ++i) {
    const int j = col[i];
    if (j < 0 || j >= m) continue;  // padded dummy
    if (cost(i, j) > cfg.cs_threshold) continue;
    out.pairs.push_back({sa[i].identity, sb[j].identity, cost(i, j)});
  }
  return out;
}

std::map<TrackKey, std::int64_t> resolve_identities(const std::vector<MatchSet>& matches) {
  ComponentMap cm(matches);
  std::map<TrackKey, std::int64_t> out;
  for (const auto& [root, members] : cm.components()) {
    const TrackKey canonical = members.front();  // sorted, so the minimum
    const std::int64_t gid = self_global_id(canonical.first, canonical.second);
    for (const TrackKey& k : members) out[k] = gid;
  }
  return out;
}

std::int64_t global_id_or_self(const std::map<TrackKey, std::int64_t>& ids, int sensor_id,
                               int local_track_id) {
  const auto it = ids.find({sensor_id, local_track_id});
  return it != ids.end() ? it->second : self_global_id(sensor_id, local_track_id);
}

int count_conflicting_components(const std::vector<MatchSet>& matches) {
  ComponentMap cm(matches);
  int conflicts = 0;
  for (const auto& [_, members] : cm.components()) {
    std::set<int> sensors;
    bool dup = false;
    for (const TrackKey& k : members) dup |= !sensors.insert(k.first).second;
    conflicts += dup ? 1 : 0;
  }
  return conflicts;
}

std::vector<TrackSummary> merge_matched_galleries(std::vector<TrackSummary> summaries,
                                                  const std::vector<MatchSet>& matches) {
  ComponentMap cm(matches);
  std::map<TrackKey, std::size_t> index;
  for (std::size_t i = 0; i < summaries.size(); ++i)
    index[{summaries[i].identity.sensor_id, summaries[i].identity.local_track_id}] = i;

  for (const auto& [_, members] : cm.components()) {
    BinnedGallery merged;
    bool first = true;
    std::vector<std::size_t> present;
    for (const TrackKey& k : members) {
      const auto it = index.find(k);
      if (it == index.end()) continue;  // matched in an earlier batch, not summarized here
      present.push_back(it->second);
      merged = first ? summaries[it->second].gallery
                     : merge(merged, summaries[it->second].gallery);
      first = false;
    }
    for (std::size_t i : present) summaries[i].gallery = merged;
  }
  return summaries;
}

}  // namespace dmst
