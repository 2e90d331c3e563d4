#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dmst/core.hpp"
#include "dmst/gallery.hpp"

namespace dmst {

struct TrackSummary {
  Identity identity;
  BinnedGallery gallery;
  int first_frame = 0;
  int last_frame = 0;
};

struct MatchPair {
  Identity a, b;
  double distance = 0.0;
};

// One-to-one trajectory matches between two sensors; every retained
// distance is within cs_threshold.
struct MatchSet {
  std::vector<MatchPair> pairs;
};

// exp(-gamma * gallery_distance), in (0, 1].
double similarity(const TrackSummary& a, const TrackSummary& b, double gamma);

// Minimum-cost one-to-one matching on pairwise gallery distances, padded to
// square with cs_threshold dummies; matched pairs beyond cs_threshold are
// dropped. Minimizing summed distance maximizes the product of pairwise
// similarities exactly (monotone transform).
MatchSet associate_pair(const std::vector<TrackSummary>& sa,
                        const std::vector<TrackSummary>& sb, const RunConfig& cfg);

using TrackKey = std::pair<int, int>;  // (sensor_id, local_track_id)

// Connected components of the match graph; each component's global id is the
// lexicographically smallest member's self id. Tracks that appear in no
// match keep their self id (see global_id_or_self).
std::map<TrackKey, std::int64_t> resolve_identities(const std::vector<MatchSet>& matches);

std::int64_t global_id_or_self(const std::map<TrackKey, std::int64_t>& ids, int sensor_id,
                               int local_track_id);

// Components with two or more tracks from one sensor; kept as a single
// identity but worth surfacing.
int count_conflicting_components(const std::vector<MatchSet>& matches);

// Every track in a matched component gets the merged gallery of all
// component members; singletons pass through unchanged.
std::vector<TrackSummary> merge_matched_galleries(std::vector<TrackSummary> summaries,
                                                  const std::vector<MatchSet>& matches);

}  // namespace dmst
