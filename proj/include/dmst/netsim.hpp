#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dmst/core.hpp"
#include "dmst/cross_sensor.hpp"
#include "dmst/within_sensor.hpp"

namespace dmst {

inline constexpr std::uint16_t kWireVersion = 1;

// The cross-sensor payload. Canonical little-endian encoding:
//   header:    version u16, sensor u16, batch u32, entry count u32
//   per entry: track u32, first_frame u32, last_frame u32,
//              then L slots: count u32, and if count > 0, n_f f32 mean values
// L and n_f are run-level constants shared by all sensors, not transmitted.
struct GalleryMessage {
  std::uint16_t version = kWireVersion;
  std::uint16_t sensor_id = 0;
  std::uint32_t batch_index = 0;

  struct Entry {
    std::uint32_t track_id = 0;
    std::uint32_t first_frame = 0;
    std::uint32_t last_frame = 0;
    BinnedGallery gallery;
  };
  std::vector<Entry> entries;
};

std::vector<std::uint8_t> encode_message(const GalleryMessage& m);
GalleryMessage decode_message(std::span<const std::uint8_t> bytes, int L, int n_f);

GalleryMessage to_message(int sensor_id, int batch_index,
                          const std::vector<TrackSummary>& summaries);
std::vector<TrackSummary> from_message(const GalleryMessage& m);

// Committed (MAP) trajectory of one local track.
struct CommittedTrack {
  int first_frame = 0;
  int last_frame = 0;
  std::vector<std::pair<int, BBox>> boxes;  // assigned frames only
};

// One sensor's tracker: an RBPF advanced batch by batch. At every batch end
// the set collapses onto the MAP particle, which becomes the committed
// estimate and the content of the outgoing gallery message.
class SensorNode {
 public:
  SensorNode(int sensor_id, const RunConfig& cfg, BinBoundaries bins);

  int sensor_id() const { return sensor_id_; }
  int frame_cursor() const { return frame_cursor_; }
  int batch_index() const { return batch_index_; }

  // Advances the filter over one batch of frames (the final batch may be
  // shorter) and returns summaries of every track in the committed estimate,
  // terminated ones included: association across non-overlapping visits
  // needs completed trajectories.
  std::vector<TrackSummary> run_batch(std::span<const std::vector<Detection>> frames);

  // Installs post-association galleries for the next batch.
  void apply_fused_galleries(const std::map<TrackKey, BinnedGallery>& fused);

  const std::map<int, CommittedTrack>& committed_tracks() const { return committed_; }
  const std::vector<std::pair<int, FrameAssignments>>& committed_history() const {
    return committed_history_;
  }
  // Features a keep-everything gallery would have retained by now. Computed
  // for accounting only, never transmitted.
  std::int64_t full_gallery_features() const { return absorbed_; }

 private:
  int sensor_id_;
  FilterContext ctx_;
  std::vector<Particle> particles_;
  int frame_cursor_ = 0;
  int batch_index_ = 0;
  std::map<int, CommittedTrack> committed_;
  std::vector<std::pair<int, FrameAssignments>> committed_history_;
  std::int64_t absorbed_ = 0;
};

struct BatchReport {
  int batch_index = 0;
  std::vector<int> track_counts;                   // per sensor
  std::vector<std::int64_t> payload_bytes;         // per sensor
  std::vector<std::int64_t> full_gallery_features; // per sensor, cumulative
  int matches_applied = 0;
  int conflicts = 0;
  double wall_ms = 0.0;
};

// One line per batch; per-sensor fields are comma-joined in sensor order.
std::string format_batch_report(const BatchReport& r);
BatchReport parse_batch_report(const std::string& line);

struct Trajectory {
  int local_track_id = 0;
  std::int64_t global_id = 0;
  int first_frame = 0;
  int last_frame = 0;
  std::vector<std::pair<int, BBox>> boxes;
};

struct TrackSet {
  int sensor_id = 0;
  std::vector<Trajectory> tracks;
};

struct SystemResult {
  std::vector<TrackSet> track_sets;
  std::vector<BatchReport> reports;
};

// The full decentralized cycle: per-batch concurrent single-sensor tracking,
// gallery-message broadcast (encoded and decoded for real, so association
// sees wire precision), ring-schedule pairwise association, identity
// resolution, and gallery merging.
SystemResult run_system(const DetectionStreams& streams, const RunConfig& cfg);

}  // namespace dmst
