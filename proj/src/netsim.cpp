#include "dmst/netsim.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstring>
#include <future>
#include <sstream>

#include "dmst/kv.hpp"
#include "dmst/orientation.hpp"
#include "dmst/rng.hpp"

namespace dmst {

namespace {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& b, float v) {
  put_u32(b, std::bit_cast<std::uint32_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(take(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(take(4))); }
  std::size_t offset() const { return off_; }
  bool exhausted() const { return off_ == bytes_.size(); }

 private:
  std::uint64_t take(std::size_t n) {
    if (off_ + n > bytes_.size())
      fail(ErrorCode::MalformedMessage,
           "message truncated at byte " + std::to_string(bytes_.size()) +
               " (needed " + std::to_string(off_ + n) + ")");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(bytes_[off_ + i]) << (8 * i);
    off_ += n;
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t off_ = 0;
};

std::uint32_t clamp_u32(std::int64_t v) {
  if (v < 0) return 0;
  return static_cast<std::uint32_t>(std::min<std::int64_t>(v, 0xffffffffLL));
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string join_ints64(const std::vector<std::int64_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

std::vector<std::uint8_t> encode_message(const GalleryMessage& m) {
  std::vector<std::uint8_t> out;
  put_u16(out, m.version);
  put_u16(out, m.sensor_id);
  put_u32(out, m.batch_index);
  put_u32(out, static_cast<std::uint32_t>(m.entries.size()));
  for (const GalleryMessage::Entry& e : m.entries) {
    put_u32(out, e.track_id);
    put_u32(out, e.first_frame);
    put_u32(out, e.last_frame);
    for (int l = 0; l < e.gallery.bins(); ++l) {
      const std::uint32_t count = clamp_u32(e.gallery.bin_count(l));
      put_u32(out, count);
      if (count == 0) continue;
      const Eigen::VectorXd& mean = e.gallery.bin_mean(l);
      for (int k = 0; k < mean.size(); ++k) put_f32(out, static_cast<float>(mean(k)));
    }
  }
  return out;
}

GalleryMessage decode_message(std::span<const std::uint8_t> bytes, int L, int n_f) {
  if (L < 1 || n_f < 1) fail(ErrorCode::Internal, "decode needs L >= 1 and n_f >= 1");
  Reader r(bytes);
  GalleryMessage m;
  m.version = r.u16();
  if (m.version != kWireVersion)
    fail(ErrorCode::MalformedMessage,
         "unsupported message version " + std::to_string(m.version));
  m.sensor_id = r.u16();
  m.batch_index = r.u32();
  const std::uint32_t n_entries = r.u32();
  m.entries.reserve(std::min<std::uint32_t>(n_entries, 4096));
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    GalleryMessage::Entry e;
    e.track_id = r.u32();
    e.first_frame = r.u32();
    e.last_frame = r.u32();
    e.gallery = BinnedGallery(L, n_f);
    for (int l = 0; l < L; ++l) {
      const std::uint32_t count = r.u32();
      if (count == 0) continue;
      Eigen::VectorXd mean(n_f);
      for (int k = 0; k < n_f; ++k) mean(k) = static_cast<double>(r.f32());
      e.gallery.restore_slot(l, std::move(mean), count);
    }
    m.entries.push_back(std::move(e));
  }
  if (!r.exhausted())
    fail(ErrorCode::MalformedMessage,
         "trailing bytes after entry " + std::to_string(n_entries) + " at offset " +
             std::to_string(r.offset()));
  return m;
}

GalleryMessage to_message(int sensor_id, int batch_index,
                          const std::vector<TrackSummary>& summaries) {
  GalleryMessage m;
  m.sensor_id = static_cast<std::uint16_t>(sensor_id);
  m.batch_index = static_cast<std::uint32_t>(batch_index);
  m.entries.reserve(summaries.size());
  for (const TrackSummary& s : summaries) {
    GalleryMessage::Entry e;
    e.track_id = static_cast<std::uint32_t>(s.identity.local_track_id);
    e.first_frame = static_cast<std::uint32_t>(s.first_frame);
    e.last_frame = static_cast<std::uint32_t>(s.last_frame);
    e.gallery = s.gallery;
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<TrackSummary> from_message(const GalleryMessage& m) {
  std::vector<TrackSummary> out;
  out.reserve(m.entries.size());
  for (const GalleryMessage::Entry& e : m.entries) {
    TrackSummary s;
    s.identity.sensor_id = m.sensor_id;
    s.identity.local_track_id = static_cast<int>(e.track_id);
    s.first_frame = static_cast<int>(e.first_frame);
    s.last_frame = static_cast<int>(e.last_frame);
    s.gallery = e.gallery;
    out.push_back(std::move(s));
  }
  return out;
}

SensorNode::SensorNode(int sensor_id, const RunConfig& cfg, BinBoundaries bins)
    : sensor_id_(sensor_id) {
  validate_config(cfg);
  ctx_.cfg = cfg;
  ctx_.model = MotionModel::constant_velocity(cfg.dt, cfg.noise);
  ctx_.bins = std::move(bins);
  particles_.resize(cfg.n_p);
  for (Particle& p : particles_) p.weight = 1.0 / cfg.n_p;
}

std::vector<TrackSummary> SensorNode::run_batch(
    std::span<const std::vector<Detection>> frames) {
  for (const std::vector<Detection>& dets : frames) {
    const int frame = frame_cursor_++;
    for (std::size_t i = 0; i < particles_.size(); ++i) {
      Rng rng(derive_seed(ctx_.cfg.seed, "ws-step",
                          (static_cast<std::uint64_t>(sensor_id_) << 32) |
                              static_cast<std::uint32_t>(frame),
                          i));
      step_particle(particles_[i], frame, dets, ctx_, rng);
    }
    normalize_weights(particles_);
    Rng rrng(derive_seed(ctx_.cfg.seed, "ws-resample", sensor_id_, frame));
    particles_ = resample(std::move(particles_), ctx_.cfg, rrng);
  }

  // Commit the MAP hypothesis and collapse the set onto it.
  Particle committed = map_particle(particles_);
  std::vector<TrackSummary> summaries;
  summaries.reserve(committed.tracks.size());
  for (auto& [id, t] : committed.tracks) {
    auto& ct = committed_[id];
    if (ct.boxes.empty()) ct.first_frame = t.first_frame;
    ct.last_frame = t.last_seen;
    ct.boxes.insert(ct.boxes.end(), t.batch_boxes.begin(), t.batch_boxes.end());
    t.batch_boxes.clear();

    TrackSummary s;
    s.identity = Identity{sensor_id_, id, std::nullopt};
    s.gallery = t.gallery;
    s.first_frame = t.first_frame;
    s.last_frame = t.last_seen;
    summaries.push_back(std::move(s));
  }
  for (auto& [frame, records] : committed.history) {
    absorbed_ += static_cast<std::int64_t>(records.size());
    committed_history_.emplace_back(frame, records);
  }
  committed.history.clear();
  committed.weight = 1.0 / particles_.size();
  particles_.assign(particles_.size(), committed);
  ++batch_index_;
  return summaries;
}

void SensorNode::apply_fused_galleries(const std::map<TrackKey, BinnedGallery>& fused) {
  for (Particle& p : particles_)
    for (auto& [id, t] : p.tracks) {
      const auto it = fused.find({sensor_id_, id});
      if (it != fused.end()) t.fused = it->second;
    }
}

std::string format_batch_report(const BatchReport& r) {
  std::ostringstream os;
  os << "batch=" << r.batch_index << " matches=" << r.matches_applied
     << " conflicts=" << r.conflicts << " wall_ms=" << r.wall_ms
     << " tracks=" << join_ints(r.track_counts)
     << " bytes=" << join_ints64(r.payload_bytes)
     << " full_gallery=" << join_ints64(r.full_gallery_features);
  return os.str();
}

BatchReport parse_batch_report(const std::string& line) {
  BatchReport r;
  for (const std::string& field : split(trim(line), ' ')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError, "bad batch report field: " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "batch") r.batch_index = static_cast<int>(parse_int(value, key));
    else if (key == "matches") r.matches_applied = static_cast<int>(parse_int(value, key));
    else if (key == "conflicts") r.conflicts = static_cast<int>(parse_int(value, key));
    else if (key == "wall_ms") r.wall_ms = parse_double(value, key);
    else if (key == "tracks")
      for (const std::string& s : split(value, ','))
        r.track_counts.push_back(static_cast<int>(parse_int(s, key)));
    else if (key == "bytes")
      for (const std::string& s : split(value, ','))
        r.payload_bytes.push_back(parse_int(s, key));
    else if (key == "full_gallery")
      for (const std::string& s : split(value, ','))
        r.full_gallery_features.push_back(parse_int(s, key));
    else
      fail(ErrorCode::ParseError, "unknown batch report key: " + key);
  }
  return r;
}

SystemResult run_system(const DetectionStreams& streams, const RunConfig& cfg0) {
  const RunConfig& cfg = validate_config(cfg0);
  const int n_sensors = static_cast<int>(streams.size());
  if (n_sensors == 0) fail(ErrorCode::InvalidConfig, "no sensor streams");

  std::size_t n_frames = 0;
  for (const auto& frames : streams) n_frames = std::max(n_frames, frames.size());
  for (const auto& frames : streams)
    for (const auto& dets : frames)
      for (const Detection& d : dets) validate_detection(d, cfg.n_f);

  // Bin boundaries per sensor: fixed uniform edges, or k-means calibrated on
  // the sensor's own ratio distribution before filtering starts.
  std::vector<SensorNode> nodes;
  nodes.reserve(n_sensors);
  for (int c = 0; c < n_sensors; ++c) {
    BinBoundaries bins;
    if (cfg.bin_mode == BinMode::Uniform) {
      bins = uniform_bins(cfg.L);
    } else {
      std::vector<double> ratios;
      for (const auto& dets : streams[c])
        for (const Detection& d : dets) {
          try {
            ratios.push_back(s2t_ratio(d.keypoints));
          } catch (const Error&) {
          }
        }
      bins = kmeans_bins(std::move(ratios), cfg.L);
    }
    nodes.emplace_back(c, cfg, std::move(bins));
  }

  SystemResult result;
  std::vector<MatchSet> all_matches;
  const std::vector<Detection> kEmptyFrame;

  int batch_index = 0;
  for (std::size_t start = 0; start < n_frames; start += cfg.batch_len, ++batch_index) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t stop = std::min(n_frames, start + cfg.batch_len);

    std::vector<std::future<std::vector<TrackSummary>>> futures;
    futures.reserve(n_sensors);
    for (int c = 0; c < n_sensors; ++c) {
      futures.push_back(std::async(std::launch::async, [&, c] {
        std::vector<std::vector<Detection>> slice;
        slice.reserve(stop - start);
        for (std::size_t f = start; f < stop; ++f)
          slice.push_back(f < streams[c].size() ? streams[c][f] : kEmptyFrame);
        return nodes[c].run_batch(slice);
      }));
    }
    std::vector<std::vector<TrackSummary>> summaries(n_sensors);
    for (int c = 0; c < n_sensors; ++c) summaries[c] = futures[c].get();

    BatchReport report;
    report.batch_index = batch_index;
    report.track_counts.resize(n_sensors, 0);
    report.payload_bytes.resize(n_sensors, 0);
    report.full_gallery_features.resize(n_sensors, 0);
    for (int c = 0; c < n_sensors; ++c) {
      report.track_counts[c] = static_cast<int>(summaries[c].size());
      report.full_gallery_features[c] = nodes[c].full_gallery_features();
    }

    if (n_sensors >= 2) {
      // Broadcast: every sensor emits one message; association and merging
      // run on the decoded copies, so they see exactly what went on the wire.
      std::vector<std::vector<TrackSummary>> received(n_sensors);
      for (int c = 0; c < n_sensors; ++c) {
        const std::vector<std::uint8_t> bytes =
            encode_message(to_message(c, batch_index, summaries[c]));
        report.payload_bytes[c] = static_cast<std::int64_t>(bytes.size());
        received[c] = from_message(decode_message(bytes, cfg.L, cfg.n_f));
      }

      // Ring schedule over sensor pairs.
      std::vector<std::pair<int, int>> ring;
      if (n_sensors == 2) {
        ring.emplace_back(0, 1);
      } else {
        for (int c = 0; c < n_sensors; ++c) ring.emplace_back(c, (c + 1) % n_sensors);
      }
      for (const auto& [a, b] : ring) {
        MatchSet ms = associate_pair(received[a], received[b], cfg);
        report.matches_applied += static_cast<int>(ms.pairs.size());
        all_matches.push_back(std::move(ms));
      }
      report.conflicts = count_conflicting_components(all_matches);

      std::vector<TrackSummary> pooled;
      for (int c = 0; c < n_sensors; ++c)
        pooled.insert(pooled.end(), received[c].begin(), received[c].end());
      const std::vector<TrackSummary> merged = merge_matched_galleries(pooled, all_matches);
      std::map<TrackKey, BinnedGallery> fused;
      for (const TrackSummary& s : merged)
        fused.emplace(TrackKey{s.identity.sensor_id, s.identity.local_track_id}, s.gallery);
      for (SensorNode& node : nodes) node.apply_fused_galleries(fused);
    }

    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    result.reports.push_back(std::move(report));
  }

  const std::map<TrackKey, std::int64_t> ids = resolve_identities(all_matches);
  for (const SensorNode& node : nodes) {
    TrackSet ts;
    ts.sensor_id = node.sensor_id();
    for (const auto& [id, ct] : node.committed_tracks()) {
      Trajectory tr;
      tr.local_track_id = id;
      tr.global_id = global_id_or_self(ids, node.sensor_id(), id);
      tr.first_frame = ct.first_frame;
      tr.last_frame = ct.last_frame;
      tr.boxes = ct.boxes;
      ts.tracks.push_back(std::move(tr));
    }
    result.track_sets.push_back(std::move(ts));
  }
  return result;
}

}  // namespace dmst
