#include "dmst/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "dmst/kv.hpp"
#include "dmst/rng.hpp"

namespace dmst {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTau);
  return a < 0 ? a + kTau : a;
}

// Sector 0 is centered on "walking away from the camera".
int sector_of(double heading, double view_angle, int count) {
  const double rel = wrap_angle(heading - view_angle + std::numbers::pi / count);
  return std::min(count - 1, static_cast<int>(rel / (kTau / count)));
}

Eigen::VectorXd random_direction(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = gauss(rng);
  const double norm = v.norm();
  return norm > 0 ? (v / norm).eval() : Eigen::VectorXd::Unit(n, 0).eval();
}

TorsoKeypoints torso_keypoints(double cx, double cy, double rel_heading,
                               const WorldSpec& spec, Rng& rng) {
  // Apparent shoulder half-width: full and positive when facing away, zero in
  // profile, full and negative when facing the camera.
  const double half = spec.shoulder_px * std::cos(rel_heading);
  const double sy = cy - 0.5 * spec.torso_px;
  const double hy = cy + 0.5 * spec.torso_px;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto conf = [&] { return unif(rng) < spec.kp_dropout ? 0.0 : 1.0; };
  TorsoKeypoints kp;
  kp.right_shoulder = {cx + half, sy, conf()};
  kp.left_shoulder = {cx - half, sy, conf()};
  kp.right_hip = {cx + spec.hip_ratio * half, hy, conf()};
  kp.left_hip = {cx - spec.hip_ratio * half, hy, conf()};
  return kp;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate_spec(const WorldSpec& spec) {
  if (spec.n_people < 0) fail(ErrorCode::InvalidSpec, "n_people must be >= 0");
  if (spec.n_f < 1) fail(ErrorCode::InvalidSpec, "n_f must be >= 1");
  if (!(spec.world.w > 0) || !(spec.world.h > 0))
    fail(ErrorCode::InvalidSpec, "world must have positive size");
  if (spec.sensors.empty()) fail(ErrorCode::InvalidSpec, "at least one sensor required");
  for (const SensorLayout& s : spec.sensors)
    if (!(s.fov.w > 0) || !(s.fov.h > 0))
      fail(ErrorCode::InvalidSpec, "sensor fov must have positive size");
  if (!(spec.speed > 0)) fail(ErrorCode::InvalidSpec, "speed must be > 0");
  if (spec.sector_count < 1) fail(ErrorCode::InvalidSpec, "sector_count must be >= 1");
  for (double v : {spec.base_scale, spec.sector_spread, spec.feature_noise, spec.pos_noise,
                   spec.clutter_rate})
    if (!(v >= 0)) fail(ErrorCode::InvalidSpec, "scales and noise levels must be >= 0");
  for (double p : {spec.miss_prob, spec.kp_dropout})
    if (!(p >= 0 && p <= 1)) fail(ErrorCode::InvalidSpec, "probabilities must be in [0, 1]");
  if (!(spec.shoulder_px > 0) || !(spec.torso_px > 0) || !(spec.hip_ratio > 0))
    fail(ErrorCode::InvalidSpec, "torso geometry must be positive");
  if (!(spec.box_w > 0) || !(spec.box_h > 0))
    fail(ErrorCode::InvalidSpec, "box size must be positive");
  if (!spec.waypoints.empty() &&
      static_cast<int>(spec.waypoints.size()) != spec.n_people)
    fail(ErrorCode::InvalidSpec, "waypoints must list every person or none");
  for (const auto& wp : spec.waypoints)
    if (wp.empty()) fail(ErrorCode::InvalidSpec, "waypoint lists must be non-empty");
}

Simulation generate(const WorldSpec& spec, int n_frames, std::uint64_t seed) {
  validate_spec(spec);
  if (n_frames < 0) fail(ErrorCode::InvalidSpec, "n_frames must be >= 0");
  Rng rng(derive_seed(seed, "scenario"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Identity appearance model: unit base vector per person plus one offset
  // per (person, orientation sector).
  std::vector<Eigen::VectorXd> base(spec.n_people);
  std::vector<std::vector<Eigen::VectorXd>> sector_offset(spec.n_people);
  for (int p = 0; p < spec.n_people; ++p) {
    base[p] = spec.base_scale * random_direction(spec.n_f, rng);
    sector_offset[p].resize(spec.sector_count);
    for (int s = 0; s < spec.sector_count; ++s)
      sector_offset[p][s] = spec.sector_spread * random_direction(spec.n_f, rng);
  }
  double mean_base_norm = 0.0;
  for (const Eigen::VectorXd& b : base) mean_base_norm += b.norm();
  mean_base_norm = spec.n_people > 0 ? mean_base_norm / spec.n_people : 1.0;

  struct PersonState {
    double x = 0, y = 0, heading = 0;
    std::vector<std::pair<double, double>> route;
    std::size_t next = 0;
    bool roaming = false;  // draws fresh random waypoints forever
  };
  const auto random_point = [&] {
    return std::pair<double, double>{spec.world.x + unif(rng) * spec.world.w,
                                     spec.world.y + unif(rng) * spec.world.h};
  };
  std::vector<PersonState> people(spec.n_people);
  for (int p = 0; p < spec.n_people; ++p) {
    PersonState& ps = people[p];
    if (!spec.waypoints.empty()) {
      ps.route = spec.waypoints[p];
      std::tie(ps.x, ps.y) = ps.route.front();
      ps.next = 1;
    } else {
      ps.roaming = true;
      std::tie(ps.x, ps.y) = random_point();
      ps.route.push_back(random_point());
      ps.next = 0;
    }
  }

  const int n_sensors = static_cast<int>(spec.sensors.size());
  Simulation sim;
  sim.n_f = spec.n_f;
  sim.streams.assign(n_sensors, std::vector<std::vector<Detection>>(n_frames));
  sim.truth.by_sensor_frame.assign(n_sensors, std::vector<std::vector<GtBox>>(n_frames));

  for (int frame = 0; frame < n_frames; ++frame) {
    for (int p = 0; p < spec.n_people; ++p) {
      PersonState& ps = people[p];
      // Walk toward the current waypoint; stop at an explicit route's end.
      if (ps.next < ps.route.size()) {
        const auto [tx, ty] = ps.route[ps.next];
        const double dx = tx - ps.x, dy = ty - ps.y;
        const double dist = std::hypot(dx, dy);
        if (dist <= spec.speed) {
          ps.x = tx;
          ps.y = ty;
          if (ps.roaming) {
            ps.route[ps.next] = random_point();
          } else {
            ++ps.next;
          }
        } else {
          ps.heading = std::atan2(dy, dx);
          ps.x += spec.speed * dx / dist;
          ps.y += spec.speed * dy / dist;
        }
      }

      for (int c = 0; c < n_sensors; ++c) {
        const SensorLayout& sensor = spec.sensors[c];
        if (!sensor.fov.contains(ps.x, ps.y)) continue;
        const double lx = ps.x - sensor.fov.x;
        const double ly = ps.y - sensor.fov.y;
        sim.truth.by_sensor_frame[c][frame].push_back(
            {p, {lx - 0.5 * spec.box_w, ly - 0.5 * spec.box_h, spec.box_w, spec.box_h},
             ps.heading});
        if (unif(rng) < spec.miss_prob) continue;

        Detection d;
        d.sensor_id = c;
        d.frame = frame;
        const double mx = lx + spec.pos_noise * gauss(rng);
        const double my = ly + spec.pos_noise * gauss(rng);
        d.bbox = {mx - 0.5 * spec.box_w, my - 0.5 * spec.box_h, spec.box_w, spec.box_h};
        const int sector = sector_of(ps.heading, sensor.view_angle, spec.sector_count);
        d.embedding = base[p] + sector_offset[p][sector];
        for (int k = 0; k < spec.n_f; ++k) d.embedding(k) += spec.feature_noise * gauss(rng);
        d.keypoints = torso_keypoints(mx, my, ps.heading - sensor.view_angle, spec, rng);
        d.gt_id = p;
        sim.streams[c][frame].push_back(std::move(d));
      }
    }

    // Clutter: random embeddings on the sphere of the mean base norm.
    for (int c = 0; c < n_sensors; ++c) {
      if (spec.clutter_rate <= 0) continue;
      const SensorLayout& sensor = spec.sensors[c];
      std::poisson_distribution<int> poisson(spec.clutter_rate);
      const int k = poisson(rng);
      for (int i = 0; i < k; ++i) {
        Detection d;
        d.sensor_id = c;
        d.frame = frame;
        const double lx = unif(rng) * sensor.fov.w;
        const double ly = unif(rng) * sensor.fov.h;
        d.bbox = {lx - 0.5 * spec.box_w, ly - 0.5 * spec.box_h, spec.box_w, spec.box_h};
        d.embedding = mean_base_norm * random_direction(spec.n_f, rng);
        d.keypoints = torso_keypoints(lx, ly, unif(rng) * kTau, spec, rng);
        d.gt_id = std::nullopt;
        sim.streams[c][frame].push_back(std::move(d));
      }
    }
  }
  return sim;
}

WorldSpec load_world_spec(const std::string& path) {
  WorldSpec spec;
  const auto parse_rect = [](const std::string& value, const std::string& key) {
    const auto parts = split(value, ',');
    if (parts.size() != 4)
      fail(ErrorCode::InvalidSpec, key + " needs 4 comma-separated values");
    return Rect{parse_double(parts[0], key), parse_double(parts[1], key),
                parse_double(parts[2], key), parse_double(parts[3], key)};
  };
  for (const auto& [key, value] : read_kv_file(path)) {
    if (key == "n_people") spec.n_people = static_cast<int>(parse_int(value, key));
    else if (key == "n_f") spec.n_f = static_cast<int>(parse_int(value, key));
    else if (key == "world") spec.world = parse_rect(value, key);
    else if (key == "sensor") {
      const auto parts = split(value, ',');
      if (parts.size() != 4 && parts.size() != 5)
        fail(ErrorCode::InvalidSpec, "sensor needs x,y,w,h[,view_deg]");
      SensorLayout s;
      s.fov = Rect{parse_double(parts[0], key), parse_double(parts[1], key),
                   parse_double(parts[2], key), parse_double(parts[3], key)};
      if (parts.size() == 5)
        s.view_angle = parse_double(parts[4], key) * std::numbers::pi / 180.0;
      spec.sensors.push_back(s);
    } else if (key == "speed") spec.speed = parse_double(value, key);
    else if (key == "waypoints") {
      std::vector<std::pair<double, double>> route;
      for (const std::string& point : split(value, ';')) {
        const auto xy = split(point, ',');
        if (xy.size() != 2) fail(ErrorCode::InvalidSpec, "waypoints need x,y pairs");
        route.emplace_back(parse_double(xy[0], key), parse_double(xy[1], key));
      }
      spec.waypoints.push_back(std::move(route));
    } else if (key == "sector_count") spec.sector_count = static_cast<int>(parse_int(value, key));
    else if (key == "base_scale") spec.base_scale = parse_double(value, key);
    else if (key == "sector_spread") spec.sector_spread = parse_double(value, key);
    else if (key == "feature_noise") spec.feature_noise = parse_double(value, key);
    else if (key == "pos_noise") spec.pos_noise = parse_double(value, key);
    else if (key == "miss_prob") spec.miss_prob = parse_double(value, key);
    else if (key == "clutter_rate") spec.clutter_rate = parse_double(value, key);
    else if (key == "shoulder_px") spec.shoulder_px = parse_double(value, key);
    else if (key == "torso_px") spec.torso_px = parse_double(value, key);
    else if (key == "hip_ratio") spec.hip_ratio = parse_double(value, key);
    else if (key == "kp_dropout") spec.kp_dropout = parse_double(value, key);
    else if (key == "box_w") spec.box_w = parse_double(value, key);
    else if (key == "box_h") spec.box_h = parse_double(value, key);
    else fail(ErrorCode::InvalidSpec, "unknown world spec key: " + key);
  }
  if (spec.world.w == 0 && spec.world.h == 0 && !spec.sensors.empty()) {
    // Default world: bounding box of the sensor footprints.
    double x0 = spec.sensors[0].fov.x, y0 = spec.sensors[0].fov.y;
    double x1 = x0 + spec.sensors[0].fov.w, y1 = y0 + spec.sensors[0].fov.h;
    for (const SensorLayout& s : spec.sensors) {
      x0 = std::min(x0, s.fov.x);
      y0 = std::min(y0, s.fov.y);
      x1 = std::max(x1, s.fov.x + s.fov.w);
      y1 = std::max(y1, s.fov.y + s.fov.h);
    }
    spec.world = {x0, y0, x1 - x0, y1 - y0};
  }
  validate_spec(spec);
  return spec;
}

void write_detections(const std::string& path, const DetectionStreams& streams, int n_f) {
  std::ostringstream out;
  out << "n_f=" << n_f << "\n";
  for (const auto& frames : streams)
    for (const auto& dets : frames)
      for (const Detection& d : dets) {
        out << d.sensor_id << ',' << d.frame << ',' << format_double(d.bbox.x) << ','
            << format_double(d.bbox.y) << ',' << format_double(d.bbox.w) << ','
            << format_double(d.bbox.h);
        for (int k = 0; k < d.embedding.size(); ++k)
          out << ',' << format_double(d.embedding(k));
        for (const Keypoint* kp :
             {&d.keypoints.right_shoulder, &d.keypoints.left_shoulder,
              &d.keypoints.right_hip, &d.keypoints.left_hip})
          out << ',' << format_double(kp->x) << ',' << format_double(kp->y) << ','
              << format_double(kp->c);
        if (d.gt_id) out << ',' << *d.gt_id;
        out << '\n';
      }
  write_text_file(path, out.str());
}

LoadedDetections load_detections(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;

  int n_f = -1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("n_f=", 0) != 0)
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": expected 'n_f=<dim>' header");
    n_f = static_cast<int>(parse_int(line.substr(4), "n_f"));
    break;
  }
  if (n_f < 1) fail(ErrorCode::ParseError, "missing or invalid n_f header");

  LoadedDetections out;
  out.n_f = n_f;
  const std::size_t base_fields = 2 + 4 + static_cast<std::size_t>(n_f) + 12;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != base_fields && fields.size() != base_fields + 1)
      fail(ErrorCode::ParseError,
           where + ": expected " + std::to_string(base_fields) + " or " +
               std::to_string(base_fields + 1) + " fields, got " +
               std::to_string(fields.size()));
    try {
      Detection d;
      std::size_t i = 0;
      d.sensor_id = static_cast<int>(parse_int(fields[i++], "sensor_id"));
      d.frame = static_cast<int>(parse_int(fields[i++], "frame"));
      d.bbox.x = parse_double(fields[i++], "bbox.x");
      d.bbox.y = parse_double(fields[i++], "bbox.y");
      d.bbox.w = parse_double(fields[i++], "bbox.w");
      d.bbox.h = parse_double(fields[i++], "bbox.h");
      d.embedding.resize(n_f);
      for (int k = 0; k < n_f; ++k) d.embedding(k) = parse_double(fields[i++], "embedding");
      for (Keypoint* kp : {&d.keypoints.right_shoulder, &d.keypoints.left_shoulder,
                           &d.keypoints.right_hip, &d.keypoints.left_hip}) {
        kp->x = parse_double(fields[i++], "keypoint.x");
        kp->y = parse_double(fields[i++], "keypoint.y");
        kp->c = parse_double(fields[i++], "keypoint.c");
      }
      if (fields.size() == base_fields + 1)
        d.gt_id = static_cast<int>(parse_int(fields[i++], "gt_id"));
      if (d.sensor_id < 0) fail(ErrorCode::ParseError, "sensor_id must be >= 0");
      validate_detection(d, n_f);

      const std::size_t c = static_cast<std::size_t>(d.sensor_id);
      const std::size_t f = static_cast<std::size_t>(d.frame);
      if (out.streams.size() <= c) out.streams.resize(c + 1);
      if (out.streams[c].size() <= f) out.streams[c].resize(f + 1);
      out.streams[c][f].push_back(std::move(d));
    } catch (const Error& e) {
      fail(e.code() == ErrorCode::DimensionMismatch ? e.code() : ErrorCode::ParseError,
           where + ": " + e.what());
    }
  }
  // Align every sensor to the same frame horizon.
  std::size_t n_frames = 0;
  for (const auto& frames : out.streams) n_frames = std::max(n_frames, frames.size());
  for (auto& frames : out.streams) frames.resize(n_frames);
  return out;
}

void write_ground_truth(const std::string& path, const GroundTruth& truth) {
  std::ostringstream out;
  out << "# sensor,frame,gt_id,x,y,w,h,heading\n";
  for (std::size_t c = 0; c < truth.by_sensor_frame.size(); ++c)
    for (std::size_t f = 0; f < truth.by_sensor_frame[c].size(); ++f)
      for (const GtBox& g : truth.by_sensor_frame[c][f])
        out << c << ',' << f << ',' << g.gt_id << ',' << format_double(g.box.x) << ','
            << format_double(g.box.y) << ',' << format_double(g.box.w) << ','
            << format_double(g.box.h) << ',' << format_double(g.heading) << '\n';
  write_text_file(path, out.str());
}

GroundTruth load_ground_truth(const std::string& path) {
  std::istringstream in(read_text_file(path));
  GroundTruth out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != 8)
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": expected 8 fields");
    const int c = static_cast<int>(parse_int(fields[0], "sensor"));
    const int f = static_cast<int>(parse_int(fields[1], "frame"));
    if (c < 0 || f < 0)
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": negative sensor or frame");
    GtBox g;
    g.gt_id = static_cast<int>(parse_int(fields[2], "gt_id"));
    g.box = {parse_double(fields[3], "x"), parse_double(fields[4], "y"),
             parse_double(fields[5], "w"), parse_double(fields[6], "h")};
    g.heading = parse_double(fields[7], "heading");
    auto& by_sensor = out.by_sensor_frame;
    if (by_sensor.size() <= static_cast<std::size_t>(c)) by_sensor.resize(c + 1);
    if (by_sensor[c].size() <= static_cast<std::size_t>(f)) by_sensor[c].resize(f + 1);
    by_sensor[c][f].push_back(g);
  }
  std::size_t n_frames = 0;
  for (const auto& frames : out.by_sensor_frame) n_frames = std::max(n_frames, frames.size());
  for (auto& frames : out.by_sensor_frame) frames.resize(n_frames);
  return out;
}

}  // namespace dmst
