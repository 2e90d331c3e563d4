#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dmst/core.hpp"

namespace dmst {

struct Rect {
  double x = 0, y = 0, w = 0, h = 0;
  bool contains(double px, double py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
};

struct SensorLayout {
  Rect fov;                 // footprint in the shared world plane
  double view_angle = 0.0;  // camera facing direction, radians
};

// Synthetic world: people walk between waypoints in a shared 2-D plane;
// sensors observe rectangular footprints and emit detections with an
// orientation-dependent appearance model, so the pipeline can be scored
// against exact ground truth.
struct WorldSpec {
  int n_people = 0;
  int n_f = 16;
  Rect world;
  std::vector<SensorLayout> sensors;
  double speed = 2.0;  // px/frame
  // Optional explicit waypoint list per person; people without one wander
  // between random waypoints. A person stops at their final waypoint.
  std::vector<std::vector<std::pair<double, double>>> waypoints;

  int sector_count = 4;        // orientation sectors of the embedding model
  double base_scale = 1.0;     // norm of per-identity base embeddings
  double sector_spread = 0.5;  // norm of per-(identity, sector) offsets
  double feature_noise = 0.0;  // sigma_f, per-component embedding noise
  double pos_noise = 0.0;      // sigma_z, px, on the measured box center
  double miss_prob = 0.0;
  double clutter_rate = 0.0;   // expected clutter detections per sensor frame

  double shoulder_px = 16.0;
  double torso_px = 45.0;
  double hip_ratio = 0.6;      // hip width relative to shoulder width
  double kp_dropout = 0.0;     // probability a keypoint confidence drops to 0

  double box_w = 40.0;
  double box_h = 100.0;
};

void validate_spec(const WorldSpec& spec);
WorldSpec load_world_spec(const std::string& path);

struct GtBox {
  int gt_id = 0;
  BBox box;
  double heading = 0.0;  // world-plane walking direction, radians
};

struct GroundTruth {
  // [sensor][frame] -> boxes visible in that sensor's footprint.
  std::vector<std::vector<std::vector<GtBox>>> by_sensor_frame;
};

struct Simulation {
  DetectionStreams streams;
  GroundTruth truth;
  int n_f = 0;
};

Simulation generate(const WorldSpec& spec, int n_frames, std::uint64_t seed);

// Detection file: a "n_f=<k>" header line, then one comma-separated record
// per detection: sensor, frame, box x/y/w/h, n_f embedding values, four
// keypoints as x,y,c (shoulders right/left, hips right/left), and an
// optional trailing gt_id. Numbers round-trip exactly.
void write_detections(const std::string& path, const DetectionStreams& streams, int n_f);

struct LoadedDetections {
  DetectionStreams streams;
  int n_f = 0;
};
LoadedDetections load_detections(const std::string& path);

void write_ground_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace dmst
