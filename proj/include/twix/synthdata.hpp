#pragma once

#include <cstdint>
#include <string>

#include "twix/ingestion.hpp"

namespace twix {

enum class MotionRegime { LINEAR, CIRCULAR, ERRATIC, LOW_FPS };

MotionRegime parse_regime(const std::string& name);

// Synthetic scene: ground-truth trajectories per regime plus a detector
// noise model (jitter, misses, false positives, full occlusion windows).
struct ScenarioConfig {
  MotionRegime regime = MotionRegime::LINEAR;
  int num_objects = 10;
  int num_frames = 600;
  double fps = 20.0;
  int image_width = 1280;
  int image_height = 720;

  double min_width = 30.0;   // object sizes drawn once per object
  double max_width = 60.0;
  double min_aspect = 0.3;   // w/h, pedestrian-like preset
  double max_aspect = 0.6;
  double min_speed = 150.0;  // px/s
  double max_speed = 350.0;

  double center_jitter_std = 0.0;  // px
  double size_jitter_std = 0.0;    // px
  double miss_prob = 0.0;
  double fp_rate = 0.0;            // expected false positives per frame

  int occlusions_per_object = 0;   // full-occlusion windows per object
  double occ_min_duration = 0.4;   // seconds
  double occ_max_duration = 1.0;

  int low_fps_subsample = 4;       // LOW_FPS: simulate at fps*k, keep every k-th frame
};

ScenarioConfig scenario_from_config(const class Config& cfg);

// Deterministic per seed. GT tracks cover every frame (visibility 0 while
// occluded); detections drop occluded frames and misses, jitter the boxes,
// and add false positives.
Sequence generate(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace twix
