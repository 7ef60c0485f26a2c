#include "twix/synthdata.hpp"

#include <algorithm>
#include <cmath>

#include "twix/config.hpp"
#include "twix/errors.hpp"
#include "twix/rng.hpp"

namespace twix {

MotionRegime parse_regime(const std::string& name) {
  if (name == "linear") return MotionRegime::LINEAR;
  if (name == "circular") return MotionRegime::CIRCULAR;
  if (name == "erratic") return MotionRegime::ERRATIC;
  if (name == "low_fps") return MotionRegime::LOW_FPS;
  throw DataError("unknown motion regime: " + name);
}

ScenarioConfig scenario_from_config(const Config& cfg) {
  ScenarioConfig s;
  s.regime = parse_regime(cfg.get_string("regime", "linear"));
  s.num_objects = cfg.get_int("num_objects", s.num_objects);
  s.num_frames = cfg.get_int("num_frames", s.num_frames);
  s.fps = cfg.get_double("fps", s.fps);
  s.image_width = cfg.get_int("width", s.image_width);
  s.image_height = cfg.get_int("height", s.image_height);
  s.min_width = cfg.get_double("min_width", s.min_width);
  s.max_width = cfg.get_double("max_width", s.max_width);
  s.min_aspect = cfg.get_double("min_aspect", s.min_aspect);
  s.max_aspect = cfg.get_double("max_aspect", s.max_aspect);
  s.min_speed = cfg.get_double("min_speed", s.min_speed);
  s.max_speed = cfg.get_double("max_speed", s.max_speed);
  s.center_jitter_std = cfg.get_double("center_jitter_std", s.center_jitter_std);
  s.size_jitter_std = cfg.get_double("size_jitter_std", s.size_jitter_std);
  s.miss_prob = cfg.get_double("miss_prob", s.miss_prob);
  s.fp_rate = cfg.get_double("fp_rate", s.fp_rate);
  s.occlusions_per_object = cfg.get_int("occ_per_object", s.occlusions_per_object);
  s.occ_min_duration = cfg.get_double("occ_min_s", s.occ_min_duration);
  s.occ_max_duration = cfg.get_double("occ_max_s", s.occ_max_duration);
  s.low_fps_subsample = cfg.get_int("low_fps_subsample", s.low_fps_subsample);
  return s;
}

namespace {

struct ObjectState {
  double w = 0, h = 0;
  double cx = 0, cy = 0;
  double vx = 0, vy = 0;      // px per simulated frame
  double orbit_cx = 0, orbit_cy = 0, orbit_r = 0, angle = 0, omega = 0;
  std::vector<std::pair<int, int>> occlusions;  // [start, end] in output frames
};

bool occluded_at(const ObjectState& o, int frame) {
  for (const auto& [a, b] : o.occlusions)
    if (frame >= a && frame <= b) return true;
  return false;
}

// Advances one simulated frame with reflection keeping the box inside.
void advance_linear(ObjectState& o, double width, double height) {
  o.cx += o.vx;
  o.cy += o.vy;
  const double min_cx = o.w / 2, max_cx = width - o.w / 2;
  const double min_cy = o.h / 2, max_cy = height - o.h / 2;
  if (o.cx < min_cx) {
    o.cx = 2 * min_cx - o.cx;
    o.vx = -o.vx;
  } else if (o.cx > max_cx) {
    o.cx = 2 * max_cx - o.cx;
    o.vx = -o.vx;
  }
  if (o.cy < min_cy) {
    o.cy = 2 * min_cy - o.cy;
    o.vy = -o.vy;
  } else if (o.cy > max_cy) {
    o.cy = 2 * max_cy - o.cy;
    o.vy = -o.vy;
  }
}

Box box_of(const ObjectState& o) {
  return Box{o.cx - o.w / 2, o.cy - o.h / 2, o.w, o.h};
}

}  // namespace

Sequence generate(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.num_objects < 1 || cfg.num_frames < 1) throw DataError("scenario: empty scene");
  Rng rng(seed);
  const double W = cfg.image_width, H = cfg.image_height;

  // LOW_FPS records a scene simulated at cfg.fps with every k-th frame
  // only: the output video runs at cfg.fps / k and the inter-frame
  // displacement grows k-fold.
  const bool low_fps = cfg.regime == MotionRegime::LOW_FPS;
  const int k = low_fps ? std::max(1, cfg.low_fps_subsample) : 1;
  const double sim_fps = cfg.fps;
  const double out_fps = cfg.fps / k;
  const int sim_frames = cfg.num_frames * k;

  std::vector<ObjectState> objs(cfg.num_objects);
  for (ObjectState& o : objs) {
    o.w = rng.uniform(cfg.min_width, cfg.max_width);
    o.h = o.w / rng.uniform(cfg.min_aspect, cfg.max_aspect);
    o.h = std::min(o.h, H * 0.8);
    o.cx = rng.uniform(o.w / 2, W - o.w / 2);
    o.cy = rng.uniform(o.h / 2, H - o.h / 2);
    const double speed = rng.uniform(cfg.min_speed, cfg.max_speed) / sim_fps;
    const double heading = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    o.vx = speed * std::cos(heading);
    o.vy = speed * std::sin(heading);
    if (cfg.regime == MotionRegime::CIRCULAR) {
      const double max_r = std::min({o.cx - o.w / 2, W - o.cx - o.w / 2, o.cy - o.h / 2,
                                     H - o.cy - o.h / 2});
      o.orbit_r = rng.uniform(0.25, 1.0) * std::max(1.0, max_r);
      o.orbit_cx = o.cx;
      o.orbit_cy = o.cy;
      o.angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      // Angular speed reproducing the drawn linear speed along the orbit.
      o.omega = (speed / std::max(1.0, o.orbit_r)) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
      o.cx = o.orbit_cx + o.orbit_r * std::cos(o.angle);
      o.cy = o.orbit_cy + o.orbit_r * std::sin(o.angle);
    }
    for (int e = 0; e < cfg.occlusions_per_object; ++e) {
      const int dur = std::max(
          1, static_cast<int>(rng.uniform(cfg.occ_min_duration, cfg.occ_max_duration) * out_fps +
                              0.5));
      if (cfg.num_frames <= dur + 2) continue;
      const int start = 2 + static_cast<int>(rng.below(
                                static_cast<std::uint64_t>(cfg.num_frames - dur - 2)));
      o.occlusions.emplace_back(start, start + dur - 1);
    }
  }

  const int heading_hold = std::max(1, static_cast<int>(0.5 * sim_fps + 0.5));

  Sequence seq;
  seq.meta.fps = out_fps;
  seq.meta.num_frames = cfg.num_frames;
  seq.meta.image_width = cfg.image_width;
  seq.meta.image_height = cfg.image_height;
  seq.detections.resize(cfg.num_frames);
  seq.gt_tracks.resize(cfg.num_objects);
  seq.has_gt = true;
  for (int i = 0; i < cfg.num_objects; ++i) seq.gt_tracks[i].object_id = i + 1;

  for (int sf = 0; sf < sim_frames; ++sf) {
    for (int i = 0; i < cfg.num_objects; ++i) {
      ObjectState& o = objs[i];
      if (sf > 0) {
        switch (cfg.regime) {
          case MotionRegime::CIRCULAR: {
            o.angle += o.omega;
            const double r = o.orbit_r;
            o.cx = std::clamp(o.orbit_cx + r * std::cos(o.angle), o.w / 2, W - o.w / 2);
            o.cy = std::clamp(o.orbit_cy + r * std::sin(o.angle), o.h / 2, H - o.h / 2);
            break;
          }
          case MotionRegime::ERRATIC:
            if (sf % heading_hold == 0) {
              const double speed = std::hypot(o.vx, o.vy);
              const double heading = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
              o.vx = speed * std::cos(heading);
              o.vy = speed * std::sin(heading);
            }
            advance_linear(o, W, H);
            break;
          case MotionRegime::LINEAR:
          case MotionRegime::LOW_FPS:
            advance_linear(o, W, H);
            break;
        }
      }
      if (sf % k != 0) continue;
      const int frame = sf / k + 1;  // 1-based output frame

      const Box gt_box = box_of(o);
      const bool occluded = occluded_at(o, frame);
      GroundTruthEntry e;
      e.frame = frame;
      e.box = gt_box;
      e.visibility = occluded ? 0.0 : 1.0;
      seq.gt_tracks[i].entries.push_back(e);

      if (occluded) continue;
      if (cfg.miss_prob > 0.0 && rng.uniform() < cfg.miss_prob) continue;
      Detection d;
      d.frame = frame;
      d.box = gt_box;
      if (cfg.center_jitter_std > 0.0) {
        d.box.x += rng.normal(0.0, cfg.center_jitter_std);
        d.box.y += rng.normal(0.0, cfg.center_jitter_std);
      }
      if (cfg.size_jitter_std > 0.0) {
        d.box.w = std::max(2.0, d.box.w + rng.normal(0.0, cfg.size_jitter_std));
        d.box.h = std::max(2.0, d.box.h + rng.normal(0.0, cfg.size_jitter_std));
      }
      d.score = rng.uniform(0.6, 1.0);
      seq.detections[frame - 1].push_back(d);
    }

    if (sf % k == 0 && cfg.fp_rate > 0.0) {
      const int frame = sf / k + 1;
      // Bernoulli thinning is enough at the low rates used here.
      if (rng.uniform() < cfg.fp_rate) {
        Detection d;
        d.frame = frame;
        d.box.w = rng.uniform(cfg.min_width, cfg.max_width);
        d.box.h = d.box.w / rng.uniform(cfg.min_aspect, cfg.max_aspect);
        d.box.h = std::min(d.box.h, H * 0.8);
        d.box.x = rng.uniform(0.0, W - d.box.w);
        d.box.y = rng.uniform(0.0, H - d.box.h);
        d.score = rng.uniform(0.5, 0.9);
        seq.detections[frame - 1].push_back(d);
      }
    }
  }
  return seq;
}

}  // namespace twix
