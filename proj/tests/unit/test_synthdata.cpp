#include "doctest.h"
#include "twix/synthdata.hpp"

using namespace twix;

namespace {

ScenarioConfig small_cfg() {
  ScenarioConfig cfg;
  cfg.regime = MotionRegime::LINEAR;
  cfg.num_objects = 4;
  cfg.num_frames = 50;
  cfg.fps = 10.0;
  cfg.image_width = 640;
  cfg.image_height = 480;
  return cfg;
}

}  // namespace

TEST_CASE("noiseless generation reproduces ground truth") {
  const Sequence seq = generate(small_cfg(), 1);
  REQUIRE(seq.has_gt);
  CHECK(seq.gt_tracks.size() == 4);
  int dets = 0;
  for (const auto& frame : seq.detections) dets += static_cast<int>(frame.size());
  CHECK(dets == 4 * 50);
  for (const GroundTruthTrack& t : seq.gt_tracks) {
    REQUIRE(t.entries.size() == 50);
    for (const GroundTruthEntry& e : t.entries) {
      bool found = false;
      for (const Detection& d : seq.detections[e.frame - 1])
        found = found || (std::abs(d.box.x - e.box.x) < 1e-12 && std::abs(d.box.w - e.box.w) < 1e-12);
      CHECK(found);
    }
  }
}

TEST_CASE("miss probability one silences detections") {
  ScenarioConfig cfg = small_cfg();
  cfg.miss_prob = 1.0;
  const Sequence seq = generate(cfg, 2);
  for (const auto& frame : seq.detections) CHECK(frame.empty());
}

TEST_CASE("fixed seed reproduces the sequence exactly") {
  ScenarioConfig cfg = small_cfg();
  cfg.regime = MotionRegime::ERRATIC;
  cfg.center_jitter_std = 1.5;
  cfg.size_jitter_std = 0.5;
  cfg.miss_prob = 0.05;
  cfg.fp_rate = 0.2;
  cfg.occlusions_per_object = 1;
  const Sequence a = generate(cfg, 7);
  const Sequence b = generate(cfg, 7);
  REQUIRE(a.detections.size() == b.detections.size());
  for (std::size_t f = 0; f < a.detections.size(); ++f) {
    REQUIRE(a.detections[f].size() == b.detections[f].size());
    for (std::size_t i = 0; i < a.detections[f].size(); ++i) {
      CHECK(a.detections[f][i].box.x == b.detections[f][i].box.x);
      CHECK(a.detections[f][i].score == b.detections[f][i].score);
    }
  }
  const Sequence c = generate(cfg, 8);
  bool identical = true;
  for (std::size_t f = 0; f < a.detections.size() && identical; ++f) {
    identical = a.detections[f].size() == c.detections[f].size();
    for (std::size_t i = 0; identical && i < a.detections[f].size(); ++i)
      identical = a.detections[f][i].box.x == c.detections[f][i].box.x;
  }
  CHECK_FALSE(identical);
}

TEST_CASE("boxes stay inside the image across regimes") {
  for (MotionRegime regime : {MotionRegime::LINEAR, MotionRegime::CIRCULAR,
                              MotionRegime::ERRATIC, MotionRegime::LOW_FPS}) {
    ScenarioConfig cfg = small_cfg();
    cfg.regime = regime;
    cfg.num_frames = 200;
    cfg.max_speed = 500.0;
    const Sequence seq = generate(cfg, 3);
    for (const GroundTruthTrack& t : seq.gt_tracks)
      for (const GroundTruthEntry& e : t.entries) {
        CHECK(e.box.x >= -1e-9);
        CHECK(e.box.y >= -1e-9);
        CHECK(e.box.x2() <= cfg.image_width + 1e-9);
        CHECK(e.box.y2() <= cfg.image_height + 1e-9);
        CHECK(e.box.w > 0);
        CHECK(e.box.h > 0);
      }
  }
}

TEST_CASE("occlusions suppress detections but keep ground truth") {
  ScenarioConfig cfg = small_cfg();
  cfg.occlusions_per_object = 1;
  cfg.occ_min_duration = 0.5;
  cfg.occ_max_duration = 0.5;
  const Sequence seq = generate(cfg, 11);
  int occluded_frames = 0;
  for (const GroundTruthTrack& t : seq.gt_tracks) {
    CHECK(t.entries.size() == 50);  // GT covers every frame
    for (const GroundTruthEntry& e : t.entries) {
      if (e.visibility > 0.0) continue;
      ++occluded_frames;
      for (const Detection& d : seq.detections[e.frame - 1])
        CHECK_FALSE((std::abs(d.box.x - e.box.x) < 1e-12 && std::abs(d.box.y - e.box.y) < 1e-12));
    }
  }
  CHECK(occluded_frames == 4 * 5);  // 0.5 s at 10 fps per object
}

TEST_CASE("jitter keeps positive sizes") {
  ScenarioConfig cfg = small_cfg();
  cfg.size_jitter_std = 30.0;
  const Sequence seq = generate(cfg, 13);
  for (const auto& frame : seq.detections)
    for (const Detection& d : frame) {
      CHECK(d.box.w > 0);
      CHECK(d.box.h > 0);
    }
}

TEST_CASE("low fps regime moves more per frame than linear") {
  ScenarioConfig cfg = small_cfg();
  cfg.num_objects = 6;
  cfg.min_speed = 100;
  cfg.max_speed = 100;
  auto mean_step = [](const Sequence& seq) {
    double total = 0;
    int n = 0;
    for (const GroundTruthTrack& t : seq.gt_tracks)
      for (std::size_t i = 1; i < t.entries.size(); ++i) {
        total += std::abs(t.entries[i].box.x - t.entries[i - 1].box.x) +
                 std::abs(t.entries[i].box.y - t.entries[i - 1].box.y);
        ++n;
      }
    return total / n;
  };
  const Sequence lin = generate(cfg, 17);
  cfg.regime = MotionRegime::LOW_FPS;
  const Sequence low = generate(cfg, 17);
  CHECK(mean_step(low) > 2.0 * mean_step(lin));
}
