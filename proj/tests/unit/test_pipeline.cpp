#include "doctest.h"
#include "twix/pipeline.hpp"
#include "twix/rng.hpp"
#include "twix/synthdata.hpp"

using namespace twix;

namespace {

TwixWeightsF tiny_weights(std::uint64_t seed) {
  TwixHyper h;
  h.dim = 8;
  h.heads = 2;
  h.ffn_dim = 8;
  h.intra_layers = 1;
  h.inter_layers = 1;
  return to_float(init_twix_weights(h, seed));
}

PipelineParams loose_params(double fps = 10.0) {
  PipelineParams p;
  p.theta_1 = -1.0;  // any affinity matches at stage 1
  p.theta_2 = -1.0;
  p.theta_T = 0.5;
  p.t_A = 0.4;
  p.t_P = 0.8;
  p.fps = fps;
  return p;
}

}  // namespace

TEST_CASE("empty detections age the track") {
  const TwixWeightsF w1 = tiny_weights(1), w2 = tiny_weights(2);
  PipelineParams params = loose_params();
  TrackState state;
  const auto first = step(state, 1, {{1, Box{0, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  REQUIRE(first.size() == 1);
  REQUIRE(state.tracks.size() == 1);
  CHECK(state.tracks[0].age == 0);

  const auto none = step(state, 2, {}, w1, w2, params);
  CHECK(none.empty());
  REQUIRE(state.tracks.size() == 1);
  CHECK(state.tracks[0].age == 1);
}

TEST_CASE("new tracks require score above theta_T") {
  const TwixWeightsF w1 = tiny_weights(3), w2 = tiny_weights(4);
  PipelineParams params = loose_params();
  params.theta_T = 0.9;
  TrackState state;
  std::vector<Detection> dets{{1, Box{0, 0, 20, 20}, 0.95, 1},
                              {1, Box{100, 0, 20, 20}, 0.8, 1},
                              {1, Box{200, 0, 20, 20}, 0.6, 1}};
  const auto obs = step(state, 1, dets, w1, w2, params);
  CHECK(obs.size() == 1);
  CHECK(state.tracks.size() == 1);
  CHECK(state.next_id == 2);
}

TEST_CASE("cascade: stage 2 catches what stage 1 rejects") {
  const TwixWeightsF w1 = tiny_weights(5), w2 = tiny_weights(6);
  PipelineParams params = loose_params();
  params.theta_1 = 1.0;  // tanh output is strictly below 1: stage 1 is off
  params.theta_2 = -1.0;
  TrackState state;
  step(state, 1, {{1, Box{0, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  REQUIRE(state.tracks.size() == 1);
  const auto obs = step(state, 2, {{2, Box{1, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].track_id == 1);  // matched at stage 2, same identity
  CHECK(state.tracks.size() == 1);
}

TEST_CASE("theta thresholds disable both stages") {
  const TwixWeightsF w1 = tiny_weights(7), w2 = tiny_weights(8);
  PipelineParams params = loose_params();
  params.theta_1 = 1.0;
  params.theta_2 = 1.0;
  params.theta_T = 0.0;
  TrackState state;
  step(state, 1, {{1, Box{0, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  const auto obs = step(state, 2, {{2, Box{0, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].track_id == 2);  // never associated, fresh identity
}

TEST_CASE("kill rule: long gaps produce a new identity") {
  const TwixWeightsF w1 = tiny_weights(9), w2 = tiny_weights(10);
  PipelineParams params = loose_params();
  params.t_A = 0.2;  // 2 frames at 10 fps
  TrackState state;
  step(state, 1, {{1, Box{0, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  for (int f = 2; f <= 5; ++f) step(state, f, {}, w1, w2, params);
  CHECK(state.tracks.empty());  // killed when age exceeded 2
  const auto obs = step(state, 6, {{6, Box{0, 0, 20, 20}, 0.95, 1}}, w1, w2, params);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].track_id == 2);
}

TEST_CASE("single object keeps one id with any weights") {
  const TwixWeightsF w1 = tiny_weights(11), w2 = tiny_weights(12);
  ScenarioConfig cfg;
  cfg.num_objects = 1;
  cfg.num_frames = 40;
  cfg.fps = 10;
  const Sequence seq = generate(cfg, 3);
  const TrackingRun run = track_sequence(seq, w1, w2, loose_params());
  CHECK(run.frames == 40);
  for (const TrackedObs& o : run.results) CHECK(o.track_id == 1);
  CHECK(run.results.size() == 40);
}

TEST_CASE("ids grow monotonically and boxes come from the input") {
  const TwixWeightsF w1 = tiny_weights(13), w2 = tiny_weights(14);
  ScenarioConfig cfg;
  cfg.num_objects = 5;
  cfg.num_frames = 60;
  cfg.fps = 10;
  cfg.miss_prob = 0.2;
  cfg.center_jitter_std = 2.0;
  const Sequence seq = generate(cfg, 5);
  PipelineParams params = loose_params();
  params.theta_1 = 0.0;
  params.theta_2 = -0.5;
  const TrackingRun run = track_sequence(seq, w1, w2, params);

  int max_id = 0;
  for (const TrackedObs& o : run.results) {
    max_id = std::max(max_id, o.track_id);
    bool from_input = false;
    for (const Detection& d : seq.detections[o.frame - 1])
      from_input = from_input || (d.box.x == o.box.x && d.box.y == o.box.y &&
                                  d.box.w == o.box.w && d.box.h == o.box.h);
    CHECK(from_input);  // no fabricated boxes
  }
  CHECK(max_id >= 5);

  // At most one observation per track per frame.
  std::set<std::pair<int, int>> seen;
  for (const TrackedObs& o : run.results)
    CHECK(seen.insert({o.frame, o.track_id}).second);
}

TEST_CASE("online causality") {
  const TwixWeightsF w1 = tiny_weights(15), w2 = tiny_weights(16);
  ScenarioConfig cfg;
  cfg.num_objects = 4;
  cfg.num_frames = 30;
  cfg.fps = 10;
  cfg.miss_prob = 0.1;
  const Sequence full = generate(cfg, 7);
  Sequence cut = full;
  const int t = 18;
  cut.meta.num_frames = t;
  cut.detections.resize(t);

  PipelineParams params = loose_params();
  const TrackingRun a = track_sequence(full, w1, w2, params);
  const TrackingRun b = track_sequence(cut, w1, w2, params);
  std::vector<TrackedObs> a_cut;
  for (const TrackedObs& o : a.results)
    if (o.frame <= t) a_cut.push_back(o);
  REQUIRE(a_cut.size() == b.results.size());
  for (std::size_t i = 0; i < a_cut.size(); ++i) {
    CHECK(a_cut[i].frame == b.results[i].frame);
    CHECK(a_cut[i].track_id == b.results[i].track_id);
    CHECK(a_cut[i].box.x == b.results[i].box.x);
  }
}

TEST_CASE("oracle mode uses ground-truth boxes") {
  const TwixWeightsF w1 = tiny_weights(17), w2 = tiny_weights(18);
  ScenarioConfig cfg;
  cfg.num_objects = 3;
  cfg.num_frames = 20;
  cfg.fps = 10;
  cfg.miss_prob = 0.5;  // detections are unreliable; oracle ignores them
  const Sequence seq = generate(cfg, 9);
  const TrackingRun run = track_sequence_oracle(seq, w1, w2, loose_params());
  CHECK(run.results.size() == 3 * 20);

  Sequence no_gt = seq;
  no_gt.has_gt = false;
  CHECK_THROWS_AS(track_sequence_oracle(no_gt, w1, w2, loose_params()), DataError);

  Sequence empty_gt = seq;
  empty_gt.gt_tracks.clear();
  const TrackingRun none = track_sequence_oracle(empty_gt, w1, w2, loose_params());
  CHECK(none.results.empty());
}

TEST_CASE("iou baseline equals tracklets as tracks") {
  ScenarioConfig cfg;
  cfg.num_objects = 4;
  cfg.num_frames = 25;
  cfg.fps = 10;
  const Sequence seq = generate(cfg, 11);
  const TrackingRun run = track_sequence_iou_baseline(seq, 0.3);
  const auto tracklets = build_tracklets(seq, 0.3);
  std::size_t total = 0;
  for (const auto& t : tracklets) total += t.frames.size();
  CHECK(run.results.size() == total);
}
