#pragma once

#include <optional>
#include <vector>

#include "twix/ingestion.hpp"
#include "twix/model.hpp"
#include "twix/tracklets.hpp"

namespace twix {

struct PipelineParams {
  double theta_1 = 0.0;   // first-stage affinity threshold in [-1, 1]
  double theta_2 = -0.2;  // second-stage affinity threshold in [-1, 1]
  double theta_T = 0.9;   // new-track detection score threshold in [0, 1]
  double t_A = 1.6;       // maximum age, seconds
  double t_P = 0.8;       // history window, seconds
  double fps = 20.0;

  int max_age_frames() const { return static_cast<int>(t_A * fps + 0.5); }
  int history_frames() const { return static_cast<int>(t_P * fps + 0.5) + 1; }
};

// Live tracker state: active tracks with bounded history buffers.
struct TrackState {
  struct Track {
    int id = 0;
    std::vector<int> frames;   // most recent history, true frame indices
    std::vector<Box> boxes;
    std::vector<double> scores;
    int age = 0;               // frames since last match
  };
  std::vector<Track> tracks;
  int next_id = 1;
};

// One cascade-matching step (both precisions share the logic): stage 1
// matches all active tracks against the frame's detections with the first
// module at theta_1; stage 2 matches the leftovers with the second module at
// theta_2; unmatched detections above theta_T found new tracks; unmatched
// tracks age and die beyond t_A.
std::vector<TrackedObs> step(TrackState& state, int frame,
                             const std::vector<Detection>& detections,
                             const TwixWeightsF& weights_1, const TwixWeightsF& weights_2,
                             const PipelineParams& params);

struct TrackingRun {
  std::vector<TrackedObs> results;
  double seconds = 0.0;  // wall time of the step loop
  int frames = 0;
  double fps() const { return seconds > 0.0 ? frames / seconds : 0.0; }
};

// Online fold of step over the sequence's detections (pre-filter upstream).
TrackingRun track_sequence(const Sequence& seq, const TwixWeightsF& weights_1,
                           const TwixWeightsF& weights_2, const PipelineParams& params);

// Same pipeline with ground-truth boxes (score 1.0) as detections.
TrackingRun track_sequence_oracle(const Sequence& seq, const TwixWeightsF& weights_1,
                                  const TwixWeightsF& weights_2, const PipelineParams& params);

// GT entries as detections for the oracle experiment.
std::vector<std::vector<Detection>> detections_from_gt(const Sequence& seq);

// IoU-only baseline: adjacent-frame theta_s matching, no second stage, no
// age tolerance. Equivalent to reporting build_tracklets as tracks.
TrackingRun track_sequence_iou_baseline(const Sequence& seq, double theta_s,
                                        bool oracle = false);

}  // namespace twix
