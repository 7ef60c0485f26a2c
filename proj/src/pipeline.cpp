#include "twix/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "twix/assignment.hpp"
#include "twix/batching.hpp"
#include "twix/errors.hpp"

namespace twix {

namespace {

// Affinity matrix between track histories and single detections, computed
// with the same pair machinery as training.
ScoreMatrix affinities(const std::vector<const TrackState::Track*>& tracks,
                       const std::vector<const Detection*>& dets, int frame,
                       const TwixWeightsF& weights) {
  TrackletBatch batch;
  batch.f_P = frame - 1;
  batch.f_F = frame;
  for (const auto* t : tracks) {
    Tracklet p;
    p.id = t->id;
    p.frames = t->frames;
    p.coords = t->boxes;
    p.scores = t->scores;
    batch.past.push_back(std::move(p));
  }
  int j = 0;
  for (const auto* d : dets) {
    Tracklet f;
    f.id = -(++j);  // synthetic ids, never collide with track ids
    f.push(d->frame, d->box, d->score);
    batch.future.push_back(std::move(f));
  }
  const TensorF pred = affinity_forward(batch, weights);
  ScoreMatrix scores(pred.rows(), pred.cols());
  for (int i = 0; i < pred.rows(); ++i)
    for (int k = 0; k < pred.cols(); ++k) scores.at(i, k) = static_cast<double>(pred.at(i, k));
  return scores;
}

void append_obs(TrackState::Track& track, const Detection& det, int history_cap) {
  track.frames.push_back(det.frame);
  track.boxes.push_back(det.box);
  track.scores.push_back(det.score);
  if (static_cast<int>(track.frames.size()) > history_cap) {
    track.frames.erase(track.frames.begin());
    track.boxes.erase(track.boxes.begin());
    track.scores.erase(track.scores.begin());
  }
  track.age = 0;
}

}  // namespace

std::vector<TrackedObs> step(TrackState& state, int frame,
                             const std::vector<Detection>& detections,
                             const TwixWeightsF& weights_1, const TwixWeightsF& weights_2,
                             const PipelineParams& params) {
  std::vector<TrackedObs> out;
  const int history_cap = params.history_frames();

  std::vector<char> det_matched(detections.size(), 0);
  std::vector<char> track_matched(state.tracks.size(), 0);

  if (!state.tracks.empty() && !detections.empty()) {
    // Stage 1: all active tracks vs all detections.
    std::vector<const TrackState::Track*> t1;
    std::vector<const Detection*> d1;
    for (const auto& t : state.tracks) t1.push_back(&t);
    for (const auto& d : detections) d1.push_back(&d);
    const Matching m1 = match_max(affinities(t1, d1, frame, weights_1), params.theta_1);
    for (const auto& [ti, dj] : m1.pairs) {
      track_matched[ti] = 1;
      det_matched[dj] = 1;
      append_obs(state.tracks[ti], detections[dj], history_cap);
      out.push_back({frame, state.tracks[ti].id, detections[dj].box, detections[dj].score});
    }

    // Stage 2: unmatched tracks vs unmatched detections, second module.
    std::vector<int> ti2, dj2;
    for (std::size_t i = 0; i < state.tracks.size(); ++i)
      if (!track_matched[i]) ti2.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < detections.size(); ++j)
      if (!det_matched[j]) dj2.push_back(static_cast<int>(j));
    if (!ti2.empty() && !dj2.empty()) {
      std::vector<const TrackState::Track*> t2;
      std::vector<const Detection*> d2;
      for (int i : ti2) t2.push_back(&state.tracks[i]);
      for (int j : dj2) d2.push_back(&detections[j]);
      const Matching m2 = match_max(affinities(t2, d2, frame, weights_2), params.theta_2);
      for (const auto& [a, b] : m2.pairs) {
        const int ti = ti2[a];
        const int dj = dj2[b];
        track_matched[ti] = 1;
        det_matched[dj] = 1;
        append_obs(state.tracks[ti], detections[dj], history_cap);
        out.push_back({frame, state.tracks[ti].id, detections[dj].box, detections[dj].score});
      }
    }
  }

  // New tracks from confident unmatched detections.
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (det_matched[j] || detections[j].score <= params.theta_T) continue;
    TrackState::Track t;
    t.id = state.next_id++;
    append_obs(t, detections[j], history_cap);
    out.push_back({frame, t.id, detections[j].box, detections[j].score});
    state.tracks.push_back(std::move(t));
    track_matched.push_back(1);
  }

  // Age and kill.
  std::vector<TrackState::Track> alive;
  alive.reserve(state.tracks.size());
  const int max_age = params.max_age_frames();
  for (std::size_t i = 0; i < state.tracks.size(); ++i) {
    TrackState::Track& t = state.tracks[i];
    if (!track_matched[i]) t.age += 1;
    if (t.age <= max_age) alive.push_back(std::move(t));
  }
  state.tracks = std::move(alive);
  return out;
}

namespace {

TrackingRun run_pipeline(const std::vector<std::vector<Detection>>& frames,
                         const TwixWeightsF& weights_1, const TwixWeightsF& weights_2,
                         const PipelineParams& params) {
  TrackingRun run;
  TrackState state;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const int frame = static_cast<int>(f) + 1;
    const auto obs = step(state, frame, frames[f], weights_1, weights_2, params);
    run.results.insert(run.results.end(), obs.begin(), obs.end());
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.frames = static_cast<int>(frames.size());
  return run;
}

}  // namespace

TrackingRun track_sequence(const Sequence& seq, const TwixWeightsF& weights_1,
                           const TwixWeightsF& weights_2, const PipelineParams& params) {
  return run_pipeline(seq.detections, weights_1, weights_2, params);
}

std::vector<std::vector<Detection>> detections_from_gt(const Sequence& seq) {
  std::vector<std::vector<Detection>> frames(seq.meta.num_frames);
  for (const GroundTruthTrack& track : seq.gt_tracks) {
    for (const GroundTruthEntry& e : track.entries) {
      if (e.ignored) continue;
      if (e.frame < 1 || e.frame > seq.meta.num_frames) continue;
      frames[e.frame - 1].push_back({e.frame, e.box, 1.0, e.class_id});
    }
  }
  return frames;
}

TrackingRun track_sequence_oracle(const Sequence& seq, const TwixWeightsF& weights_1,
                                  const TwixWeightsF& weights_2, const PipelineParams& params) {
  if (!seq.has_gt) throw DataError("oracle tracking requires ground truth");
  return run_pipeline(detections_from_gt(seq), weights_1, weights_2, params);
}

TrackingRun track_sequence_iou_baseline(const Sequence& seq, double theta_s, bool oracle) {
  Sequence working = seq;
  if (oracle) {
    if (!seq.has_gt) throw DataError("oracle tracking requires ground truth");
    working.detections = detections_from_gt(seq);
  }
  TrackingRun run;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Tracklet> tracklets = build_tracklets(working, theta_s);
  for (const Tracklet& t : tracklets)
    for (int i = 0; i < t.length(); ++i)
      run.results.push_back({t.frames[i], t.id, t.coords[i], t.scores[i]});
  std::sort(run.results.begin(), run.results.end(), [](const TrackedObs& a, const TrackedObs& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.track_id < b.track_id;
  });
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.frames = static_cast<int>(working.detections.size());
  return run;
}

}  // namespace twix
