#include "twix/batching.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "twix/assignment.hpp"

namespace twix {

std::vector<GtAssignment> assign_tracklets_to_gt(const std::vector<Tracklet>& tracklets,
                                                 const std::vector<GroundTruthTrack>& gt_tracks,
                                                 double iou_match) {
  // Flatten GT per frame: (track index, entry index).
  std::map<int, std::vector<std::pair<int, int>>> gt_by_frame;
  for (std::size_t g = 0; g < gt_tracks.size(); ++g) {
    for (std::size_t e = 0; e < gt_tracks[g].entries.size(); ++e)
      gt_by_frame[gt_tracks[g].entries[e].frame].emplace_back(static_cast<int>(g),
                                                              static_cast<int>(e));
  }
  // Tracklet observations per frame: (tracklet index, observation index).
  std::map<int, std::vector<std::pair<int, int>>> obs_by_frame;
  for (std::size_t t = 0; t < tracklets.size(); ++t) {
    for (int i = 0; i < tracklets[t].length(); ++i)
      obs_by_frame[tracklets[t].frames[i]].emplace_back(static_cast<int>(t), i);
  }

  struct Votes {
    std::map<int, int> count;          // gt id -> matched observations
    std::map<int, int> ignored_count;  // gt id -> matched ignored entries
  };
  std::vector<Votes> votes(tracklets.size());

  for (const auto& [frame, obs] : obs_by_frame) {
    auto it = gt_by_frame.find(frame);
    if (it == gt_by_frame.end()) continue;
    const auto& gts = it->second;
    ScoreMatrix scores(static_cast<int>(obs.size()), static_cast<int>(gts.size()));
    for (int i = 0; i < scores.rows; ++i) {
      const auto& [t, oi] = obs[i];
      for (int j = 0; j < scores.cols; ++j) {
        const auto& [g, ei] = gts[j];
        scores.at(i, j) = iou(tracklets[t].coords[oi], gt_tracks[g].entries[ei].box);
      }
    }
    const Matching m = match_max(scores, iou_match);
    for (const auto& [i, j] : m.pairs) {
      const auto& [t, oi] = obs[i];
      const auto& [g, ei] = gts[j];
      votes[t].count[gt_tracks[g].object_id] += 1;
      if (gt_tracks[g].entries[ei].ignored) votes[t].ignored_count[gt_tracks[g].object_id] += 1;
    }
  }

  std::vector<GtAssignment> out(tracklets.size());
  for (std::size_t t = 0; t < tracklets.size(); ++t) {
    int best_id = -1, best_votes = 0;
    for (const auto& [id, n] : votes[t].count) {
      if (n > best_votes) {
        best_id = id;
        best_votes = n;
      }
    }
    GtAssignment a;
    if (best_id >= 0 && 2 * best_votes > tracklets[t].length()) {
      const int ignored = votes[t].ignored_count.count(best_id)
                              ? votes[t].ignored_count.at(best_id)
                              : 0;
      if (2 * ignored > best_votes) {
        a.kind = GtAssignment::Kind::IGNORED;
      } else {
        a.kind = GtAssignment::Kind::ID;
        a.gt_id = best_id;
      }
    }
    out[t] = a;
  }
  return out;
}

namespace {

bool temporal_overlap(const Tracklet& a, const Tracklet& b) {
  return a.first_frame() <= b.last_frame() && b.first_frame() <= a.last_frame();
}

}  // namespace

PairLabel label_pair(const Tracklet& past_sub, const Tracklet& future_sub,
                     const Tracklet& full_past, const Tracklet& full_future,
                     const GtAssignment& past_gt, const GtAssignment& future_gt) {
  // Two windows cut from the same tracklet are positive regardless of GT.
  if (past_sub.id == future_sub.id) return PairLabel::POSITIVE;

  using Kind = GtAssignment::Kind;
  if (past_gt.kind == Kind::IGNORED || future_gt.kind == Kind::IGNORED)
    return PairLabel::IGNORED;
  if (past_gt.kind == Kind::ID && future_gt.kind == Kind::ID)
    return past_gt.gt_id == future_gt.gt_id ? PairLabel::POSITIVE : PairLabel::NEGATIVE;

  // At least one side matches no GT object: distinct tracklets that coexist
  // in time are still two different objects.
  if (temporal_overlap(full_past, full_future)) return PairLabel::NEGATIVE;
  return PairLabel::IGNORED;
}

std::optional<TrackletBatch> make_batch(const std::vector<Tracklet>& tracklets,
                                        const std::vector<GtAssignment>& gt, int f_P, int f_F,
                                        const BatchConfig& cfg) {
  TrackletBatch batch;
  batch.f_P = f_P;
  batch.f_F = f_F;
  std::vector<int> past_src, future_src;  // indices into tracklets

  const int p_lo = f_P - cfg.past_frames();
  const int f_hi = f_F + cfg.future_frames();
  for (std::size_t t = 0; t < tracklets.size(); ++t) {
    if (auto sub = tracklet_window(tracklets[t], p_lo, f_P)) {
      batch.past.push_back(std::move(*sub));
      past_src.push_back(static_cast<int>(t));
    }
    if (auto sub = tracklet_window(tracklets[t], f_F, f_hi)) {
      batch.future.push_back(std::move(*sub));
      future_src.push_back(static_cast<int>(t));
    }
  }
  if (batch.past.empty() || batch.future.empty()) return std::nullopt;

  static const GtAssignment kNone;
  batch.labels.resize(batch.past.size() * batch.future.size());
  for (std::size_t i = 0; i < batch.past.size(); ++i) {
    for (std::size_t j = 0; j < batch.future.size(); ++j) {
      const int ti = past_src[i];
      const int tj = future_src[j];
      const GtAssignment& gi = ti < static_cast<int>(gt.size()) ? gt[ti] : kNone;
      const GtAssignment& gj = tj < static_cast<int>(gt.size()) ? gt[tj] : kNone;
      batch.labels[i * batch.future.size() + j] =
          label_pair(batch.past[i], batch.future[j], tracklets[ti], tracklets[tj], gi, gj);
    }
  }
  return batch;
}

std::vector<std::pair<int, int>> sample_batch_frames(int num_frames,
                                                     const std::vector<Tracklet>& tracklets,
                                                     const BatchConfig& cfg, Stage stage) {
  std::vector<std::pair<int, int>> out;
  if (stage == Stage::FIRST) {
    for (int f = 1; f < num_frames; ++f) out.emplace_back(f, f + 1);
    return out;
  }
  std::set<int> ends, begins;
  for (const Tracklet& t : tracklets) {
    ends.insert(t.last_frame());
    begins.insert(t.first_frame());
  }
  const int gap = cfg.gap_frames();
  for (int f_P : ends) {
    for (int f_F = f_P + 1; f_F <= f_P + 1 + gap && f_F <= num_frames; ++f_F) {
      if (begins.count(f_F)) out.emplace_back(f_P, f_F);
    }
  }
  return out;
}

}  // namespace twix
