#include "twix/tracklets.hpp"

#include "twix/assignment.hpp"

namespace twix {

std::vector<Tracklet> build_tracklets(const Sequence& seq, double theta_s) {
  std::vector<Tracklet> tracklets;
  // Tracklet index owning each detection of the previous frame.
  std::vector<int> prev_owner;

  const int num_frames = static_cast<int>(seq.detections.size());
  for (int f = 0; f < num_frames; ++f) {
    const auto& dets = seq.detections[f];
    std::vector<int> owner(dets.size(), -1);

    if (f > 0 && !prev_owner.empty() && !dets.empty()) {
      const auto& prev = seq.detections[f - 1];
      ScoreMatrix scores(static_cast<int>(prev.size()), static_cast<int>(dets.size()));
      for (int i = 0; i < scores.rows; ++i)
        for (int j = 0; j < scores.cols; ++j)
          scores.at(i, j) = iou(prev[i].box, dets[j].box);
      const Matching m = match_max(scores, theta_s);
      for (const auto& [i, j] : m.pairs) {
        const int t = prev_owner[i];
        tracklets[t].push(dets[j].frame, dets[j].box, dets[j].score);
        owner[j] = t;
      }
    }
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (owner[j] >= 0) continue;
      Tracklet t;
      t.id = static_cast<int>(tracklets.size()) + 1;
      t.push(dets[j].frame, dets[j].box, dets[j].score);
      owner[j] = static_cast<int>(tracklets.size());
      tracklets.push_back(std::move(t));
    }
    prev_owner = std::move(owner);
  }
  return tracklets;
}

std::optional<Tracklet> tracklet_window(const Tracklet& t, int frame_lo, int frame_hi) {
  Tracklet sub;
  sub.id = t.id;
  for (int i = 0; i < t.length(); ++i) {
    if (t.frames[i] >= frame_lo && t.frames[i] <= frame_hi)
      sub.push(t.frames[i], t.coords[i], t.scores[i]);
  }
  if (sub.frames.empty()) return std::nullopt;
  return sub;
}

}  // namespace twix
