#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "twix/tracklets.hpp"

namespace twix {

struct BatchConfig {
  double t_G = 0.0;  // maximal temporal gap, seconds
  double t_P = 0.8;  // past window duration, seconds
  double t_F = 0.05; // future window duration, seconds
  double fps = 30.0;

  int gap_frames() const { return static_cast<int>(t_G * fps + 0.5); }
  int past_frames() const { return static_cast<int>(t_P * fps + 0.5); }
  int future_frames() const { return static_cast<int>(t_F * fps + 0.5); }
};

enum class PairLabel : std::uint8_t { POSITIVE, NEGATIVE, IGNORED };

// Past/future tracklet sets around the reference frames f_P and f_F with the
// label matrix Y (row-major, n_P x n_F).
struct TrackletBatch {
  std::vector<Tracklet> past;    // S_P: last frame <= f_P
  std::vector<Tracklet> future;  // S_F: first frame >= f_F
  std::vector<PairLabel> labels; // n_P * n_F; empty at inference
  int f_P = 0;
  int f_F = 0;

  int n_past() const { return static_cast<int>(past.size()); }
  int n_future() const { return static_cast<int>(future.size()); }
  PairLabel label(int i, int j) const { return labels[static_cast<std::size_t>(i) * future.size() + j]; }
};

// Ground-truth identity of one tracklet.
struct GtAssignment {
  enum class Kind : std::uint8_t { ID, NONE, IGNORED };
  Kind kind = Kind::NONE;
  int gt_id = -1;
};

// Per-frame Hungarian IoU matching (threshold iou_match) between tracklet
// observations and GT boxes, then a majority vote per tracklet: the majority
// identity must cover more than half of the tracklet's observations,
// otherwise NONE. A majority built mostly on ignored GT entries yields
// IGNORED.
std::vector<GtAssignment> assign_tracklets_to_gt(const std::vector<Tracklet>& tracklets,
                                                 const std::vector<GroundTruthTrack>& gt_tracks,
                                                 double iou_match = 0.5);

// Label for one (past, future) sub-tracklet pair. Sub-tracklets keep the id
// of their source tracklet; full_* are the source tracklets for the temporal
// overlap rule.
PairLabel label_pair(const Tracklet& past_sub, const Tracklet& future_sub,
                     const Tracklet& full_past, const Tracklet& full_future,
                     const GtAssignment& past_gt, const GtAssignment& future_gt);

// Builds the batch for reference frames (f_P, f_F): S_P from window
// [f_P - t_P*fps, f_P], S_F from [f_F, f_F + t_F*fps], labels per
// label_pair. Empty S_P or S_F -> nullopt. gt may be empty (labels then rely
// on the same-tracklet rule only).
std::optional<TrackletBatch> make_batch(const std::vector<Tracklet>& tracklets,
                                        const std::vector<GtAssignment>& gt, int f_P, int f_F,
                                        const BatchConfig& cfg);

enum class Stage { FIRST, SECOND };

// Eligible (f_P, f_F) reference pairs. FIRST: all adjacent pairs. SECOND:
// pairs within the temporal gap bound where some tracklet ends at f_P and
// some tracklet starts at f_F.
std::vector<std::pair<int, int>> sample_batch_frames(int num_frames,
                                                     const std::vector<Tracklet>& tracklets,
                                                     const BatchConfig& cfg, Stage stage);

}  // namespace twix
