#pragma once

#include <array>
#include <optional>
#include <vector>

#include "twix/ingestion.hpp"

namespace twix {

// A temporally contiguous trajectory fragment: the coordinate matrix C
// (one row per observation, as a Box) together with the timestamp vector T
// (frame indices, strictly increasing).
struct Tracklet {
  int id = 0;
  std::vector<int> frames;
  std::vector<Box> coords;
  std::vector<double> scores;

  int length() const { return static_cast<int>(frames.size()); }
  int first_frame() const { return frames.front(); }
  int last_frame() const { return frames.back(); }

  void push(int frame, const Box& box, double score) {
    frames.push_back(frame);
    coords.push_back(box);
    scores.push_back(score);
  }
};

// Short-term association between adjacent frames: Hungarian matching on IoU,
// associations kept while IoU > theta_s. Unmatched detections start new
// tracklets; every detection lands in exactly one tracklet and tracklet
// frames are consecutive.
std::vector<Tracklet> build_tracklets(const Sequence& seq, double theta_s);

// Restriction of a tracklet to frames in [frame_lo, frame_hi]. Keeps the
// source id. Empty restriction -> nullopt.
std::optional<Tracklet> tracklet_window(const Tracklet& t, int frame_lo, int frame_hi);

}  // namespace twix
