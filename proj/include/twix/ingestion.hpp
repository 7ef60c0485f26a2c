#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twix/geometry.hpp"

namespace twix {

struct SequenceMeta {
  std::string name;
  double fps = 30.0;
  int num_frames = 1;
  int image_width = 1920;
  int image_height = 1080;
};

struct GroundTruthEntry {
  int frame = 1;
  Box box;
  double visibility = 1.0;
  int class_id = 1;
  bool ignored = false;
};

struct GroundTruthTrack {
  int object_id = 0;
  std::vector<GroundTruthEntry> entries;  // sorted by frame, strictly increasing
};

struct Sequence {
  SequenceMeta meta;
  // detections[f] holds frame f+1 (frames are 1-based externally).
  std::vector<std::vector<Detection>> detections;
  std::vector<GroundTruthTrack> gt_tracks;
  bool has_gt = false;
};

struct ParsedDetections {
  std::vector<std::vector<Detection>> per_frame;  // index 0 <-> frame 1
  int rejected = 0;                               // non-positive w/h entries
};

// MOT detection CSV: frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z
// with id = -1. Malformed lines raise DataError naming the line number;
// entries with non-positive width/height are dropped and counted.
ParsedDetections parse_mot_detections(const std::string& text);

// MOT ground-truth CSV: frame,id,bb_left,bb_top,bb_width,bb_height,flag,
// class,visibility. Entries are grouped by id and sorted by frame. An entry
// is marked ignored when its flag is 0, its class is in ignore_classes, or a
// non-empty class_whitelist does not contain its class.
std::vector<GroundTruthTrack> parse_mot_groundtruth(
    const std::string& text, const std::set<int>& class_whitelist = {},
    const std::set<int>& ignore_classes = {});

// Keeps detections with score > min_score and area > min_area, preserving
// order. Idempotent.
std::vector<std::vector<Detection>> filter_detections(
    const std::vector<std::vector<Detection>>& dets, double min_score = 0.5,
    double min_area = 128.0);

// One tracked observation in a result file.
struct TrackedObs {
  int frame = 1;
  int track_id = 1;
  Box box;
  double score = 1.0;
};

// MOT result CSV: frame,id,bb_left,bb_top,bb_width,bb_height,score,-1,-1,-1
// sorted by frame then id, coordinates with 2 decimals.
std::string write_mot_results(const std::vector<TrackedObs>& tracks);
std::vector<TrackedObs> parse_mot_results(const std::string& text);

// seqinfo-style key-value file: `fps=`, `width=`, `height=`, `frames=`,
// `name=`. Lines starting with '#' or '[' are skipped.
SequenceMeta parse_seqinfo(const std::string& text);
std::string write_seqinfo(const SequenceMeta& meta);

// Loads a sequence directory: seqinfo.ini plus det/det.txt (or det.txt) and
// optional gt/gt.txt (or gt.txt).
Sequence load_sequence(const std::string& dir);

// Writes seqinfo.ini, det/det.txt and (when present) gt/gt.txt under dir.
void save_sequence(const Sequence& seq, const std::string& dir);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace twix
