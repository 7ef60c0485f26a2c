#include "twix/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "twix/errors.hpp"

namespace twix {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& field, int line_no) {
  const std::string t = trim(field);
  if (t.empty()) throw DataError("line " + std::to_string(line_no) + ": empty field");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": non-numeric field '" + t + "'");
  }
  if (pos != t.size())
    throw DataError("line " + std::to_string(line_no) + ": non-numeric field '" + t + "'");
  return v;
}

// Applies fn to each non-empty line. Line numbers are 1-based over the raw
// text, so parse errors point at the real line.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string line = trim(text.substr(start, end - start));
    if (!line.empty()) fn(line, line_no);
    start = end + 1;
    if (end == text.size()) break;
  }
}

}  // namespace

ParsedDetections parse_mot_detections(const std::string& text) {
  ParsedDetections out;
  for_each_line(text, [&out](const std::string& line, int line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 10)
      throw DataError("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                      std::to_string(fields.size()));
    Detection d;
    d.frame = static_cast<int>(parse_number(fields[0], line_no));
    d.box.x = parse_number(fields[2], line_no);
    d.box.y = parse_number(fields[3], line_no);
    d.box.w = parse_number(fields[4], line_no);
    d.box.h = parse_number(fields[5], line_no);
    d.score = std::clamp(parse_number(fields[6], line_no), 0.0, 1.0);
    if (d.frame < 1)
      throw DataError("line " + std::to_string(line_no) + ": frame index must be >= 1");
    if (!d.box.valid()) {
      ++out.rejected;
      return;
    }
    if (out.per_frame.size() < static_cast<std::size_t>(d.frame))
      out.per_frame.resize(d.frame);
    out.per_frame[d.frame - 1].push_back(d);
  });
  return out;
}

std::vector<GroundTruthTrack> parse_mot_groundtruth(const std::string& text,
                                                    const std::set<int>& class_whitelist,
                                                    const std::set<int>& ignore_classes) {
  std::map<int, GroundTruthTrack> by_id;
  for_each_line(text, [&](const std::string& line, int line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 9)
      throw DataError("line " + std::to_string(line_no) + ": expected 9 fields, got " +
                      std::to_string(fields.size()));
    GroundTruthEntry e;
    const int frame = static_cast<int>(parse_number(fields[0], line_no));
    const int id = static_cast<int>(parse_number(fields[1], line_no));
    e.frame = frame;
    e.box.x = parse_number(fields[2], line_no);
    e.box.y = parse_number(fields[3], line_no);
    e.box.w = parse_number(fields[4], line_no);
    e.box.h = parse_number(fields[5], line_no);
    const int flag = static_cast<int>(parse_number(fields[6], line_no));
    e.class_id = static_cast<int>(parse_number(fields[7], line_no));
    e.visibility = parse_number(fields[8], line_no);
    if (frame < 1)
      throw DataError("line " + std::to_string(line_no) + ": frame index must be >= 1");
    if (!e.box.valid())
      throw DataError("line " + std::to_string(line_no) + ": invalid ground-truth box");
    e.ignored = (flag == 0) || ignore_classes.count(e.class_id) > 0 ||
                (!class_whitelist.empty() && class_whitelist.count(e.class_id) == 0);
    auto& track = by_id[id];
    track.object_id = id;
    track.entries.push_back(e);
  });

  std::vector<GroundTruthTrack> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, track] : by_id) {
    std::sort(track.entries.begin(), track.entries.end(),
              [](const GroundTruthEntry& a, const GroundTruthEntry& b) {
                return a.frame < b.frame;
              });
    for (std::size_t i = 1; i < track.entries.size(); ++i) {
      if (track.entries[i].frame == track.entries[i - 1].frame)
        throw DataError("duplicate ground-truth entry for id " + std::to_string(id) +
                        " at frame " + std::to_string(track.entries[i].frame));
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::vector<std::vector<Detection>> filter_detections(
    const std::vector<std::vector<Detection>>& dets, double min_score, double min_area) {
  std::vector<std::vector<Detection>> out(dets.size());
  for (std::size_t f = 0; f < dets.size(); ++f) {
    for (const Detection& d : dets[f]) {
      if (d.score > min_score && d.box.area() > min_area) out[f].push_back(d);
    }
  }
  return out;
}

std::string write_mot_results(const std::vector<TrackedObs>& tracks) {
  std::vector<TrackedObs> sorted = tracks;
  std::sort(sorted.begin(), sorted.end(), [](const TrackedObs& a, const TrackedObs& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.track_id < b.track_id;
  });
  std::string out;
  char buf[256];
  for (const TrackedObs& t : sorted) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,%.2f,-1,-1,-1\n", t.frame,
                  t.track_id, t.box.x, t.box.y, t.box.w, t.box.h, t.score);
    out += buf;
  }
  return out;
}

std::vector<TrackedObs> parse_mot_results(const std::string& text) {
  std::vector<TrackedObs> out;
  for_each_line(text, [&out](const std::string& line, int line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 10)
      throw DataError("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                      std::to_string(fields.size()));
    TrackedObs t;
    t.frame = static_cast<int>(parse_number(fields[0], line_no));
    t.track_id = static_cast<int>(parse_number(fields[1], line_no));
    t.box.x = parse_number(fields[2], line_no);
    t.box.y = parse_number(fields[3], line_no);
    t.box.w = parse_number(fields[4], line_no);
    t.box.h = parse_number(fields[5], line_no);
    t.score = parse_number(fields[6], line_no);
    out.push_back(t);
  });
  return out;
}

SequenceMeta parse_seqinfo(const std::string& text) {
  SequenceMeta meta;
  bool saw_fps = false, saw_frames = false;
  for_each_line(text, [&](const std::string& line, int line_no) {
    if (line[0] == '#' || line[0] == '[' || line[0] == ';') return;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("seqinfo line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "name") {
      meta.name = value;
    } else if (key == "fps") {
      meta.fps = parse_number(value, line_no);
      saw_fps = true;
    } else if (key == "width") {
      meta.image_width = static_cast<int>(parse_number(value, line_no));
    } else if (key == "height") {
      meta.image_height = static_cast<int>(parse_number(value, line_no));
    } else if (key == "frames") {
      meta.num_frames = static_cast<int>(parse_number(value, line_no));
      saw_frames = true;
    }
    // Unknown keys are ignored so MOTChallenge seqinfo.ini extras pass through.
  });
  if (!saw_fps || !saw_frames) throw DataError("seqinfo: missing required key fps or frames");
  if (meta.fps <= 0.0 || meta.num_frames < 1 || meta.image_width <= 0 || meta.image_height <= 0)
    throw DataError("seqinfo: invalid metadata values");
  return meta;
}

std::string write_seqinfo(const SequenceMeta& meta) {
  std::ostringstream out;
  out << "name=" << meta.name << "\n";
  out << "fps=" << meta.fps << "\n";
  out << "width=" << meta.image_width << "\n";
  out << "height=" << meta.image_height << "\n";
  out << "frames=" << meta.num_frames << "\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

Sequence load_sequence(const std::string& dir) {
  namespace fs = std::filesystem;
  Sequence seq;
  seq.meta = parse_seqinfo(read_file((fs::path(dir) / "seqinfo.ini").string()));
  if (seq.meta.name.empty()) seq.meta.name = fs::path(dir).filename().string();

  auto pick = [&dir](const char* nested, const char* flat) -> std::string {
    const fs::path a = fs::path(dir) / nested;
    if (fs::exists(a)) return a.string();
    const fs::path b = fs::path(dir) / flat;
    if (fs::exists(b)) return b.string();
    return "";
  };

  const std::string det_path = pick("det/det.txt", "det.txt");
  if (det_path.empty()) throw DataError("sequence " + dir + ": no detection file");
  ParsedDetections dets = parse_mot_detections(read_file(det_path));
  if (dets.per_frame.size() > static_cast<std::size_t>(seq.meta.num_frames))
    throw DataError("sequence " + dir + ": detection beyond declared frame count");
  seq.detections = std::move(dets.per_frame);
  seq.detections.resize(seq.meta.num_frames);

  const std::string gt_path = pick("gt/gt.txt", "gt.txt");
  if (!gt_path.empty()) {
    seq.gt_tracks = parse_mot_groundtruth(read_file(gt_path));
    seq.has_gt = true;
  }
  return seq;
}

void save_sequence(const Sequence& seq, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "det");
  write_file((fs::path(dir) / "seqinfo.ini").string(), write_seqinfo(seq.meta));

  std::string det;
  char buf[256];
  for (std::size_t f = 0; f < seq.detections.size(); ++f) {
    for (const Detection& d : seq.detections[f]) {
      std::snprintf(buf, sizeof(buf), "%d,-1,%.2f,%.2f,%.2f,%.2f,%.4f,-1,-1,-1\n", d.frame,
                    d.box.x, d.box.y, d.box.w, d.box.h, d.score);
      det += buf;
    }
  }
  write_file((fs::path(dir) / "det" / "det.txt").string(), det);

  if (seq.has_gt) {
    std::string gt;
    for (const GroundTruthTrack& track : seq.gt_tracks) {
      for (const GroundTruthEntry& e : track.entries) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,%d,%d,%.2f\n", e.frame,
                      track.object_id, e.box.x, e.box.y, e.box.w, e.box.h, e.ignored ? 0 : 1,
                      e.class_id, e.visibility);
        gt += buf;
      }
    }
    write_file((fs::path(dir) / "gt" / "gt.txt").string(), gt);
  }
}

}  // namespace twix
