#include "doctest.h"
#include "twix/errors.hpp"
#include "twix/ingestion.hpp"
#include "twix/rng.hpp"

using namespace twix;

TEST_CASE("parse detections") {
  const auto parsed = parse_mot_detections("1,-1,10,20,30,40,0.9,-1,-1,-1\n");
  REQUIRE(parsed.per_frame.size() == 1);
  REQUIRE(parsed.per_frame[0].size() == 1);
  const Detection& d = parsed.per_frame[0][0];
  CHECK(d.frame == 1);
  CHECK(d.box.x == doctest::Approx(10));
  CHECK(d.box.y == doctest::Approx(20));
  CHECK(d.box.w == doctest::Approx(30));
  CHECK(d.box.h == doctest::Approx(40));
  CHECK(d.score == doctest::Approx(0.9));
  CHECK(parsed.rejected == 0);
}

TEST_CASE("parse detections edge cases") {
  CHECK(parse_mot_detections("").per_frame.empty());
  CHECK(parse_mot_detections("\n\n").per_frame.empty());

  // Zero width -> rejected with a warning count, not an error.
  const auto zero_w = parse_mot_detections("1,-1,10,20,0,40,0.9,-1,-1,-1\n");
  CHECK(zero_w.rejected == 1);
  CHECK(zero_w.per_frame.empty());

  auto error_message = [](const std::string& text) {
    try {
      parse_mot_detections(text);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_message("1,-1,10,20\n").find("line 1") != std::string::npos);
  CHECK(error_message("1,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,a,2,3,4,0.5,-1,-1,-1\n")
            .find("line 2") != std::string::npos);

  // Trailing whitespace and missing final newline are fine.
  const auto ws = parse_mot_detections("1,-1,10,20,30,40,0.9,-1,-1,-1  \r\n2,-1,1,2,3,4,0.5,-1,-1,-1");
  CHECK(ws.per_frame.size() == 2);
}

TEST_CASE("parse ground truth") {
  const std::string text =
      "2,3,0,0,10,10,1,1,1.0\n"
      "1,3,0,0,10,10,1,1,1.0\n"
      "1,7,50,50,10,10,0,1,0.5\n";
  const auto tracks = parse_mot_groundtruth(text);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].object_id == 3);
  REQUIRE(tracks[0].entries.size() == 2);
  CHECK(tracks[0].entries[0].frame == 1);  // sorted by frame
  CHECK(tracks[0].entries[1].frame == 2);
  CHECK_FALSE(tracks[0].entries[0].ignored);
  CHECK(tracks[1].object_id == 7);
  CHECK(tracks[1].entries[0].ignored);  // flag = 0

  CHECK_THROWS_AS(parse_mot_groundtruth("1,3,0,0,10,10,1,1,1\n1,3,5,5,10,10,1,1,1\n"),
                  DataError);
}

TEST_CASE("ground truth class filters") {
  const std::string text = "1,1,0,0,10,10,1,2,1.0\n1,2,0,0,10,10,1,5,1.0\n";
  const auto tracks = parse_mot_groundtruth(text, {2}, {5});
  CHECK_FALSE(tracks[0].entries[0].ignored);  // class 2 whitelisted
  CHECK(tracks[1].entries[0].ignored);        // class 5 ignored
}

TEST_CASE("filter detections") {
  std::vector<std::vector<Detection>> dets(1);
  dets[0].push_back({1, Box{0, 0, 20, 20}, 0.5, 1});    // score exactly 0.5 -> out
  dets[0].push_back({1, Box{0, 0, 16, 8}, 0.9, 1});     // area exactly 128 -> out
  dets[0].push_back({1, Box{0, 0, 20, 20}, 0.51, 1});   // kept
  const auto kept = filter_detections(dets);
  REQUIRE(kept[0].size() == 1);
  CHECK(kept[0][0].score == doctest::Approx(0.51));
  // Idempotent.
  const auto again = filter_detections(kept);
  CHECK(again[0].size() == kept[0].size());
}

TEST_CASE("result file round trip") {
  CHECK(write_mot_results({}).empty());

  Rng rng(21);
  std::vector<TrackedObs> tracks;
  for (int i = 0; i < 50; ++i) {
    TrackedObs o;
    o.frame = 1 + static_cast<int>(rng.below(20));
    o.track_id = 1 + static_cast<int>(rng.below(9));
    o.box = Box{rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(1, 80), rng.uniform(1, 80)};
    o.score = rng.uniform(0.0, 1.0);
    tracks.push_back(o);
  }
  const std::string text = write_mot_results(tracks);
  const auto parsed = parse_mot_results(text);
  REQUIRE(parsed.size() == tracks.size());
  // Output is sorted by frame then id; boxes survive to 0.01 px.
  for (std::size_t i = 1; i < parsed.size(); ++i) {
    CHECK((parsed[i - 1].frame < parsed[i].frame ||
           (parsed[i - 1].frame == parsed[i].frame &&
            parsed[i - 1].track_id <= parsed[i].track_id)));
  }
  std::sort(tracks.begin(), tracks.end(), [](const TrackedObs& a, const TrackedObs& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.track_id < b.track_id;
  });
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].frame == tracks[i].frame);
    CHECK(std::abs(parsed[i].box.x - tracks[i].box.x) <= 0.005 + 1e-9);
    CHECK(std::abs(parsed[i].box.y - tracks[i].box.y) <= 0.005 + 1e-9);
    CHECK(std::abs(parsed[i].box.w - tracks[i].box.w) <= 0.005 + 1e-9);
    CHECK(std::abs(parsed[i].box.h - tracks[i].box.h) <= 0.005 + 1e-9);
  }
}

TEST_CASE("seqinfo") {
  const SequenceMeta meta = parse_seqinfo("name=test\nfps=20\nwidth=1280\nheight=720\nframes=60\n");
  CHECK(meta.name == "test");
  CHECK(meta.fps == doctest::Approx(20.0));
  CHECK(meta.num_frames == 60);
  CHECK_THROWS_AS(parse_seqinfo("width=10\n"), DataError);

  const SequenceMeta back = parse_seqinfo(write_seqinfo(meta));
  CHECK(back.fps == meta.fps);
  CHECK(back.num_frames == meta.num_frames);

  // Section headers and comments are tolerated.
  const SequenceMeta ini = parse_seqinfo("[Sequence]\n# comment\nfps=10\nframes=5\n");
  CHECK(ini.fps == doctest::Approx(10.0));
}
