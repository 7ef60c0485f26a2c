#include "doctest.h"
#include "twix/rng.hpp"
#include "twix/tracklets.hpp"

using namespace twix;

namespace {

Sequence make_seq(int frames) {
  Sequence s;
  s.meta.num_frames = frames;
  s.meta.fps = 10;
  s.detections.resize(frames);
  return s;
}

void add_det(Sequence& s, int frame, Box box, double score = 0.9) {
  s.detections[frame - 1].push_back({frame, box, score, 1});
}

}  // namespace

TEST_CASE("static box becomes one tracklet") {
  Sequence s = make_seq(3);
  for (int f = 1; f <= 3; ++f) add_det(s, f, Box{10, 10, 20, 20});
  const auto tracklets = build_tracklets(s, 0.3);
  REQUIRE(tracklets.size() == 1);
  CHECK(tracklets[0].length() == 3);
  CHECK(tracklets[0].id == 1);
  CHECK(tracklets[0].frames == std::vector<int>{1, 2, 3});
}

TEST_CASE("crossing objects stay separate when self-IoU dominates") {
  // Two boxes moving toward each other; per-frame IoU with own successor
  // stays above IoU with the other.
  Sequence s = make_seq(5);
  for (int f = 1; f <= 5; ++f) {
    add_det(s, f, Box{10.0 * f, 0, 30, 30});        // left -> right
    add_det(s, f, Box{100.0 - 10.0 * f, 60, 30, 30});  // right -> left, offset in y
  }
  const auto tracklets = build_tracklets(s, 0.1);
  REQUIRE(tracklets.size() == 2);
  CHECK(tracklets[0].length() == 5);
  CHECK(tracklets[1].length() == 5);

  // Exhaustive check per adjacent pair: the chosen assignment is the one
  // maximizing total IoU among both possibilities.
  for (int f = 1; f < 5; ++f) {
    const Box a0 = s.detections[f - 1][0].box, a1 = s.detections[f - 1][1].box;
    const Box b0 = s.detections[f][0].box, b1 = s.detections[f][1].box;
    const double straight = iou(a0, b0) + iou(a1, b1);
    const double crossed = iou(a0, b1) + iou(a1, b0);
    CHECK(straight > crossed);
  }
}

TEST_CASE("detection gap splits tracklets") {
  Sequence s = make_seq(3);
  add_det(s, 1, Box{0, 0, 10, 10});
  add_det(s, 3, Box{0, 0, 10, 10});
  const auto tracklets = build_tracklets(s, 0.3);
  REQUIRE(tracklets.size() == 2);
  CHECK(tracklets[0].frames == std::vector<int>{1});
  CHECK(tracklets[1].frames == std::vector<int>{3});
}

TEST_CASE("theta_s = 1 isolates every detection") {
  Sequence s = make_seq(4);
  for (int f = 1; f <= 4; ++f) add_det(s, f, Box{0, 0, 10, 10});
  const auto tracklets = build_tracklets(s, 1.0);
  CHECK(tracklets.size() == 4);
  for (const Tracklet& t : tracklets) CHECK(t.length() == 1);
}

TEST_CASE("partition property and determinism") {
  Rng rng(13);
  Sequence s = make_seq(20);
  int total = 0;
  for (int f = 1; f <= 20; ++f) {
    const int n = static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) {
      add_det(s, f, Box{rng.uniform(0, 300), rng.uniform(0, 300), rng.uniform(5, 40),
                        rng.uniform(5, 40)});
      ++total;
    }
  }
  const auto a = build_tracklets(s, 0.2);
  int covered = 0;
  for (const Tracklet& t : a) {
    covered += t.length();
    for (int i = 1; i < t.length(); ++i) CHECK(t.frames[i] == t.frames[i - 1] + 1);
  }
  CHECK(covered == total);

  const auto b = build_tracklets(s, 0.2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].frames == b[i].frames);
  }
}

TEST_CASE("tracklet window") {
  Tracklet t;
  t.id = 4;
  for (int f : {3, 4, 5}) t.push(f, Box{1.0 * f, 0, 10, 10}, 0.5);

  const auto full = tracklet_window(t, 1, 10);
  REQUIRE(full.has_value());
  CHECK(full->frames == t.frames);
  CHECK(full->id == 4);

  CHECK_FALSE(tracklet_window(t, 7, 9).has_value());

  const auto part = tracklet_window(t, 4, 9);
  REQUIRE(part.has_value());
  CHECK(part->frames == std::vector<int>{4, 5});
}
