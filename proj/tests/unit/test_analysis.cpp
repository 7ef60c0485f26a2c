#include "doctest.h"
#include "twix/analysis.hpp"
#include "twix/errors.hpp"
#include "twix/synthdata.hpp"

using namespace twix;

namespace {

MapGrid grid21(double extent) {
  MapGrid g;
  g.resolution = 21;
  g.extent_x = extent;
  g.extent_y = extent;
  return g;
}

}  // namespace

TEST_CASE("iou map center and support") {
  const Box box{100, 100, 30, 60};
  const auto map = self_affinity_map(box, AffinityMethod::IOU, grid21(90));
  const int c = map.resolution / 2;
  CHECK(map.at(c, c) == doctest::Approx(1.0));
  for (int iy = 0; iy < map.resolution; ++iy)
    for (int ix = 0; ix < map.resolution; ++ix) {
      const double dx = map.dx_of(ix), dy = map.dy_of(iy);
      if (std::abs(dx) >= box.w || std::abs(dy) >= box.h)
        CHECK(map.at(iy, ix) == 0.0);  // exactly zero outside the overlap region
      else
        CHECK(map.at(iy, ix) > 0.0);
    }
}

TEST_CASE("giou and diou stay negative beyond the overlap region") {
  const Box box{100, 100, 30, 60};
  for (auto method : {AffinityMethod::GIOU, AffinityMethod::DIOU}) {
    const auto map = self_affinity_map(box, method, grid21(120));
    for (int iy = 0; iy < map.resolution; ++iy)
      for (int ix = 0; ix < map.resolution; ++ix) {
        const double dx = map.dx_of(ix), dy = map.dy_of(iy);
        if (std::abs(dx) > box.w || std::abs(dy) > box.h) CHECK(map.at(iy, ix) < 0.0);
      }
  }
}

TEST_CASE("distance map symmetries") {
  const Box box{0, 0, 20, 40};
  for (auto method : {AffinityMethod::L1, AffinityMethod::L2}) {
    const auto map = self_affinity_map(box, method, grid21(50));
    const int n = map.resolution;
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        CHECK(map.at(iy, ix) == doctest::Approx(map.at(n - 1 - iy, n - 1 - ix)));
        CHECK(map.at(iy, ix) == doctest::Approx(map.at(iy, n - 1 - ix)));
        CHECK(map.at(iy, ix) == doctest::Approx(map.at(n - 1 - iy, ix)));
        CHECK(map.at(iy, ix) <= 0.0);  // negated distances
      }
    // L1 level sets are diamonds; L2 level sets are circles. On the grid:
    // equal |dx| + |dy| implies equal L1 value.
    CHECK(map.at(n / 2, n / 2) == doctest::Approx(0.0));
  }
  // IoU and BIoU maps are separately symmetric in dx and dy as well.
  for (auto method : {AffinityMethod::IOU, AffinityMethod::BIOU}) {
    const auto map = self_affinity_map(box, method, grid21(50));
    const int n = map.resolution;
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        CHECK(map.at(iy, ix) == doctest::Approx(map.at(iy, n - 1 - ix)));
        CHECK(map.at(iy, ix) == doctest::Approx(map.at(n - 1 - iy, ix)));
      }
  }
}

TEST_CASE("twix map requires weights") {
  CHECK_THROWS_AS(self_affinity_map(Box{0, 0, 10, 10}, AffinityMethod::TWIX, grid21(10)),
                  DataError);
  CHECK_THROWS_AS(self_affinity_map(Box{0, 0, 10, 10}, AffinityMethod::IOU,
                                    MapGrid{4, 10.0, 10.0}),
                  DataError);

  TwixHyper h{8, 2, 8, 1, 1};
  const TwixWeightsF w = to_float(init_twix_weights(h, 3));
  TwixMapContext ctx;
  ctx.weights = &w;
  ctx.history_length = 4;
  ctx.gap = 1;
  MapGrid g;
  g.resolution = 5;
  g.extent_x = 20;
  g.extent_y = 20;
  const auto map = self_affinity_map(Box{50, 50, 20, 40}, AffinityMethod::TWIX, g, &ctx);
  for (double v : map.values) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
  const auto again = self_affinity_map(Box{50, 50, 20, 40}, AffinityMethod::TWIX, g, &ctx);
  CHECK(map.values == again.values);
}

TEST_CASE("map serialization") {
  const auto map = self_affinity_map(Box{0, 0, 10, 10}, AffinityMethod::IOU, grid21(15));
  const std::string csv = map_csv(map);
  CHECK(csv.find("dy\\dx") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);  // header + 21 rows

  const std::string pgm = map_pgm(map);
  CHECK(pgm.substr(0, 2) == "P5");
  CHECK(pgm.size() > 21 * 21);
  // Center cell (max affinity) is the whitest pixel.
  const std::size_t header = pgm.find("255\n") + 4;
  CHECK(static_cast<unsigned char>(pgm[header + 10 * 21 + 10]) == 255);
}

TEST_CASE("threshold heatmap") {
  TwixHyper h{8, 2, 8, 1, 1};
  const TwixWeightsF w1 = to_float(init_twix_weights(h, 5));
  const TwixWeightsF w2 = to_float(init_twix_weights(h, 6));

  ScenarioConfig cfg;
  cfg.num_objects = 3;
  cfg.num_frames = 20;
  cfg.fps = 10;
  const Sequence seq = generate(cfg, 21);

  PipelineParams params;
  params.theta_T = 0.5;
  params.t_A = 0.5;
  params.t_P = 0.4;

  // Single-cell grid: one tracking run; theta = 1 rows/cols are appended.
  const ThresholdHeatmap map =
      threshold_heatmap({seq}, w1, w2, params, {-0.5}, {-0.5}, true, 1);
  CHECK(map.theta_1 == std::vector<double>{-0.5, 1.0});
  CHECK(map.theta_2 == std::vector<double>{-0.5, 1.0});
  REQUIRE(map.hota.size() == 4);
  for (double v : map.hota) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // Degenerate corner: both stages off. Every detection becomes its own
  // one-frame track, so association collapses but detection persists.
  const double corner = map.at(1, 1);
  CHECK(corner < map.at(0, 0) + 1e-12);

  // Deterministic across runs and worker counts.
  const ThresholdHeatmap again =
      threshold_heatmap({seq}, w1, w2, params, {-0.5}, {-0.5}, true, 2);
  CHECK(map.hota == again.hota);
}
