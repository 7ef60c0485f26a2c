#pragma once

#include <string>
#include <vector>

#include "twix/evaluation.hpp"
#include "twix/model.hpp"
#include "twix/pipeline.hpp"

namespace twix {

enum class AffinityMethod { L1, L2, IOU, BIOU, DIOU, GIOU, TWIX };

AffinityMethod parse_affinity_method(const std::string& name);

struct MapGrid {
  int resolution = 101;   // odd, >= 3; center cell is zero translation
  double extent_x = 0.0;  // 0 -> 3 * max(w, h) default
  double extent_y = 0.0;
};

struct SelfAffinityMap {
  int resolution = 0;
  double extent_x = 0.0, extent_y = 0.0;
  std::vector<double> values;  // resolution x resolution, row = dy, col = dx
  double at(int iy, int ix) const { return values[static_cast<std::size_t>(iy) * resolution + ix]; }
  double dx_of(int ix) const { return extent_x * (2.0 * ix / (resolution - 1) - 1.0); }
  double dy_of(int iy) const { return extent_y * (2.0 * iy / (resolution - 1) - 1.0); }
};

struct TwixMapContext {
  const TwixWeightsF* weights = nullptr;
  int history_length = 8;  // stationary past observations
  int gap = 1;             // frames between the last past and the future box
};

// Affinity between a box and its translated copy over a translation grid.
// Distance methods are negated so that higher always means more similar.
SelfAffinityMap self_affinity_map(const Box& box, AffinityMethod method, const MapGrid& grid,
                                  const TwixMapContext* twix = nullptr, double biou_buffer = 0.3);

std::string map_csv(const SelfAffinityMap& map);
// 8-bit binary PGM, min-max scaled per map ("the whiter, the higher").
std::string map_pgm(const SelfAffinityMap& map);

// HOTA over a (theta_1, theta_2) grid; 1.0 is appended to both axes when
// absent so the single-stage configurations are always included.
struct ThresholdHeatmap {
  std::vector<double> theta_1;
  std::vector<double> theta_2;
  std::vector<double> hota;  // theta_1-major
  double at(int i1, int i2) const { return hota[static_cast<std::size_t>(i1) * theta_2.size() + i2]; }
};

ThresholdHeatmap threshold_heatmap(const std::vector<Sequence>& sequences,
                                   const TwixWeightsF& weights_1, const TwixWeightsF& weights_2,
                                   PipelineParams params, std::vector<double> theta_1_grid,
                                   std::vector<double> theta_2_grid, bool oracle = false,
                                   int jobs = 1);

std::string heatmap_csv(const ThresholdHeatmap& map);

}  // namespace twix
