#include "twix/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "twix/batching.hpp"
#include "twix/errors.hpp"

namespace twix {

AffinityMethod parse_affinity_method(const std::string& name) {
  if (name == "l1") return AffinityMethod::L1;
  if (name == "l2") return AffinityMethod::L2;
  if (name == "iou") return AffinityMethod::IOU;
  if (name == "biou") return AffinityMethod::BIOU;
  if (name == "diou") return AffinityMethod::DIOU;
  if (name == "giou") return AffinityMethod::GIOU;
  if (name == "twix") return AffinityMethod::TWIX;
  throw DataError("unknown affinity method: " + name);
}

namespace {

double twix_self_affinity(const Box& box, const Box& translated, const TwixMapContext& ctx) {
  // One stationary past tracklet and the translated box as the single
  // future detection after the configured gap.
  TrackletBatch batch;
  Tracklet past;
  past.id = 1;
  for (int t = 0; t < ctx.history_length; ++t) past.push(t + 1, box, 1.0);
  Tracklet future;
  future.id = 2;
  future.push(ctx.history_length + ctx.gap, translated, 1.0);
  batch.f_P = ctx.history_length;
  batch.f_F = ctx.history_length + ctx.gap;
  batch.past.push_back(std::move(past));
  batch.future.push_back(std::move(future));
  const TensorF a = affinity_forward(batch, *ctx.weights);
  return static_cast<double>(a.at(0, 0));
}

}  // namespace

SelfAffinityMap self_affinity_map(const Box& box, AffinityMethod method, const MapGrid& grid,
                                  const TwixMapContext* twix, double biou_buffer) {
  if (grid.resolution < 3 || grid.resolution % 2 == 0)
    throw DataError("self_affinity_map: resolution must be odd and >= 3");
  if (method == AffinityMethod::TWIX && (twix == nullptr || twix->weights == nullptr))
    throw DataError("self_affinity_map: TWiX method requires weights");

  SelfAffinityMap map;
  map.resolution = grid.resolution;
  map.extent_x = grid.extent_x > 0.0 ? grid.extent_x : 3.0 * std::max(box.w, box.h);
  map.extent_y = grid.extent_y > 0.0 ? grid.extent_y : 3.0 * std::max(box.w, box.h);
  map.values.resize(static_cast<std::size_t>(grid.resolution) * grid.resolution);

  for (int iy = 0; iy < grid.resolution; ++iy) {
    for (int ix = 0; ix < grid.resolution; ++ix) {
      const double dx = map.dx_of(ix);
      const double dy = map.dy_of(iy);
      Box t = box;
      t.x += dx;
      t.y += dy;
      double v = 0.0;
      switch (method) {
        case AffinityMethod::L1: v = -center_distance(box, t, Norm::L1); break;
        case AffinityMethod::L2: v = -center_distance(box, t, Norm::L2); break;
        case AffinityMethod::IOU: v = iou(box, t); break;
        case AffinityMethod::BIOU: v = buffered_iou(box, t, biou_buffer); break;
        case AffinityMethod::DIOU: v = diou(box, t); break;
        case AffinityMethod::GIOU: v = giou(box, t); break;
        case AffinityMethod::TWIX: v = twix_self_affinity(box, t, *twix); break;
      }
      map.values[static_cast<std::size_t>(iy) * grid.resolution + ix] = v;
    }
  }
  return map;
}

std::string map_csv(const SelfAffinityMap& map) {
  char buf[64];
  std::string out = "dy\\dx";
  for (int ix = 0; ix < map.resolution; ++ix) {
    std::snprintf(buf, sizeof(buf), ",%.3f", map.dx_of(ix));
    out += buf;
  }
  out += "\n";
  for (int iy = 0; iy < map.resolution; ++iy) {
    std::snprintf(buf, sizeof(buf), "%.3f", map.dy_of(iy));
    out += buf;
    for (int ix = 0; ix < map.resolution; ++ix) {
      std::snprintf(buf, sizeof(buf), ",%.6g", map.at(iy, ix));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string map_pgm(const SelfAffinityMap& map) {
  double lo = map.values[0], hi = map.values[0];
  for (double v : map.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::string out = "P5\n" + std::to_string(map.resolution) + " " +
                    std::to_string(map.resolution) + "\n255\n";
  for (double v : map.values)
    out.push_back(static_cast<char>(static_cast<unsigned char>(
        std::lround(255.0 * (v - lo) / span))));
  return out;
}

ThresholdHeatmap threshold_heatmap(const std::vector<Sequence>& sequences,
                                   const TwixWeightsF& weights_1, const TwixWeightsF& weights_2,
                                   PipelineParams params, std::vector<double> theta_1_grid,
                                   std::vector<double> theta_2_grid, bool oracle, int jobs) {
  if (sequences.empty()) throw DataError("threshold_heatmap: no sequences");
  auto ensure_one = [](std::vector<double>& grid) {
    if (std::find(grid.begin(), grid.end(), 1.0) == grid.end()) grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
  };
  ensure_one(theta_1_grid);
  ensure_one(theta_2_grid);

  ThresholdHeatmap map;
  map.theta_1 = theta_1_grid;
  map.theta_2 = theta_2_grid;
  map.hota.assign(theta_1_grid.size() * theta_2_grid.size(), 0.0);

  struct Cell {
    int i1, i2;
  };
  std::vector<Cell> cells;
  for (std::size_t i1 = 0; i1 < theta_1_grid.size(); ++i1)
    for (std::size_t i2 = 0; i2 < theta_2_grid.size(); ++i2)
      cells.push_back({static_cast<int>(i1), static_cast<int>(i2)});

  auto run_cell = [&](const Cell& c) {
    PipelineParams p = params;
    p.theta_1 = theta_1_grid[c.i1];
    p.theta_2 = theta_2_grid[c.i2];
    EvalCounts total;
    for (const Sequence& seq : sequences) {
      PipelineParams sp = p;
      sp.fps = seq.meta.fps;
      const TrackingRun run = oracle ? track_sequence_oracle(seq, weights_1, weights_2, sp)
                                     : track_sequence(seq, weights_1, weights_2, sp);
      total = merge_counts(total, eval_counts(run.results, seq));
    }
    map.hota[static_cast<std::size_t>(c.i1) * theta_2_grid.size() + c.i2] =
        finalize(total).hota;
  };

  if (jobs <= 1) {
    for (const Cell& c : cells) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) break;
          run_cell(cells[i]);
        }
      });
    for (auto& w : workers) w.join();
  }
  return map;
}

std::string heatmap_csv(const ThresholdHeatmap& map) {
  char buf[64];
  std::string out = "theta_1\\theta_2";
  for (double t2 : map.theta_2) {
    std::snprintf(buf, sizeof(buf), ",%.3f", t2);
    out += buf;
  }
  out += "\n";
  for (std::size_t i1 = 0; i1 < map.theta_1.size(); ++i1) {
    std::snprintf(buf, sizeof(buf), "%.3f", map.theta_1[i1]);
    out += buf;
    for (std::size_t i2 = 0; i2 < map.theta_2.size(); ++i2) {
      std::snprintf(buf, sizeof(buf), ",%.6g", map.at(static_cast<int>(i1), static_cast<int>(i2)));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace twix
