#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twix/batching.hpp"
#include "twix/ingestion.hpp"
#include "twix/loss.hpp"
#include "twix/model.hpp"

namespace twix {

struct TrainConfig {
  int epochs = 30;
  double lr_first = 1e-4;
  double lr_second = 1e-3;
  int layers_first = 1;
  int layers_second = 4;
  LossConfig loss;
  BatchConfig batch;  // fps is taken from each sequence
  std::uint64_t seed = 0;
  Stage stage = Stage::FIRST;
  double theta_s = 0.3;  // tracklet-building IoU threshold
  int subsample = 1;     // use ceil(n / subsample) eligible batches per epoch
  TwixHyper hyper;       // layer counts are overridden by the stage preset

  double stage_lr() const { return stage == Stage::FIRST ? lr_first : lr_second; }
  int stage_layers() const { return stage == Stage::FIRST ? layers_first : layers_second; }
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double ranking_accuracy = 0.0;
  long batches = 0;
};

struct TrainResult {
  TwixWeights weights;  // frozen (no tape)
  std::vector<EpochStats> log;
};

// Trains one TWiX module on sequences with ground truth. Tracklets come from
// the sequences' detections; batches follow the stage's sampling rule.
// Deterministic for a given seed. Raises DataError when no eligible batch
// exists or every eligible batch lacks positive pairs.
TrainResult train(const std::vector<Sequence>& sequences, const TrainConfig& cfg);

struct ValidationResult {
  double mean_loss = 0.0;        // over batches with at least one positive
  double ranking_accuracy = 0.0;
  long batches = 0;
};

ValidationResult validate(const TwixWeights& weights, const std::vector<Sequence>& held_out,
                          const TrainConfig& cfg);

std::string epoch_log_csv(const std::vector<EpochStats>& log);

}  // namespace twix
