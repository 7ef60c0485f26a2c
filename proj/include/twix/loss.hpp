#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twix/batching.hpp"
#include "twix/tensor.hpp"

namespace twix {

enum class LossVariant {
  BIDIRECTIONAL,
  FORWARD,
  BACKWARD,
  BCE,
  FOCAL,
  TRIPLET_RANDOM,
  TRIPLET_HARD,
};

LossVariant parse_loss_variant(const std::string& name);
std::string loss_variant_name(LossVariant v);

struct LossConfig {
  double tau = 0.1;            // temperature
  double batch_scale = 1024.0; // B
  LossVariant variant = LossVariant::BIDIRECTIONAL;
  double focal_gamma = 2.0;
  double triplet_margin = 0.3;
  std::uint64_t seed = 0;      // negative sampling for the random triplet loss
};

// Label matrix Y with explicit shape.
struct Labels {
  int rows = 0;
  int cols = 0;
  std::vector<PairLabel> v;

  static Labels from_batch(const TrackletBatch& batch);
  PairLabel at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  Labels transposed() const;
};

// Contrastive loss of one positive score against a set of negatives,
// log(1 + (B / N_neg) * sum exp(-(s+ - s-) / tau)), stabilized via
// log-sum-exp. Empty negative set contributes 0.
Tensor contrastive_single(const Tensor& s_plus, const Tensor& negatives, const LossConfig& cfg);
double contrastive_single_value(double s_plus, const std::vector<double>& negatives,
                                const LossConfig& cfg);

// Row-wise contrastive loss: mean over positive pairs of contrastive_single
// against the same-row negatives. IGNORED entries take part in neither side;
// zero positives yield 0.
Tensor forward_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg);
// Column-wise analogue.
Tensor backward_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg);
// Sum of the two.
Tensor bidirectional_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg);

// Ablation losses (cfg.variant selects BCE / FOCAL / TRIPLET_*). BCE and
// focal map scores from (-1,1) to (0,1) and average over non-IGNORED
// entries; the triplet losses pick one same-row-or-column negative per
// positive (seeded random, or the highest-affinity one) under a hinge.
Tensor ablation_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg);

// Dispatch on cfg.variant.
Tensor compute_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg);

// Fraction of positive pairs whose affinity strictly exceeds every same-row
// and same-column negative. Pairs counted over non-IGNORED entries only.
struct RankingStats {
  long positives = 0;
  long ranked_first = 0;
  double accuracy() const {
    return positives > 0 ? static_cast<double>(ranked_first) / positives : 0.0;
  }
};
RankingStats ranking_stats(const std::vector<double>& pred, const Labels& labels);

}  // namespace twix
