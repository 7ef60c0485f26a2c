#include "twix/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "twix/errors.hpp"
#include "twix/rng.hpp"
#include "twix/tracklets.hpp"

namespace twix {

namespace {

struct SeqData {
  std::vector<Tracklet> tracklets;
  std::vector<GtAssignment> gt;
  BatchConfig batch_cfg;
};

struct BatchRef {
  int seq = 0;
  int f_P = 0;
  int f_F = 0;
};

// Tracklets, GT assignments and the eligible reference-frame pairs for every
// sequence. Eligibility = make_batch yields a non-empty batch.
std::pair<std::vector<SeqData>, std::vector<BatchRef>> prepare(
    const std::vector<Sequence>& sequences, const TrainConfig& cfg, bool require_positive_info) {
  if (sequences.empty()) throw DataError("training: no sequences");
  std::vector<SeqData> data(sequences.size());
  std::vector<BatchRef> eligible;
  bool any_gt = false;
  bool any_positive = false;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const Sequence& seq = sequences[s];
    if (seq.has_gt) any_gt = true;
    data[s].batch_cfg = cfg.batch;
    data[s].batch_cfg.fps = seq.meta.fps;
    if (cfg.stage == Stage::FIRST) data[s].batch_cfg.t_G = 0.0;
    data[s].tracklets = build_tracklets(seq, cfg.theta_s);
    data[s].gt = assign_tracklets_to_gt(data[s].tracklets, seq.gt_tracks);
    const auto pairs = sample_batch_frames(seq.meta.num_frames, data[s].tracklets,
                                           data[s].batch_cfg, cfg.stage);
    for (const auto& [f_P, f_F] : pairs) {
      const auto batch = make_batch(data[s].tracklets, data[s].gt, f_P, f_F, data[s].batch_cfg);
      if (!batch) continue;
      eligible.push_back({static_cast<int>(s), f_P, f_F});
      if (!any_positive) {
        for (PairLabel l : batch->labels)
          if (l == PairLabel::POSITIVE) {
            any_positive = true;
            break;
          }
      }
    }
  }
  if (!any_gt) throw DataError("training: no sequence has ground truth");
  const std::string stage_name = cfg.stage == Stage::FIRST ? "first" : "second";
  if (eligible.empty())
    throw DataError("training: no eligible batches for stage " + stage_name +
                    " (t_G = " + std::to_string(cfg.batch.t_G) + " s)");
  if (require_positive_info && !any_positive)
    throw DataError("training: every eligible batch has zero positive pairs (stage " +
                    stage_name + ", t_G = " + std::to_string(cfg.batch.t_G) + " s)");
  return {std::move(data), std::move(eligible)};
}

TwixWeights frozen_copy(const TwixWeights& weights) {
  TwixWeights out = init_twix_weights(weights.hyper, 0, nullptr);
  std::vector<Tensor> dst = out.params();
  const std::vector<Tensor> src = weights.params();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].values_mut() = src[i].values();
  return out;
}

}  // namespace

TrainResult train(const std::vector<Sequence>& sequences, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw DataError("training: epochs must be >= 1");
  if (cfg.stage == Stage::SECOND && cfg.batch.t_G <= 0.0)
    throw DataError("training: second stage requires t_G > 0");

  auto [data, eligible] = prepare(sequences, cfg, true);

  TwixHyper hyper = cfg.hyper;
  hyper.intra_layers = cfg.stage_layers();
  hyper.inter_layers = cfg.stage_layers();

  Tape<double> tape;
  TwixWeights weights = init_twix_weights(hyper, cfg.seed, &tape);
  std::vector<Tensor> params = weights.params();
  AdamState adam;
  const double lr = cfg.stage_lr();

  const std::size_t per_epoch =
      (eligible.size() + static_cast<std::size_t>(cfg.subsample) - 1) / cfg.subsample;

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(eligible.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(cfg.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    order.resize(std::max<std::size_t>(1, per_epoch));

    double loss_sum = 0.0;
    long steps = 0;
    RankingStats rank;
    for (std::size_t idx : order) {
      const BatchRef& ref = eligible[idx];
      const auto batch = make_batch(data[ref.seq].tracklets, data[ref.seq].gt, ref.f_P, ref.f_F,
                                    data[ref.seq].batch_cfg);
      const Labels labels = Labels::from_batch(*batch);
      bool has_positive = false;
      for (PairLabel l : labels.v)
        if (l == PairLabel::POSITIVE) {
          has_positive = true;
          break;
        }
      if (!has_positive) continue;  // Eqs. divide by N+; skip empty-positive batches

      Tensor pred = affinity_forward(*batch, weights);
      Tensor loss = compute_loss(pred, labels, cfg.loss);
      loss_sum += loss.value();
      const RankingStats rs = ranking_stats(pred.values(), labels);
      rank.positives += rs.positives;
      rank.ranked_first += rs.ranked_first;

      for (Tensor& p : params) p.zero_grad();
      backward(loss);
      adam_step(params, adam, lr);
      tape.clear();
      ++steps;
    }

    EpochStats es;
    es.epoch = epoch;
    es.batches = steps;
    es.mean_loss = steps > 0 ? loss_sum / steps : 0.0;
    es.ranking_accuracy = rank.accuracy();
    result.log.push_back(es);
  }

  result.weights = frozen_copy(weights);
  return result;
}

ValidationResult validate(const TwixWeights& weights, const std::vector<Sequence>& held_out,
                          const TrainConfig& cfg) {
  if (held_out.empty()) throw DataError("validate: empty held-out set");
  auto [data, eligible] = prepare(held_out, cfg, false);

  ValidationResult out;
  double loss_sum = 0.0;
  long counted = 0;
  RankingStats rank;
  for (const BatchRef& ref : eligible) {
    const auto batch = make_batch(data[ref.seq].tracklets, data[ref.seq].gt, ref.f_P, ref.f_F,
                                  data[ref.seq].batch_cfg);
    const Labels labels = Labels::from_batch(*batch);
    bool has_positive = false;
    for (PairLabel l : labels.v)
      if (l == PairLabel::POSITIVE) {
        has_positive = true;
        break;
      }
    if (!has_positive) continue;
    Tensor pred = affinity_forward(*batch, weights);
    loss_sum += compute_loss(pred, labels, cfg.loss).value();
    const RankingStats rs = ranking_stats(pred.values(), labels);
    rank.positives += rs.positives;
    rank.ranked_first += rs.ranked_first;
    ++counted;
  }
  if (counted == 0) throw DataError("validate: no batches with positive pairs");
  out.mean_loss = loss_sum / counted;
  out.ranking_accuracy = rank.accuracy();
  out.batches = counted;
  return out;
}

std::string epoch_log_csv(const std::vector<EpochStats>& log) {
  std::string out = "epoch,mean_loss,ranking_accuracy\n";
  char buf[128];
  for (const EpochStats& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f\n", e.epoch, e.mean_loss, e.ranking_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace twix
