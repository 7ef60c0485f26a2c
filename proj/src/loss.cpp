#include "twix/loss.hpp"

#include <algorithm>
#include <cmath>

#include "twix/errors.hpp"
#include "twix/rng.hpp"

namespace twix {

LossVariant parse_loss_variant(const std::string& name) {
  if (name == "bidirectional") return LossVariant::BIDIRECTIONAL;
  if (name == "forward") return LossVariant::FORWARD;
  if (name == "backward") return LossVariant::BACKWARD;
  if (name == "bce") return LossVariant::BCE;
  if (name == "focal") return LossVariant::FOCAL;
  if (name == "triplet_random") return LossVariant::TRIPLET_RANDOM;
  if (name == "triplet_hard") return LossVariant::TRIPLET_HARD;
  throw DataError("unknown loss variant: " + name);
}

std::string loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::BIDIRECTIONAL: return "bidirectional";
    case LossVariant::FORWARD: return "forward";
    case LossVariant::BACKWARD: return "backward";
    case LossVariant::BCE: return "bce";
    case LossVariant::FOCAL: return "focal";
    case LossVariant::TRIPLET_RANDOM: return "triplet_random";
    case LossVariant::TRIPLET_HARD: return "triplet_hard";
  }
  return "?";
}

Labels Labels::from_batch(const TrackletBatch& batch) {
  Labels l;
  l.rows = batch.n_past();
  l.cols = batch.n_future();
  l.v = batch.labels;
  return l;
}

Labels Labels::transposed() const {
  Labels t;
  t.rows = cols;
  t.cols = rows;
  t.v.resize(v.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t.v[static_cast<std::size_t>(j) * rows + i] = at(i, j);
  return t;
}

Tensor contrastive_single(const Tensor& s_plus, const Tensor& negatives, const LossConfig& cfg) {
  const int n_neg = static_cast<int>(negatives.size());
  if (n_neg == 0) return Tensor::scalar(0.0);
  // w_k = (s-_k - s+) / tau + log(B / N_neg); loss = log(1 + sum exp(w_k)),
  // evaluated as a log-sum-exp over {0, w_1..w_k} with a constant shift.
  Tensor w = add_scalar(scale(sub_bcast(negatives, s_plus), 1.0 / cfg.tau),
                        std::log(cfg.batch_scale / n_neg));
  double m = 0.0;
  for (double x : w.values()) m = std::max(m, x);
  Tensor inner = add_scalar(reduce_sum(exp_t(add_scalar(w, -m))), std::exp(-m));
  return add_scalar(log_t(inner), m);
}

double contrastive_single_value(double s_plus, const std::vector<double>& negatives,
                                const LossConfig& cfg) {
  if (negatives.empty()) return 0.0;
  Tensor negs = Tensor::from_values(static_cast<int>(negatives.size()), 1,
                                    std::vector<double>(negatives));
  return contrastive_single(Tensor::scalar(s_plus), negs, cfg).value();
}

namespace {

void check_shapes(const Tensor& pred, const Labels& labels) {
  if (pred.rows() != labels.rows || pred.cols() != labels.cols)
    throw NumericError("loss: prediction and label shapes differ");
}

// Sums a list of scalar terms; empty list -> plain zero.
Tensor sum_terms(const std::vector<Tensor>& terms) {
  if (terms.empty()) return Tensor::scalar(0.0);
  if (terms.size() == 1) return terms[0];
  return reduce_sum(concat_rows(terms));
}

}  // namespace

Tensor forward_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg) {
  check_shapes(pred, labels);
  std::vector<Tensor> terms;
  int n_pos = 0;
  for (int i = 0; i < labels.rows; ++i) {
    std::vector<int> row_negs;
    for (int l = 0; l < labels.cols; ++l)
      if (labels.at(i, l) == PairLabel::NEGATIVE) row_negs.push_back(i * labels.cols + l);
    for (int j = 0; j < labels.cols; ++j) {
      if (labels.at(i, j) != PairLabel::POSITIVE) continue;
      ++n_pos;
      if (row_negs.empty()) continue;
      Tensor s_plus = gather(pred, {i * labels.cols + j});
      Tensor negs = gather(pred, row_negs);
      terms.push_back(contrastive_single(s_plus, negs, cfg));
    }
  }
  if (n_pos == 0) return Tensor::scalar(0.0);
  return scale(sum_terms(terms), 1.0 / n_pos);
}

Tensor backward_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg) {
  check_shapes(pred, labels);
  return forward_loss(transpose(pred), labels.transposed(), cfg);
}

Tensor bidirectional_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg) {
  return add(forward_loss(pred, labels, cfg), backward_loss(pred, labels, cfg));
}

namespace {

constexpr double kProbEps = 1e-12;

// Union of same-row and same-column NEGATIVE cells for positive (i, j), as
// flat indices in deterministic order.
std::vector<int> triplet_negatives(const Labels& labels, int i, int j) {
  std::vector<int> out;
  for (int l = 0; l < labels.cols; ++l)
    if (labels.at(i, l) == PairLabel::NEGATIVE) out.push_back(i * labels.cols + l);
  for (int k = 0; k < labels.rows; ++k)
    if (labels.at(k, j) == PairLabel::NEGATIVE) out.push_back(k * labels.cols + j);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Tensor bce_like_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg,
                     bool focal) {
  // Map affinities from (-1, 1) to probabilities.
  Tensor p = clamp_t(scale(add_scalar(pred, 1.0), 0.5), kProbEps, 1.0 - kProbEps);
  std::vector<int> pos, neg;
  for (int i = 0; i < labels.rows; ++i)
    for (int j = 0; j < labels.cols; ++j) {
      const int flat = i * labels.cols + j;
      if (labels.at(i, j) == PairLabel::POSITIVE) pos.push_back(flat);
      if (labels.at(i, j) == PairLabel::NEGATIVE) neg.push_back(flat);
    }
  const int count = static_cast<int>(pos.size() + neg.size());
  if (count == 0) return Tensor::scalar(0.0);

  auto term = [&](const std::vector<int>& idx, bool positive) -> Tensor {
    Tensor pt = gather(p, idx);
    Tensor p_true = positive ? pt : add_scalar(scale(pt, -1.0), 1.0);  // p_t
    Tensor log_pt = log_t(p_true);
    if (focal) {
      // -(1 - p_t)^gamma * log(p_t)
      Tensor one_minus = clamp_t(add_scalar(scale(p_true, -1.0), 1.0), kProbEps, 1.0);
      Tensor weight = exp_t(scale(log_t(one_minus), cfg.focal_gamma));
      return scale(reduce_sum(mul(weight, log_pt)), -1.0);
    }
    return scale(reduce_sum(log_pt), -1.0);
  };

  std::vector<Tensor> parts;
  if (!pos.empty()) parts.push_back(term(pos, true));
  if (!neg.empty()) parts.push_back(term(neg, false));
  return scale(sum_terms(parts), 1.0 / count);
}

Tensor triplet_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg, bool hard) {
  std::vector<Tensor> terms;
  int n_pos = 0;
  for (int i = 0; i < labels.rows; ++i)
    for (int j = 0; j < labels.cols; ++j) {
      if (labels.at(i, j) != PairLabel::POSITIVE) continue;
      ++n_pos;
      const std::vector<int> negs = triplet_negatives(labels, i, j);
      if (negs.empty()) continue;
      int chosen;
      if (hard) {
        chosen = negs[0];
        for (int idx : negs)
          if (pred.values()[idx] > pred.values()[chosen]) chosen = idx;
      } else {
        Rng rng(cfg.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(
                                                        i * labels.cols + j + 1)));
        chosen = negs[rng.below(negs.size())];
      }
      Tensor s_plus = gather(pred, {i * labels.cols + j});
      Tensor s_minus = gather(pred, {chosen});
      terms.push_back(relu(add_scalar(sub(s_minus, s_plus), cfg.triplet_margin)));
    }
  if (n_pos == 0) return Tensor::scalar(0.0);
  return scale(sum_terms(terms), 1.0 / n_pos);
}

}  // namespace

Tensor ablation_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg) {
  check_shapes(pred, labels);
  switch (cfg.variant) {
    case LossVariant::BCE: return bce_like_loss(pred, labels, cfg, false);
    case LossVariant::FOCAL: return bce_like_loss(pred, labels, cfg, true);
    case LossVariant::TRIPLET_RANDOM: return triplet_loss(pred, labels, cfg, false);
    case LossVariant::TRIPLET_HARD: return triplet_loss(pred, labels, cfg, true);
    default: throw NumericError("ablation_loss: not an ablation variant");
  }
}

Tensor compute_loss(const Tensor& pred, const Labels& labels, const LossConfig& cfg) {
  switch (cfg.variant) {
    case LossVariant::BIDIRECTIONAL: return bidirectional_loss(pred, labels, cfg);
    case LossVariant::FORWARD: return forward_loss(pred, labels, cfg);
    case LossVariant::BACKWARD: return backward_loss(pred, labels, cfg);
    default: return ablation_loss(pred, labels, cfg);
  }
}

RankingStats ranking_stats(const std::vector<double>& pred, const Labels& labels) {
  RankingStats stats;
  for (int i = 0; i < labels.rows; ++i)
    for (int j = 0; j < labels.cols; ++j) {
      if (labels.at(i, j) != PairLabel::POSITIVE) continue;
      stats.positives += 1;
      const double s = pred[static_cast<std::size_t>(i) * labels.cols + j];
      bool first = true;
      for (int l = 0; l < labels.cols && first; ++l)
        if (labels.at(i, l) == PairLabel::NEGATIVE &&
            pred[static_cast<std::size_t>(i) * labels.cols + l] >= s)
          first = false;
      for (int k = 0; k < labels.rows && first; ++k)
        if (labels.at(k, j) == PairLabel::NEGATIVE &&
            pred[static_cast<std::size_t>(k) * labels.cols + j] >= s)
          first = false;
      if (first) stats.ranked_first += 1;
    }
  return stats;
}

}  // namespace twix
