#include "twix/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "twix/assignment.hpp"
#include "twix/errors.hpp"

namespace twix {

std::vector<double> default_alphas() {
  std::vector<double> a;
  for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
  return a;
}

namespace {

constexpr double kInfeasible = -1e9;
constexpr double kContinuity = 1e3;     // CLEAR: prefer the previous assignment
constexpr double kTieWeight = 9.5367431640625e-07;  // 2^-20, association tie weight

struct FrameData {
  std::vector<int> gt;    // dense gt indices present in this frame
  std::vector<int> pred;  // dense pred indices
  std::vector<double> sim;  // |gt| x |pred| IoU matrix, row-major
  double at(int i, int j) const { return sim[static_cast<std::size_t>(i) * pred.size() + j]; }
};

}  // namespace

EvalCounts eval_counts(const std::vector<TrackedObs>& results, const Sequence& gt_seq,
                       const std::vector<double>& alphas) {
  if (!gt_seq.has_gt) throw DataError("evaluate: sequence has no ground truth");
  const int num_frames = gt_seq.meta.num_frames;
  for (const TrackedObs& o : results)
    if (o.frame < 1 || o.frame > num_frames)
      throw DataError("evaluate: result frame outside the sequence");

  // Dense ids in ascending order.
  std::map<int, int> gt_index;
  for (const GroundTruthTrack& t : gt_seq.gt_tracks) {
    bool any_scored = false;
    for (const GroundTruthEntry& e : t.entries) any_scored = any_scored || !e.ignored;
    if (any_scored) gt_index.emplace(t.object_id, 0);
  }
  int next = 0;
  for (auto& [id, idx] : gt_index) idx = next++;
  const int n_gt_ids = next;

  std::map<int, int> pred_index;
  for (const TrackedObs& o : results) pred_index.emplace(o.track_id, 0);
  next = 0;
  for (auto& [id, idx] : pred_index) idx = next++;
  const int n_pred_ids = next;

  // Per-frame boxes.
  std::vector<std::vector<std::pair<int, Box>>> gt_frames(num_frames);       // (dense gt, box)
  std::vector<std::vector<Box>> ignored_frames(num_frames);
  for (const GroundTruthTrack& t : gt_seq.gt_tracks) {
    for (const GroundTruthEntry& e : t.entries) {
      if (e.frame < 1 || e.frame > num_frames)
        throw DataError("evaluate: ground truth frame outside the sequence");
      if (e.ignored)
        ignored_frames[e.frame - 1].push_back(e.box);
      else
        gt_frames[e.frame - 1].emplace_back(gt_index.at(t.object_id), e.box);
    }
  }
  std::vector<std::vector<std::pair<int, Box>>> pred_frames(num_frames);
  for (const TrackedObs& o : results)
    pred_frames[o.frame - 1].emplace_back(pred_index.at(o.track_id), o.box);

  // Remove predictions matched to ignored GT (IoU >= 0.5) before scoring.
  for (int f = 0; f < num_frames; ++f) {
    if (ignored_frames[f].empty() || pred_frames[f].empty()) continue;
    ScoreMatrix s(static_cast<int>(pred_frames[f].size()),
                  static_cast<int>(ignored_frames[f].size()), kInfeasible);
    for (int i = 0; i < s.rows; ++i)
      for (int j = 0; j < s.cols; ++j) {
        const double v = iou(pred_frames[f][i].second, ignored_frames[f][j]);
        if (v >= 0.5) s.at(i, j) = v;
      }
    const Matching m = match_max(s, 0.0);
    std::vector<char> drop(pred_frames[f].size(), 0);
    for (const auto& [i, j] : m.pairs) drop[i] = 1;
    std::vector<std::pair<int, Box>> kept;
    for (std::size_t i = 0; i < pred_frames[f].size(); ++i)
      if (!drop[i]) kept.push_back(pred_frames[f][i]);
    pred_frames[f] = std::move(kept);
  }

  // Frame similarity matrices and id counts.
  std::vector<FrameData> frames(num_frames);
  std::vector<long> gt_count(n_gt_ids, 0), pred_count(n_pred_ids, 0);
  for (int f = 0; f < num_frames; ++f) {
    FrameData& fd = frames[f];
    for (const auto& [g, box] : gt_frames[f]) gt_count[g] += 1;
    for (const auto& [p, box] : pred_frames[f]) pred_count[p] += 1;
    fd.gt.reserve(gt_frames[f].size());
    fd.pred.reserve(pred_frames[f].size());
    for (const auto& [g, box] : gt_frames[f]) fd.gt.push_back(g);
    for (const auto& [p, box] : pred_frames[f]) fd.pred.push_back(p);
    fd.sim.resize(gt_frames[f].size() * pred_frames[f].size());
    for (std::size_t i = 0; i < gt_frames[f].size(); ++i)
      for (std::size_t j = 0; j < pred_frames[f].size(); ++j)
        fd.sim[i * pred_frames[f].size() + j] =
            iou(gt_frames[f][i].second, pred_frames[f][j].second);
  }

  EvalCounts out;
  out.alphas = alphas;
  out.hota_tp.assign(alphas.size(), 0);
  out.hota_fn.assign(alphas.size(), 0);
  out.hota_fp.assign(alphas.size(), 0);
  out.ass_sum.assign(alphas.size(), 0.0);
  for (long c : gt_count) out.gt_total += c;
  for (long c : pred_count) out.pred_total += c;

  // Global alignment score (Jaccard of potential matches per id pair).
  std::vector<double> potential(static_cast<std::size_t>(n_gt_ids) * n_pred_ids, 0.0);
  for (const FrameData& fd : frames) {
    const std::size_t np = fd.pred.size();
    if (fd.gt.empty() || np == 0) continue;
    std::vector<double> row_sum(fd.gt.size(), 0.0), col_sum(np, 0.0);
    for (std::size_t i = 0; i < fd.gt.size(); ++i)
      for (std::size_t j = 0; j < np; ++j) {
        row_sum[i] += fd.sim[i * np + j];
        col_sum[j] += fd.sim[i * np + j];
      }
    for (std::size_t i = 0; i < fd.gt.size(); ++i)
      for (std::size_t j = 0; j < np; ++j) {
        const double s = fd.sim[i * np + j];
        const double den = row_sum[i] + col_sum[j] - s;
        if (den > 0.0 && s > 0.0)
          potential[static_cast<std::size_t>(fd.gt[i]) * n_pred_ids + fd.pred[j]] += s / den;
      }
  }
  std::vector<double> alignment(potential.size(), 0.0);
  for (int g = 0; g < n_gt_ids; ++g)
    for (int p = 0; p < n_pred_ids; ++p) {
      const double pot = potential[static_cast<std::size_t>(g) * n_pred_ids + p];
      const double den = static_cast<double>(gt_count[g] + pred_count[p]) - pot;
      alignment[static_cast<std::size_t>(g) * n_pred_ids + p] = den > 0.0 ? pot / den : 0.0;
    }

  // HOTA: per alpha, per frame, match_max maximizes cardinality then the
  // IoU total with an alignment tie weight, over IoU >= alpha feasible
  // pairs.
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const double alpha = alphas[a];
    std::vector<long> matches(static_cast<std::size_t>(n_gt_ids) * n_pred_ids, 0);
    for (const FrameData& fd : frames) {
      const int ng = static_cast<int>(fd.gt.size());
      const int np = static_cast<int>(fd.pred.size());
      if (ng == 0 && np == 0) continue;
      if (ng == 0 || np == 0) {
        out.hota_fn[a] += ng;
        out.hota_fp[a] += np;
        continue;
      }
      ScoreMatrix s(ng, np, kInfeasible);
      for (int i = 0; i < ng; ++i)
        for (int j = 0; j < np; ++j) {
          const double v = fd.at(i, j);
          if (v >= alpha)
            s.at(i, j) = v + kTieWeight * v *
                                 alignment[static_cast<std::size_t>(fd.gt[i]) * n_pred_ids +
                                           fd.pred[j]];
        }
      const Matching m = match_max(s, 0.0);
      out.hota_tp[a] += static_cast<long>(m.pairs.size());
      out.hota_fn[a] += ng - static_cast<long>(m.pairs.size());
      out.hota_fp[a] += np - static_cast<long>(m.pairs.size());
      for (const auto& [i, j] : m.pairs)
        matches[static_cast<std::size_t>(fd.gt[i]) * n_pred_ids + fd.pred[j]] += 1;
    }
    double ass = 0.0;
    for (int g = 0; g < n_gt_ids; ++g)
      for (int p = 0; p < n_pred_ids; ++p) {
        const long mc = matches[static_cast<std::size_t>(g) * n_pred_ids + p];
        if (mc == 0) continue;
        const long den = std::max<long>(1, gt_count[g] + pred_count[p] - mc);
        ass += static_cast<double>(mc) * (static_cast<double>(mc) / den);
      }
    out.ass_sum[a] = ass;
  }

  // CLEAR MOTA at alpha = 0.5 with match continuation; a switch is counted
  // when a GT track's matched prediction id changes between its consecutive
  // matched frames.
  {
    std::vector<int> last_matched(n_gt_ids, -1);
    for (const FrameData& fd : frames) {
      const int ng = static_cast<int>(fd.gt.size());
      const int np = static_cast<int>(fd.pred.size());
      if (ng == 0 && np == 0) continue;
      if (ng == 0 || np == 0) {
        out.clear_fn += ng;
        out.clear_fp += np;
        continue;
      }
      ScoreMatrix s(ng, np, kInfeasible);
      for (int i = 0; i < ng; ++i)
        for (int j = 0; j < np; ++j) {
          const double v = fd.at(i, j);
          if (v >= 0.5)
            s.at(i, j) = v + (last_matched[fd.gt[i]] == fd.pred[j] ? kContinuity : 0.0);
        }
      const Matching m = match_max(s, 0.0);
      out.clear_fn += ng - static_cast<long>(m.pairs.size());
      out.clear_fp += np - static_cast<long>(m.pairs.size());
      for (const auto& [i, j] : m.pairs) {
        const int g = fd.gt[i];
        if (last_matched[g] != -1 && last_matched[g] != fd.pred[j]) out.idsw += 1;
        last_matched[g] = fd.pred[j];
      }
    }
  }

  // IDF1: per id pair, count frames with IoU >= 0.5; optimal mapping.
  {
    std::vector<long> pair_count(static_cast<std::size_t>(n_gt_ids) * n_pred_ids, 0);
    for (const FrameData& fd : frames) {
      for (std::size_t i = 0; i < fd.gt.size(); ++i)
        for (std::size_t j = 0; j < fd.pred.size(); ++j)
          if (fd.sim[i * fd.pred.size() + j] >= 0.5)
            pair_count[static_cast<std::size_t>(fd.gt[i]) * n_pred_ids + fd.pred[j]] += 1;
    }
    if (n_gt_ids > 0 && n_pred_ids > 0) {
      ScoreMatrix s(n_gt_ids, n_pred_ids);
      for (int g = 0; g < n_gt_ids; ++g)
        for (int p = 0; p < n_pred_ids; ++p)
          s.at(g, p) =
              static_cast<double>(pair_count[static_cast<std::size_t>(g) * n_pred_ids + p]);
      const Matching m = match_max(s, 0.0);
      long idtp = 0;
      for (const auto& [g, p] : m.pairs)
        idtp += pair_count[static_cast<std::size_t>(g) * n_pred_ids + p];
      out.idtp = idtp;
    }
  }
  return out;
}

EvalCounts merge_counts(const EvalCounts& a, const EvalCounts& b) {
  if (a.alphas.empty()) return b;
  if (b.alphas.empty()) return a;
  if (a.alphas != b.alphas) throw DataError("merge_counts: alpha grids differ");
  EvalCounts out = a;
  for (std::size_t i = 0; i < out.alphas.size(); ++i) {
    out.hota_tp[i] += b.hota_tp[i];
    out.hota_fn[i] += b.hota_fn[i];
    out.hota_fp[i] += b.hota_fp[i];
    out.ass_sum[i] += b.ass_sum[i];
  }
  out.clear_fn += b.clear_fn;
  out.clear_fp += b.clear_fp;
  out.idsw += b.idsw;
  out.gt_total += b.gt_total;
  out.pred_total += b.pred_total;
  out.idtp += b.idtp;
  return out;
}

MetricReport finalize(const EvalCounts& counts) {
  MetricReport r;
  const std::size_t n = counts.alphas.size();
  for (std::size_t a = 0; a < n; ++a) {
    const long tp = counts.hota_tp[a];
    const double deta =
        static_cast<double>(tp) /
        std::max<long>(1, tp + counts.hota_fn[a] + counts.hota_fp[a]);
    const double assa = counts.ass_sum[a] / std::max<long>(1, tp);
    r.deta += deta;
    r.assa += assa;
    r.hota += std::sqrt(deta * assa);
  }
  r.deta /= static_cast<double>(n);
  r.assa /= static_cast<double>(n);
  r.hota /= static_cast<double>(n);
  r.mota = 1.0 - static_cast<double>(counts.clear_fn + counts.clear_fp + counts.idsw) /
                     std::max<long>(1, counts.gt_total);
  r.idf1 = 2.0 * static_cast<double>(counts.idtp) /
           std::max<long>(1, counts.gt_total + counts.pred_total);
  return r;
}

MetricReport evaluate(const std::vector<TrackedObs>& results, const Sequence& gt_seq,
                      const std::vector<double>& alphas) {
  return finalize(eval_counts(results, gt_seq, alphas));
}

EvalReport evaluate_many(const std::vector<std::vector<TrackedObs>>& results,
                         const std::vector<const Sequence*>& gt_seqs,
                         const std::vector<double>& alphas) {
  if (results.size() != gt_seqs.size())
    throw DataError("evaluate_many: result and sequence counts differ");
  EvalReport report;
  EvalCounts total;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const EvalCounts c = eval_counts(results[i], *gt_seqs[i], alphas);
    report.names.push_back(gt_seqs[i]->meta.name.empty() ? "seq_" + std::to_string(i + 1)
                                                         : gt_seqs[i]->meta.name);
    report.per_sequence.push_back(finalize(c));
    total = merge_counts(total, c);
  }
  report.aggregate = finalize(total);
  return report;
}

namespace {

std::string metric_row_csv(const std::string& name, const MetricReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.1f,%.1f,%.1f,%.1f,%.1f\n", name.c_str(), 100.0 * m.hota,
                100.0 * m.deta, 100.0 * m.assa, 100.0 * m.mota, 100.0 * m.idf1);
  return buf;
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out = "sequence,HOTA,DetA,AssA,MOTA,IDF1\n";
  for (std::size_t i = 0; i < report.per_sequence.size(); ++i)
    out += metric_row_csv(report.names[i], report.per_sequence[i]);
  out += metric_row_csv("COMBINED", report.aggregate);
  return out;
}

std::string report_table(const EvalReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-20s %6s %6s %6s %6s %6s\n", "sequence", "HOTA", "DetA",
                "AssA", "MOTA", "IDF1");
  out += buf;
  auto row = [&out, &buf](const std::string& name, const MetricReport& m) {
    std::snprintf(buf, sizeof(buf), "%-20s %6.1f %6.1f %6.1f %6.1f %6.1f\n", name.c_str(),
                  100.0 * m.hota, 100.0 * m.deta, 100.0 * m.assa, 100.0 * m.mota,
                  100.0 * m.idf1);
    out += buf;
  };
  for (std::size_t i = 0; i < report.per_sequence.size(); ++i)
    row(report.names[i], report.per_sequence[i]);
  row("COMBINED", report.aggregate);
  return out;
}

}  // namespace twix
