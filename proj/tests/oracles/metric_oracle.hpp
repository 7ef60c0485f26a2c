#pragma once

// Brute-force tracking-metric oracle for toy instances (<= ~3 objects,
// <= ~10 frames). Shares only the metric definitions with the production
// evaluator: per-frame matchings come from exhaustive enumeration over all
// partial matchings and the IDF1 mapping from exhaustive enumeration over
// identity mappings, rather than from an assignment solver.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "twix/evaluation.hpp"
#include "twix/geometry.hpp"
#include "twix/ingestion.hpp"

namespace twix::oracle {

namespace detail {

struct Obs {
  int id = 0;  // dense id
  Box box;
};

// All partial matchings over feasible cells, keeping the one with the most
// pairs and, among those, the largest total score.
struct MatchEnumerator {
  const std::vector<std::vector<double>>* score = nullptr;  // <= 0 = infeasible
  int rows = 0, cols = 0;
  double best_total = 0.0;
  std::vector<std::pair<int, int>> best;

  void run() {
    std::vector<int> col_used(cols, 0);
    std::vector<std::pair<int, int>> current;
    best_total = 0.0;
    best.clear();
    recurse(0, 0.0, col_used, current);
  }

  void recurse(int row, double total, std::vector<int>& col_used,
               std::vector<std::pair<int, int>>& current) {
    if (row == rows) {
      if (current.size() > best.size() ||
          (current.size() == best.size() && total > best_total)) {
        best_total = total;
        best = current;
      }
      return;
    }
    recurse(row + 1, total, col_used, current);
    for (int j = 0; j < cols; ++j) {
      if (col_used[j]) continue;
      const double s = (*score)[row][j];
      if (!(s > 0.0)) continue;
      col_used[j] = 1;
      current.emplace_back(row, j);
      recurse(row + 1, total + s, col_used, current);
      current.pop_back();
      col_used[j] = 0;
    }
  }
};

}  // namespace detail

// Same counter layout as the production evaluator so tests can compare
// field by field.
inline EvalCounts brute_force_counts(const std::vector<TrackedObs>& results,
                                     const Sequence& gt_seq,
                                     const std::vector<double>& alphas = default_alphas()) {
  using detail::Obs;
  const int num_frames = gt_seq.meta.num_frames;

  std::map<int, int> gt_ids, pred_ids;
  for (const GroundTruthTrack& t : gt_seq.gt_tracks)
    if (!t.entries.empty()) gt_ids.emplace(t.object_id, 0);
  for (const TrackedObs& o : results) pred_ids.emplace(o.track_id, 0);
  int next = 0;
  for (auto& [id, v] : gt_ids) v = next++;
  const int ng_ids = next;
  next = 0;
  for (auto& [id, v] : pred_ids) v = next++;
  const int np_ids = next;

  std::vector<std::vector<Obs>> gt(num_frames), pr(num_frames);
  for (const GroundTruthTrack& t : gt_seq.gt_tracks)
    for (const GroundTruthEntry& e : t.entries)
      gt[e.frame - 1].push_back({gt_ids.at(t.object_id), e.box});
  for (const TrackedObs& o : results) pr[o.frame - 1].push_back({pred_ids.at(o.track_id), o.box});

  std::vector<long> cnt_g(ng_ids, 0), cnt_p(np_ids, 0);
  for (int f = 0; f < num_frames; ++f) {
    for (const Obs& o : gt[f]) cnt_g[o.id] += 1;
    for (const Obs& o : pr[f]) cnt_p[o.id] += 1;
  }

  EvalCounts out;
  out.alphas = alphas;
  out.hota_tp.assign(alphas.size(), 0);
  out.hota_fn.assign(alphas.size(), 0);
  out.hota_fp.assign(alphas.size(), 0);
  out.ass_sum.assign(alphas.size(), 0.0);
  for (long c : cnt_g) out.gt_total += c;
  for (long c : cnt_p) out.pred_total += c;

  // Global alignment, same formula and iteration order as the definition.
  std::vector<std::vector<double>> potential(ng_ids, std::vector<double>(np_ids, 0.0));
  for (int f = 0; f < num_frames; ++f) {
    if (gt[f].empty() || pr[f].empty()) continue;
    std::vector<double> rs(gt[f].size(), 0.0), cs(pr[f].size(), 0.0);
    for (std::size_t i = 0; i < gt[f].size(); ++i)
      for (std::size_t j = 0; j < pr[f].size(); ++j) {
        const double s = iou(gt[f][i].box, pr[f][j].box);
        rs[i] += s;
        cs[j] += s;
      }
    for (std::size_t i = 0; i < gt[f].size(); ++i)
      for (std::size_t j = 0; j < pr[f].size(); ++j) {
        const double s = iou(gt[f][i].box, pr[f][j].box);
        const double den = rs[i] + cs[j] - s;
        if (den > 0.0 && s > 0.0) potential[gt[f][i].id][pr[f][j].id] += s / den;
      }
  }
  std::vector<std::vector<double>> align(ng_ids, std::vector<double>(np_ids, 0.0));
  for (int g = 0; g < ng_ids; ++g)
    for (int p = 0; p < np_ids; ++p) {
      const double den = static_cast<double>(cnt_g[g] + cnt_p[p]) - potential[g][p];
      align[g][p] = den > 0.0 ? potential[g][p] / den : 0.0;
    }

  const double tie = 9.5367431640625e-07;  // 2^-20

  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::vector<std::vector<long>> matches(ng_ids, std::vector<long>(np_ids, 0));
    for (int f = 0; f < num_frames; ++f) {
      const int ng = static_cast<int>(gt[f].size());
      const int np = static_cast<int>(pr[f].size());
      if (ng == 0 && np == 0) continue;
      if (ng == 0 || np == 0) {
        out.hota_fn[a] += ng;
        out.hota_fp[a] += np;
        continue;
      }
      std::vector<std::vector<double>> score(ng, std::vector<double>(np, -1.0));
      for (int i = 0; i < ng; ++i)
        for (int j = 0; j < np; ++j) {
          const double s = iou(gt[f][i].box, pr[f][j].box);
          if (s >= alphas[a])
            score[i][j] = s + tie * s * align[gt[f][i].id][pr[f][j].id];
        }
      detail::MatchEnumerator en;
      en.score = &score;
      en.rows = ng;
      en.cols = np;
      en.run();
      out.hota_tp[a] += static_cast<long>(en.best.size());
      out.hota_fn[a] += ng - static_cast<long>(en.best.size());
      out.hota_fp[a] += np - static_cast<long>(en.best.size());
      for (const auto& [i, j] : en.best) matches[gt[f][i].id][pr[f][j].id] += 1;
    }
    double ass = 0.0;
    for (int g = 0; g < ng_ids; ++g)
      for (int p = 0; p < np_ids; ++p) {
        const long m = matches[g][p];
        if (m == 0) continue;
        ass += static_cast<double>(m) *
               (static_cast<double>(m) / std::max<long>(1, cnt_g[g] + cnt_p[p] - m));
      }
    out.ass_sum[a] = ass;
  }

  // CLEAR.
  {
    std::vector<int> last(ng_ids, -1);
    for (int f = 0; f < num_frames; ++f) {
      const int ng = static_cast<int>(gt[f].size());
      const int np = static_cast<int>(pr[f].size());
      if (ng == 0 && np == 0) continue;
      if (ng == 0 || np == 0) {
        out.clear_fn += ng;
        out.clear_fp += np;
        continue;
      }
      std::vector<std::vector<double>> score(ng, std::vector<double>(np, -1.0));
      for (int i = 0; i < ng; ++i)
        for (int j = 0; j < np; ++j) {
          const double s = iou(gt[f][i].box, pr[f][j].box);
          if (s >= 0.5)
            score[i][j] = s + (last[gt[f][i].id] == pr[f][j].id ? 1e3 : 0.0);
        }
      detail::MatchEnumerator en;
      en.score = &score;
      en.rows = ng;
      en.cols = np;
      en.run();
      out.clear_fn += ng - static_cast<long>(en.best.size());
      out.clear_fp += np - static_cast<long>(en.best.size());
      for (const auto& [i, j] : en.best) {
        const int g = gt[f][i].id;
        if (last[g] != -1 && last[g] != pr[f][j].id) out.idsw += 1;
        last[g] = pr[f][j].id;
      }
    }
  }

  // IDF1: exhaustive over identity mappings.
  {
    std::vector<std::vector<long>> pc(ng_ids, std::vector<long>(np_ids, 0));
    for (int f = 0; f < num_frames; ++f)
      for (const Obs& g : gt[f])
        for (const Obs& p : pr[f])
          if (iou(g.box, p.box) >= 0.5) pc[g.id][p.id] += 1;

    long best = 0;
    std::vector<int> used(np_ids, 0);
    std::function<void(int, long)> rec = [&](int g, long total) {
      best = std::max(best, total);
      if (g == ng_ids) return;
      rec(g + 1, total);
      for (int p = 0; p < np_ids; ++p) {
        if (used[p] || pc[g][p] == 0) continue;
        used[p] = 1;
        rec(g + 1, total + pc[g][p]);
        used[p] = 0;
      }
    };
    rec(0, 0);
    out.idtp = best;
  }
  return out;
}

inline MetricReport brute_force_metrics(const std::vector<TrackedObs>& results,
                                        const Sequence& gt_seq,
                                        const std::vector<double>& alphas = default_alphas()) {
  // Same closed-form finalization; the enumeration above is the independent
  // part of this oracle.
  return finalize(brute_force_counts(results, gt_seq, alphas));
}

}  // namespace twix::oracle
