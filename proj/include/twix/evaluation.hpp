#pragma once

#include <string>
#include <vector>

#include "twix/ingestion.hpp"

namespace twix {

std::vector<double> default_alphas();  // 0.05, 0.10, ..., 0.95

struct MetricReport {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  double mota = 0.0;
  double idf1 = 0.0;
};

// Per-sequence accumulators, mergeable across sequences with disjoint id
// spaces. Final sums iterate ids in ascending order so results are
// bit-reproducible.
struct EvalCounts {
  std::vector<double> alphas;
  std::vector<long> hota_tp, hota_fn, hota_fp;  // per alpha
  std::vector<double> ass_sum;                  // per alpha, sum over TPs of A(c)
  long clear_fn = 0, clear_fp = 0, idsw = 0;
  long gt_total = 0, pred_total = 0;
  long idtp = 0;
};

// Scores one sequence's results against its ground truth. Ignored GT
// entries are excluded from scoring; predictions matched to them (IoU >= 0.5)
// are removed first. HOTA uses per-alpha frame-wise Hungarian matching with
// cardinality precedence, IoU total and a global-alignment tie weight; MOTA
// follows the CLEAR convention with match continuation; IDF1 uses the
// optimal identity mapping at IoU 0.5.
EvalCounts eval_counts(const std::vector<TrackedObs>& results, const Sequence& gt_seq,
                       const std::vector<double>& alphas = default_alphas());

EvalCounts merge_counts(const EvalCounts& a, const EvalCounts& b);
MetricReport finalize(const EvalCounts& counts);

MetricReport evaluate(const std::vector<TrackedObs>& results, const Sequence& gt_seq,
                      const std::vector<double>& alphas = default_alphas());

struct EvalReport {
  std::vector<std::string> names;
  std::vector<MetricReport> per_sequence;
  MetricReport aggregate;
};

EvalReport evaluate_many(const std::vector<std::vector<TrackedObs>>& results,
                         const std::vector<const Sequence*>& gt_seqs,
                         const std::vector<double>& alphas = default_alphas());

// Percentages with one decimal, columns HOTA, DetA, AssA, MOTA, IDF1.
std::string report_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace twix
