// Command-line front end: synthetic data generation, tracklet building,
// training, tracking, evaluation, affinity maps and threshold heatmaps.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "twix/analysis.hpp"
#include "twix/batching.hpp"
#include "twix/config.hpp"
#include "twix/errors.hpp"
#include "twix/evaluation.hpp"
#include "twix/ingestion.hpp"
#include "twix/model.hpp"
#include "twix/pipeline.hpp"
#include "twix/synthdata.hpp"
#include "twix/tracklets.hpp"
#include "twix/training.hpp"

namespace {

using namespace twix;

Sequence load_filtered_sequence(const std::string& dir, double min_score, double min_area) {
  Sequence seq = load_sequence(dir);
  seq.detections = filter_detections(seq.detections, min_score, min_area);
  return seq;
}

std::vector<Sequence> load_filtered(const std::vector<std::string>& dirs, double min_score,
                                    double min_area) {
  std::vector<Sequence> out;
  for (const std::string& dir : dirs) out.push_back(load_filtered_sequence(dir, min_score, min_area));
  return out;
}

TrainConfig train_config_from(const Config& cfg, const std::string& stage_name) {
  TrainConfig tc;
  tc.epochs = cfg.get_int("epochs", tc.epochs);
  tc.lr_first = cfg.get_double("lr_first", tc.lr_first);
  tc.lr_second = cfg.get_double("lr_second", tc.lr_second);
  tc.layers_first = cfg.get_int("layers_first", tc.layers_first);
  tc.layers_second = cfg.get_int("layers_second", tc.layers_second);
  tc.batch.t_G = cfg.get_double("t_G", 0.8);
  tc.batch.t_P = cfg.get_double("t_P", tc.batch.t_P);
  tc.batch.t_F = cfg.get_double("t_F", tc.batch.t_F);
  tc.seed = static_cast<std::uint64_t>(cfg.get_double("seed", 0));
  tc.theta_s = cfg.get_double("theta_s", tc.theta_s);
  tc.subsample = cfg.get_int("subsample", tc.subsample);
  tc.hyper.dim = cfg.get_int("dim", tc.hyper.dim);
  tc.hyper.heads = cfg.get_int("heads", tc.hyper.heads);
  tc.hyper.ffn_dim = cfg.get_int("ffn_dim", tc.hyper.ffn_dim);
  tc.loss.variant = parse_loss_variant(cfg.get_string("loss", "bidirectional"));
  tc.loss.tau = cfg.get_double("tau", tc.loss.tau);
  tc.loss.batch_scale = cfg.get_double("batch_scale", tc.loss.batch_scale);
  tc.loss.focal_gamma = cfg.get_double("focal_gamma", tc.loss.focal_gamma);
  tc.loss.triplet_margin = cfg.get_double("triplet_margin", tc.loss.triplet_margin);
  tc.loss.seed = tc.seed;
  if (stage_name == "first") {
    tc.stage = Stage::FIRST;
  } else if (stage_name == "second") {
    tc.stage = Stage::SECOND;
  } else {
    throw DataError("unknown stage: " + stage_name + " (expected first|second)");
  }
  return tc;
}

PipelineParams params_from(const Config& cfg) {
  PipelineParams p;
  p.theta_1 = cfg.get_double("theta_1", p.theta_1);
  p.theta_2 = cfg.get_double("theta_2", p.theta_2);
  p.theta_T = cfg.get_double("theta_T", p.theta_T);
  p.t_A = cfg.get_double("t_A", p.t_A);
  p.t_P = cfg.get_double("t_P", p.t_P);
  return p;
}

Box parse_box(const std::string& text) {
  Box box;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf", &box.x, &box.y, &box.w, &box.h) != 4 ||
      !box.valid())
    throw DataError("expected box as x,y,w,h with positive sizes: " + text);
  return box;
}

std::vector<double> parse_grid(const std::string& spec) {
  double lo = 0, step = 0, hi = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &step, &hi) != 3 || step <= 0 || hi < lo)
    throw DataError("expected grid as lo:step:hi with step > 0: " + spec);
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate-only multi-object tracking: pairwise tracklet affinity module and "
               "cascade-matching tracker"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate synthetic sequences with ground truth");
  std::string gen_config, gen_out, gen_prefix = "seq";
  std::uint64_t gen_seed = 1;
  int gen_count = 1;
  gen->add_option("--config", gen_config, "Scenario config file")->required();
  gen->add_option("--seed", gen_seed, "Base seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--count", gen_count, "Number of sequences");
  gen->add_option("--prefix", gen_prefix, "Sequence name prefix");

  // build-tracklets
  auto* bt = app.add_subcommand("build-tracklets", "Adjacent-frame IoU association dump");
  std::string bt_seq, bt_out;
  double bt_theta = 0.3, bt_min_score = 0.5, bt_min_area = 128.0;
  bt->add_option("--seq", bt_seq, "Sequence directory")->required();
  bt->add_option("--theta-s", bt_theta, "IoU threshold");
  bt->add_option("--min-score", bt_min_score, "Detection score filter");
  bt->add_option("--min-area", bt_min_area, "Detection area filter (px^2)");
  bt->add_option("--out", bt_out, "Output result file")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train one affinity module");
  std::vector<std::string> tr_seqs;
  std::string tr_stage, tr_config, tr_out, tr_log;
  tr->add_option("--seq", tr_seqs, "Training sequence directories")->required();
  tr->add_option("--stage", tr_stage, "first|second")->required();
  tr->add_option("--config", tr_config, "Training config file")->required();
  tr->add_option("--out", tr_out, "Output checkpoint")->required();
  tr->add_option("--log", tr_log, "Epoch log CSV path");

  // track
  auto* tk = app.add_subcommand("track", "Run the cascade-matching tracker");
  std::string tk_seq, tk_ckpt1, tk_ckpt2, tk_params, tk_out, tk_timing;
  bool tk_oracle = false;
  double tk_min_score = 0.5, tk_min_area = 128.0;
  tk->add_option("--seq", tk_seq, "Sequence directory")->required();
  tk->add_option("--ckpt1", tk_ckpt1, "First-stage checkpoint")->required();
  tk->add_option("--ckpt2", tk_ckpt2, "Second-stage checkpoint")->required();
  tk->add_option("--params", tk_params, "Pipeline parameter file")->required();
  tk->add_option("--out", tk_out, "Output result file")->required();
  tk->add_option("--timing", tk_timing, "Frames-per-second log path");
  tk->add_flag("--oracle", tk_oracle, "Use ground-truth boxes as detections");
  tk->add_option("--min-score", tk_min_score, "Detection score filter");
  tk->add_option("--min-area", tk_min_area, "Detection area filter (px^2)");

  // eval
  auto* ev = app.add_subcommand("eval", "Score result files against ground truth");
  std::vector<std::string> ev_results, ev_gt;
  std::string ev_out;
  ev->add_option("--results", ev_results, "Result files (one per sequence)")->required();
  ev->add_option("--gt", ev_gt, "Sequence directories with ground truth")->required();
  ev->add_option("--out", ev_out, "Report CSV path");

  // affinity-map
  auto* am = app.add_subcommand("affinity-map", "Self-affinity map of a box");
  std::string am_method, am_ckpt, am_box, am_out;
  double am_extent = 0.0, am_buffer = 0.3;
  int am_res = 101, am_hist = 8, am_gap = 1;
  am->add_option("--method", am_method, "l1|l2|iou|biou|giou|diou|twix")->required();
  am->add_option("--ckpt", am_ckpt, "Checkpoint (twix method)");
  am->add_option("--box", am_box, "Box as x,y,w,h")->required();
  am->add_option("--out", am_out, "Output prefix (.csv and .pgm)")->required();
  am->add_option("--extent", am_extent, "Translation extent (default 3*max(w,h))");
  am->add_option("--res", am_res, "Grid resolution (odd)");
  am->add_option("--hist", am_hist, "History length for twix maps");
  am->add_option("--gap", am_gap, "Temporal gap for twix maps (frames)");
  am->add_option("--buffer", am_buffer, "Buffer ratio for biou");

  // heatmap
  auto* hm = app.add_subcommand("heatmap", "HOTA over a (theta_1, theta_2) grid");
  std::vector<std::string> hm_seqs;
  std::string hm_ckpt1, hm_ckpt2, hm_grid1 = "-1:0.25:1", hm_grid2 = "-1:0.25:1", hm_params,
              hm_out;
  bool hm_oracle = false;
  int hm_jobs = 1;
  double hm_min_score = 0.5, hm_min_area = 128.0;
  hm->add_option("--seq", hm_seqs, "Sequence directories")->required();
  hm->add_option("--ckpt1", hm_ckpt1, "First-stage checkpoint")->required();
  hm->add_option("--ckpt2", hm_ckpt2, "Second-stage checkpoint")->required();
  hm->add_option("--grid1", hm_grid1, "theta_1 grid lo:step:hi");
  hm->add_option("--grid2", hm_grid2, "theta_2 grid lo:step:hi");
  hm->add_option("--params", hm_params, "Pipeline parameter file")->required();
  hm->add_option("--out", hm_out, "Heatmap CSV path")->required();
  hm->add_flag("--oracle", hm_oracle, "Use ground-truth boxes as detections");
  hm->add_option("--jobs", hm_jobs, "Parallel workers over grid cells");
  hm->add_option("--min-score", hm_min_score, "Detection score filter");
  hm->add_option("--min-area", hm_min_area, "Detection area filter (px^2)");

  // ablate-loss
  auto* ab = app.add_subcommand("ablate-loss", "Train and score each loss variant");
  std::vector<std::string> ab_train, ab_test;
  std::string ab_losses = "bidirectional,forward,backward,bce,focal,triplet_random,triplet_hard";
  std::string ab_config, ab_params, ab_out;
  bool ab_oracle = false;
  ab->add_option("--seq", ab_train, "Training sequence directories")->required();
  ab->add_option("--test-seq", ab_test, "Evaluation sequence directories")->required();
  ab->add_option("--losses", ab_losses, "Comma-separated variant list");
  ab->add_option("--config", ab_config, "Training config file")->required();
  ab->add_option("--params", ab_params, "Pipeline parameter file")->required();
  ab->add_option("--out", ab_out, "Output CSV path");
  ab->add_flag("--oracle", ab_oracle, "Track ground-truth boxes as detections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const ScenarioConfig cfg = scenario_from_config(Config::load(gen_config));
      for (int i = 0; i < gen_count; ++i) {
        Sequence seq = generate(cfg, gen_seed + static_cast<std::uint64_t>(i));
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03d", gen_prefix.c_str(), i + 1);
        seq.meta.name = name;
        const auto dir = std::filesystem::path(gen_out) / name;
        save_sequence(seq, dir.string());
        std::cout << "wrote " << dir.string() << "\n";
      }
    } else if (bt->parsed()) {
      const Sequence seq = load_filtered_sequence(bt_seq, bt_min_score, bt_min_area);
      const auto tracklets = build_tracklets(seq, bt_theta);
      std::vector<TrackedObs> obs;
      for (const Tracklet& t : tracklets)
        for (int i = 0; i < t.length(); ++i)
          obs.push_back({t.frames[i], t.id, t.coords[i], t.scores[i]});
      write_file(bt_out, write_mot_results(obs));
      std::cout << tracklets.size() << " tracklets over " << obs.size() << " detections\n";
    } else if (tr->parsed()) {
      const TrainConfig cfg = train_config_from(Config::load(tr_config), tr_stage);
      const auto seqs = load_filtered(tr_seqs, 0.5, 128.0);
      const TrainResult result = train(seqs, cfg);
      save_checkpoint(result.weights, tr_out);
      if (!tr_log.empty()) write_file(tr_log, epoch_log_csv(result.log));
      std::cout << "trained stage " << tr_stage << " for " << cfg.epochs
                << " epochs; final mean loss " << result.log.back().mean_loss
                << ", ranking accuracy " << result.log.back().ranking_accuracy << "\n";
    } else if (tk->parsed()) {
      const Sequence seq = load_filtered_sequence(tk_seq, tk_min_score, tk_min_area);
      const TwixWeightsF w1 = to_float(load_checkpoint(tk_ckpt1));
      const TwixWeightsF w2 = to_float(load_checkpoint(tk_ckpt2));
      PipelineParams params = params_from(Config::load(tk_params));
      params.fps = seq.meta.fps;
      const TrackingRun run = tk_oracle ? track_sequence_oracle(seq, w1, w2, params)
                                        : track_sequence(seq, w1, w2, params);
      write_file(tk_out, write_mot_results(run.results));
      char timing[128];
      std::snprintf(timing, sizeof(timing), "frames=%d seconds=%.6f fps=%.1f\n", run.frames,
                    run.seconds, run.fps());
      if (!tk_timing.empty()) write_file(tk_timing, timing);
      std::cout << run.results.size() << " observations; " << timing;
    } else if (ev->parsed()) {
      if (ev_results.size() != ev_gt.size())
        throw DataError("eval: --results and --gt counts differ");
      std::vector<Sequence> seqs;
      std::vector<std::vector<TrackedObs>> results;
      for (std::size_t i = 0; i < ev_results.size(); ++i) {
        seqs.push_back(load_sequence(ev_gt[i]));
        results.push_back(parse_mot_results(read_file(ev_results[i])));
      }
      std::vector<const Sequence*> ptrs;
      for (const Sequence& s : seqs) ptrs.push_back(&s);
      const EvalReport report = evaluate_many(results, ptrs);
      std::cout << report_table(report);
      if (!ev_out.empty()) write_file(ev_out, report_csv(report));
    } else if (am->parsed()) {
      const AffinityMethod method = parse_affinity_method(am_method);
      MapGrid grid;
      grid.resolution = am_res;
      grid.extent_x = am_extent;
      grid.extent_y = am_extent;
      TwixMapContext ctx;
      TwixWeightsF weights;
      if (method == AffinityMethod::TWIX) {
        if (am_ckpt.empty()) throw DataError("affinity-map: twix method requires --ckpt");
        weights = to_float(load_checkpoint(am_ckpt));
        ctx.weights = &weights;
        ctx.history_length = am_hist;
        ctx.gap = am_gap;
      }
      const SelfAffinityMap map = self_affinity_map(parse_box(am_box), method, grid,
                                                    method == AffinityMethod::TWIX ? &ctx : nullptr,
                                                    am_buffer);
      write_file(am_out + ".csv", map_csv(map));
      write_file(am_out + ".pgm", map_pgm(map));
      std::cout << "wrote " << am_out << ".csv and .pgm\n";
    } else if (hm->parsed()) {
      const auto seqs = load_filtered(hm_seqs, hm_min_score, hm_min_area);
      const TwixWeightsF w1 = to_float(load_checkpoint(hm_ckpt1));
      const TwixWeightsF w2 = to_float(load_checkpoint(hm_ckpt2));
      const PipelineParams params = params_from(Config::load(hm_params));
      const ThresholdHeatmap map = threshold_heatmap(seqs, w1, w2, params, parse_grid(hm_grid1),
                                                     parse_grid(hm_grid2), hm_oracle, hm_jobs);
      write_file(hm_out, heatmap_csv(map));
      std::cout << "wrote " << hm_out << "\n";
    } else if (ab->parsed()) {
      const Config base = Config::load(ab_config);
      const auto train_seqs = load_filtered(ab_train, 0.5, 128.0);
      const auto test_seqs = load_filtered(ab_test, 0.5, 128.0);
      const PipelineParams base_params = params_from(Config::load(ab_params));
      std::string csv = "loss,HOTA,DetA,AssA,MOTA,IDF1\n";
      std::cout << "loss            HOTA  DetA  AssA  MOTA  IDF1\n";
      for (const std::string& name : split_list(ab_losses)) {
        TrainConfig first = train_config_from(base, "first");
        first.loss.variant = parse_loss_variant(name);
        TrainConfig second = train_config_from(base, "second");
        second.loss.variant = first.loss.variant;
        const TwixWeightsF w1 = to_float(train(train_seqs, first).weights);
        const TwixWeightsF w2 = to_float(train(train_seqs, second).weights);
        std::vector<std::vector<TrackedObs>> results;
        std::vector<const Sequence*> ptrs;
        for (const Sequence& seq : test_seqs) {
          PipelineParams p = base_params;
          p.fps = seq.meta.fps;
          const TrackingRun run = ab_oracle ? track_sequence_oracle(seq, w1, w2, p)
                                            : track_sequence(seq, w1, w2, p);
          results.push_back(run.results);
          ptrs.push_back(&seq);
        }
        const MetricReport m = evaluate_many(results, ptrs).aggregate;
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%.1f,%.1f,%.1f,%.1f,%.1f\n", name.c_str(),
                      100 * m.hota, 100 * m.deta, 100 * m.assa, 100 * m.mota, 100 * m.idf1);
        csv += buf;
        std::snprintf(buf, sizeof(buf), "%-15s %5.1f %5.1f %5.1f %5.1f %5.1f\n", name.c_str(),
                      100 * m.hota, 100 * m.deta, 100 * m.assa, 100 * m.mota, 100 * m.idf1);
        std::cout << buf << std::flush;
      }
      if (!ab_out.empty()) write_file(ab_out, csv);
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
