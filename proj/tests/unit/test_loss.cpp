#include <cmath>

#include "doctest.h"
#include "finite_diff.hpp"
#include "twix/loss.hpp"
#include "twix/rng.hpp"

using namespace twix;

namespace {

Labels make_labels(int rows, int cols, const std::vector<PairLabel>& v) {
  Labels l;
  l.rows = rows;
  l.cols = cols;
  l.v = v;
  return l;
}

constexpr PairLabel P = PairLabel::POSITIVE;
constexpr PairLabel N = PairLabel::NEGATIVE;
constexpr PairLabel I = PairLabel::IGNORED;

// High-precision direct evaluation of the single-pair contrastive loss.
long double contrastive_ld(long double s_plus, const std::vector<long double>& negs,
                           long double tau, long double batch_scale) {
  if (negs.empty()) return 0.0L;
  long double acc = 0.0L;
  for (long double s : negs) acc += expl(-(s_plus - s) / tau);
  return log1pl(batch_scale / static_cast<long double>(negs.size()) * acc);
}

Labels random_labels(Rng& rng, int rows, int cols) {
  std::vector<PairLabel> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) {
    const double u = rng.uniform();
    x = u < 0.25 ? P : (u < 0.8 ? N : I);
  }
  return make_labels(rows, cols, v);
}

Tensor random_pred(Rng& rng, Tape<double>* tape, int rows, int cols) {
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (double& x : v) x = rng.uniform(-0.95, 0.95);
  return Tensor::parameter(tape, rows, cols, std::move(v));
}

}  // namespace

TEST_CASE("contrastive single values against the high-precision oracle") {
  LossConfig cfg;  // tau = 0.1, B = 1024

  CHECK(contrastive_single_value(0.7, {}, cfg) == 0.0);

  // s+ = s- = 0 with one negative: log(1 + 1024).
  const double v1 = contrastive_single_value(0.0, {0.0}, cfg);
  CHECK(std::abs(v1 - static_cast<double>(contrastive_ld(0.0L, {0.0L}, 0.1L, 1024.0L))) < 1e-9);
  CHECK(v1 == doctest::Approx(6.9324).epsilon(1e-4));

  // s+ = 0.9, s- = -0.5: log(1 + 1024 e^-14).
  const double v2 = contrastive_single_value(0.9, {-0.5}, cfg);
  CHECK(std::abs(v2 - static_cast<double>(contrastive_ld(0.9L, {-0.5L}, 0.1L, 1024.0L))) < 1e-9);
  CHECK(v2 == doctest::Approx(8.511e-4).epsilon(1e-3));

  // 1x2 forward example: pred [1, -1], labels [POS, NEG]: log(1 + 1024 e^-20).
  const Tensor pred = Tensor::from_values(1, 2, {1.0, -1.0});
  const double v3 = forward_loss(pred, make_labels(1, 2, {P, N}), cfg).value();
  CHECK(std::abs(v3 - static_cast<double>(contrastive_ld(1.0L, {-1.0L}, 0.1L, 1024.0L))) < 1e-9);

  // Large margins must not overflow.
  CHECK(std::isfinite(contrastive_single_value(-1.0, {1.0}, cfg)));
  const double big = contrastive_single_value(-50.0, {50.0}, cfg);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx((100.0 / 0.1) + std::log(1024.0)).epsilon(1e-9));
}

TEST_CASE("duplicated negatives cancel the B/N factor") {
  LossConfig cfg;
  Rng rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    const double sp = rng.uniform(-1, 1);
    const double sn = rng.uniform(-1, 1);
    const int k = 1 + static_cast<int>(rng.below(6));
    const double one = contrastive_single_value(sp, {sn}, cfg);
    const double many = contrastive_single_value(sp, std::vector<double>(k, sn), cfg);
    CHECK(one == doctest::Approx(many).epsilon(1e-12));
  }
}

TEST_CASE("forward loss conventions") {
  LossConfig cfg;
  // One positive with no same-row negatives -> 0.
  const Tensor pred = Tensor::from_values(1, 2, {0.3, -0.2});
  CHECK(forward_loss(pred, make_labels(1, 2, {P, I}), cfg).value() == 0.0);
  // No positives at all -> 0.
  CHECK(forward_loss(pred, make_labels(1, 2, {N, I}), cfg).value() == 0.0);

  // IGNORED entries contribute to neither side.
  Rng rng(7);
  for (int iter = 0; iter < 30; ++iter) {
    Tape<double> tape;
    const Labels labels = random_labels(rng, 3, 4);
    Tensor pred1 = random_pred(rng, nullptr, 3, 4);
    Tensor pred2 = Tensor::from_values(3, 4, pred1.values());
    bool any_ignored = false;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j)
        if (labels.at(i, j) == I) {
          any_ignored = true;
          pred2.values_mut()[i * 4 + j] = rng.uniform(-1, 1);
        }
    if (!any_ignored) continue;
    for (auto variant : {LossVariant::BIDIRECTIONAL, LossVariant::BCE, LossVariant::FOCAL,
                         LossVariant::TRIPLET_RANDOM, LossVariant::TRIPLET_HARD}) {
      LossConfig c;
      c.variant = variant;
      CHECK(compute_loss(pred1, labels, c).value() ==
            doctest::Approx(compute_loss(pred2, labels, c).value()).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward loss is forward of the transpose") {
  LossConfig cfg;
  Rng rng(9);
  for (int iter = 0; iter < 30; ++iter) {
    const Labels labels = random_labels(rng, 4, 3);
    const Tensor pred = random_pred(rng, nullptr, 4, 3);
    const Tensor predT = transpose(pred);
    CHECK(backward_loss(pred, labels, cfg).value() ==
          doctest::Approx(forward_loss(predT, labels.transposed(), cfg).value()));
  }
  // 2x1 column with [POS; NEG] equals the 1x2 forward example transposed.
  const Tensor col = Tensor::from_values(2, 1, {1.0, -1.0});
  const Tensor row = Tensor::from_values(1, 2, {1.0, -1.0});
  CHECK(backward_loss(col, make_labels(2, 1, {P, N}), cfg).value() ==
        doctest::Approx(forward_loss(row, make_labels(1, 2, {P, N}), cfg).value()));
}

TEST_CASE("bidirectional loss") {
  LossConfig cfg;
  Rng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    const Labels labels = random_labels(rng, 3, 3);
    const Tensor pred = random_pred(rng, nullptr, 3, 3);
    CHECK(bidirectional_loss(pred, labels, cfg).value() ==
          doctest::Approx(forward_loss(pred, labels, cfg).value() +
                          backward_loss(pred, labels, cfg).value()));
  }

  // Strong diagonal 3x3: loss nearly vanishes.
  const Tensor good = Tensor::from_values(3, 3, {0.99, -0.99, -0.99,  //
                                                 -0.99, 0.99, -0.99,  //
                                                 -0.99, -0.99, 0.99});
  const Labels diag = make_labels(3, 3, {P, N, N, N, P, N, N, N, P});
  CHECK(bidirectional_loss(good, diag, cfg).value() < 1e-3);

  // Symmetric square problem: equals twice the forward value.
  CHECK(bidirectional_loss(good, diag, cfg).value() ==
        doctest::Approx(2.0 * forward_loss(good, diag, cfg).value()));
}

TEST_CASE("loss monotone in the positive score") {
  LossConfig cfg;
  Rng rng(13);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> negs;
    const int k = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < k; ++i) negs.push_back(rng.uniform(-1, 1));
    double prev = std::numeric_limits<double>::infinity();
    for (double sp : {-0.8, -0.3, 0.1, 0.5, 0.9}) {
      const double v = contrastive_single_value(sp, negs, cfg);
      CHECK(v < prev);
      CHECK(v >= 0.0);
      prev = v;
    }
  }
}

TEST_CASE("bce and focal") {
  LossConfig cfg;
  cfg.variant = LossVariant::BCE;
  // Prediction 0 maps to probability 0.5: log 2 per entry.
  const Tensor zero = Tensor::from_values(1, 2, {0.0, 0.0});
  const Labels pn = make_labels(1, 2, {P, N});
  CHECK(ablation_loss(zero, pn, cfg).value() == doctest::Approx(std::log(2.0)));

  // Focal with gamma = 0 is BCE.
  Rng rng(15);
  for (int iter = 0; iter < 30; ++iter) {
    const Labels labels = random_labels(rng, 3, 4);
    const Tensor pred = random_pred(rng, nullptr, 3, 4);
    LossConfig bce;
    bce.variant = LossVariant::BCE;
    LossConfig focal0;
    focal0.variant = LossVariant::FOCAL;
    focal0.focal_gamma = 0.0;
    CHECK(ablation_loss(pred, labels, bce).value() ==
          doctest::Approx(ablation_loss(pred, labels, focal0).value()).epsilon(1e-12));
  }
}

TEST_CASE("hard triplet picks the strongest negative") {
  Rng rng(17);
  for (int iter = 0; iter < 50; ++iter) {
    const Labels labels = random_labels(rng, 4, 4);
    const Tensor pred = random_pred(rng, nullptr, 4, 4);
    LossConfig cfg;
    cfg.variant = LossVariant::TRIPLET_HARD;

    // Exhaustive reference: per positive, scan row+column negatives.
    double expected = 0.0;
    int n_pos = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (labels.at(i, j) != P) continue;
        ++n_pos;
        double best = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < 4; ++l)
          if (labels.at(i, l) == N) best = std::max(best, pred.at(i, l));
        for (int k = 0; k < 4; ++k)
          if (labels.at(k, j) == N) best = std::max(best, pred.at(k, j));
        if (std::isfinite(best))
          expected += std::max(0.0, cfg.triplet_margin - pred.at(i, j) + best);
      }
    if (n_pos == 0) continue;
    expected /= n_pos;
    CHECK(ablation_loss(pred, labels, cfg).value() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("random triplet is seeded and valid") {
  Rng rng(19);
  const Labels labels = random_labels(rng, 4, 4);
  const Tensor pred = random_pred(rng, nullptr, 4, 4);
  LossConfig cfg;
  cfg.variant = LossVariant::TRIPLET_RANDOM;
  cfg.seed = 5;
  const double a = ablation_loss(pred, labels, cfg).value();
  const double b = ablation_loss(pred, labels, cfg).value();
  CHECK(a == b);
  CHECK(a >= 0.0);
}

TEST_CASE("all loss variants pass finite differences") {
  Rng rng(21);
  for (auto variant : {LossVariant::BIDIRECTIONAL, LossVariant::FORWARD, LossVariant::BACKWARD,
                       LossVariant::BCE, LossVariant::FOCAL, LossVariant::TRIPLET_RANDOM,
                       LossVariant::TRIPLET_HARD}) {
    LossConfig cfg;
    cfg.variant = variant;
    int done = 0;
    while (done < 5) {
      Tape<double> tape;
      const Labels labels = random_labels(rng, 3, 4);
      bool has_pos = false;
      for (auto l : labels.v) has_pos = has_pos || l == P;
      if (!has_pos) continue;
      Tensor pred = random_pred(rng, &tape, 3, 4);
      std::vector<Tensor> params{pred};
      auto forward = [&]() { return compute_loss(pred, labels, cfg); };
      const auto r = oracle::gradient_check(forward, params, tape);
      CHECK(r.max_rel_err < 1e-4);
      ++done;
    }
  }
}
