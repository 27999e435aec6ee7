#include "doctest.h"
#include "ervc/error.hpp"
#include "ervc/metrics.hpp"
#include "ervc/rng.hpp"

#include <cmath>

using namespace ervc;

static Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

// Mean over classes of P(score_pos > score_neg) + 0.5 P(tie), by explicit pairs.
static double pair_count_auc(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& labels,
                             std::size_t classes) {
  double sum = 0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[i] != c || labels[j] == c) continue;
        pairs += 1;
        if (scores[i][c] > scores[j][c]) wins += 1;
        else if (scores[i][c] == scores[j][c]) wins += 0.5;
      }
    if (pairs > 0) {
      sum += wins / pairs;
      ++used;
    }
  }
  return sum / used;
}

TEST_CASE("top1_accuracy") {
  const std::vector<std::size_t> l = {1, 2, 3};
  CHECK(top1_accuracy(l, l) == 1.0);
  const std::vector<std::size_t> wrong = {2, 3, 1};
  CHECK(top1_accuracy(wrong, l) == 0.0);
  CHECK(code_of([] { top1_accuracy({}, {}); }) == Errc::Empty);
  const std::vector<std::size_t> shorter = {1};
  CHECK(code_of([&] { top1_accuracy(shorter, l); }) == Errc::ShapeMismatch);
}

TEST_CASE("confusion") {
  const std::vector<std::size_t> l = {0, 5, 9, 47};
  const ConfusionMatrix d = confusion(l, l);
  CHECK(d.trace() == 4);
  CHECK(d.total() == 4);
  const std::vector<std::size_t> t = {3}, p = {7};
  const ConfusionMatrix one = confusion(p, t);
  CHECK(one.at(3, 7) == 1);
  CHECK(one.total() == 1);
  const std::vector<std::size_t> bad = {48};
  CHECK(code_of([&] { confusion(bad, t); }) == Errc::IndexOutOfRange);

  SplitMix64 rng(1);
  std::vector<std::size_t> preds, labels;
  for (int i = 0; i < 300; ++i) {
    preds.push_back(rng.below(6));
    labels.push_back(rng.below(6));
  }
  const ConfusionMatrix cm = confusion(preds, labels);
  std::size_t tally[6][6] = {};
  for (int i = 0; i < 300; ++i) ++tally[labels[i]][preds[i]];
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) CHECK(cm.at(a, b) == tally[a][b]);
  CHECK(top1_accuracy(preds, labels) == double(cm.trace()) / cm.total());
}

TEST_CASE("collapsed accuracy and laterality error fraction") {
  ConfusionMatrix diag;
  for (std::size_t c = 0; c < 48; ++c) diag.at(c, c) = 2;
  CHECK(collapsed_accuracy(diag) == 1.0);
  CHECK_FALSE(laterality_error_fraction(diag).has_value());

  ConfusionMatrix swaps;
  for (std::size_t c = 0; c < 48; ++c) swaps.at(c, mirror_class(c)) = 1;
  CHECK(collapsed_accuracy(swaps) == 1.0);
  CHECK(laterality_error_fraction(swaps) == 1.0);

  ConfusionMatrix toy;
  toy.at(0, 0) = 8;
  toy.at(1, mirror_class(1)) = 1;
  toy.at(2, 30) = 1;
  CHECK(collapsed_accuracy(toy) == doctest::Approx(0.9).epsilon(1e-15));

  ConfusionMatrix toy2;
  toy2.at(4, mirror_class(4)) = 8;
  toy2.at(4, 5) = 2;
  CHECK(laterality_error_fraction(toy2) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(code_of([] { collapsed_accuracy(ConfusionMatrix{}); }) == Errc::EmptyMatrix);

  SplitMix64 rng(2);
  for (int t = 0; t < 50; ++t) {
    ConfusionMatrix cm;
    for (int i = 0; i < 100; ++i) ++cm.at(rng.below(48), rng.below(48));
    CHECK(collapsed_accuracy(cm) >= double(cm.trace()) / cm.total());
    const auto f = laterality_error_fraction(cm);
    REQUIRE(f.has_value());
    CHECK(*f >= 0.0);
    CHECK(*f <= 1.0);
  }
}

TEST_CASE("AUC extremes") {
  const std::vector<std::size_t> labels = {0, 1, 2, 0, 1, 2};
  std::vector<std::vector<double>> good(6, std::vector<double>(3, 0.1)), bad = good;
  for (std::size_t i = 0; i < 6; ++i) {
    good[i][labels[i]] = 0.8;
    for (std::size_t c = 0; c < 3; ++c) bad[i][c] = c == labels[i] ? 0.0 : 0.5;
  }
  CHECK(roc_auc_macro_ovr(good, labels).macro == 1.0);
  CHECK(roc_auc_macro_ovr(bad, labels).macro == 0.0);
  const std::vector<std::size_t> single = {1, 1};
  const std::vector<std::vector<double>> two(2, std::vector<double>(3, 0.3));
  CHECK(code_of([&] { roc_auc_macro_ovr(two, single); }) == Errc::DegenerateLabels);
}

TEST_CASE("AUC matches pair counting, with ties, and ignores monotone transforms") {
  SplitMix64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + rng.below(40), k = 3 + rng.below(4);
    std::vector<std::size_t> labels(n);
    std::vector<std::vector<double>> s(n, std::vector<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.below(k);
      for (auto& v : s[i]) v = static_cast<double>(rng.below(6)) / 5.0;
    }
    labels[0] = 0;
    labels[1] = 1;
    const AucResult r = roc_auc_macro_ovr(s, labels);
    CHECK(std::abs(r.macro - pair_count_auc(s, labels, k)) <= 1e-12);
    auto warped = s;
    for (auto& row : warped)
      for (auto& v : row) v = std::exp(3 * v) - 7;
    CHECK(std::abs(roc_auc_macro_ovr(warped, labels).macro - r.macro) <= 1e-12);
  }
}

TEST_CASE("binary AUC") {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  CHECK(binary_auc(s, {false, false, true, true}) == 0.75);
}

TEST_CASE("per_class_buckets") {
  ConfusionMatrix cm;
  for (std::size_t c = 0; c < 48; ++c) {
    const std::size_t correct = c == 0 ? 41 : c == 1 ? 26 : c == 2 ? 40 : 30;
    cm.at(c, c) = correct;
    cm.at(c, mirror_class(c)) = 42 - correct;
  }
  const ClassBuckets b = per_class_buckets(cm, 42);
  CHECK(b.high_threshold == 40);
  CHECK(b.low_threshold == 26);
  CHECK(b.high == std::vector<std::size_t>{0, 2});
  CHECK(b.low == std::vector<std::size_t>{1});
  ConfusionMatrix half;
  for (std::size_t c = 0; c < 48; ++c) half.at(c, c) = 21;
  const ClassBuckets s = per_class_buckets(half, 21);
  CHECK(s.high_threshold == 20);
  CHECK(s.low_threshold == 13);
  cm.at(5, 5) += 1;
  CHECK(code_of([&] { per_class_buckets(cm, 42); }) == Errc::Unbalanced);
}

TEST_CASE("report json and confusion csv") {
  const std::vector<std::size_t> labels = {0, 1, 2, 3};
  const std::vector<std::size_t> preds = {0, 1, 3, 3};
  std::vector<std::vector<double>> scores(4, std::vector<double>(48, 0.0));
  for (std::size_t i = 0; i < 4; ++i) scores[i][preds[i]] = 1.0;
  const MetricsReport r = make_report(preds, scores, labels);
  CHECK(r.samples == 4);
  CHECK(r.top1 == 0.75);
  CHECK(r.per_class[2] == 0.0);
  CHECK(r.per_class[10] == -1.0);
  const std::string js = report_json(r);
  CHECK(js.find("\"top1_accuracy\": 0.75") != std::string::npos);
  CHECK(js.find("\"laterality_error_fraction\"") != std::string::npos);

  const std::string csv = confusion_csv(confusion(preds, labels));
  CHECK(csv.rfind("true\\pred,L FORE CARPUS DLPMO,", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 49);
}
