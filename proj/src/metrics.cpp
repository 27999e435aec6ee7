#include "ervc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ervc/error.hpp"
#include "ervc/io.hpp"
#include "json.hpp"

namespace ervc {

namespace {

void check_pair(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  if (preds.size() != labels.size()) fail(Errc::ShapeMismatch, "predictions and labels differ in length");
  if (preds.empty()) fail(Errc::Empty, "no samples");
}

}  // namespace

double top1_accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  check_pair(preds, labels);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) t += at(i, i);
  return t;
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  return std::accumulate(counts.begin() + static_cast<std::ptrdiff_t>(truth * n),
                         counts.begin() + static_cast<std::ptrdiff_t>((truth + 1) * n), std::size_t{0});
}

ConfusionMatrix confusion(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  if (preds.size() != labels.size()) fail(Errc::ShapeMismatch, "predictions and labels differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= kNumClasses || labels[i] >= kNumClasses)
      fail(Errc::IndexOutOfRange, "class index out of range at sample " + std::to_string(i));
    ++cm.at(labels[i], preds[i]);
  }
  return cm;
}

namespace {

bool same_neutral(std::size_t a, std::size_t b) {
  return label_at(a).neutral() == label_at(b).neutral();
}

}  // namespace

double collapsed_accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) fail(Errc::EmptyMatrix, "confusion matrix has no counts");
  std::size_t hit = 0;
  for (std::size_t t = 0; t < cm.n; ++t)
    for (std::size_t p = 0; p < cm.n; ++p)
      if (same_neutral(t, p)) hit += cm.at(t, p);
  return static_cast<double>(hit) / static_cast<double>(total);
}

std::optional<double> laterality_error_fraction(const ConfusionMatrix& cm) {
  std::size_t errors = 0, lateral = 0;
  for (std::size_t t = 0; t < cm.n; ++t)
    for (std::size_t p = 0; p < cm.n; ++p) {
      if (t == p) continue;
      errors += cm.at(t, p);
      if (same_neutral(t, p)) lateral += cm.at(t, p);
    }
  if (errors == 0) return std::nullopt;
  return static_cast<double>(lateral) / static_cast<double>(errors);
}

double binary_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  // Mann-Whitney U with midranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

AucResult roc_auc_macro_ovr(const std::vector<std::vector<double>>& scores,
                            std::span<const std::size_t> labels) {
  if (scores.size() != labels.size()) fail(Errc::ShapeMismatch, "scores and labels differ in length");
  if (scores.empty()) fail(Errc::DegenerateLabels, "no samples");
  const std::size_t k = scores.front().size();
  for (const auto& row : scores)
    if (row.size() != k) fail(Errc::ShapeMismatch, "ragged score rows");
  std::vector<std::size_t> present(k, 0);
  for (std::size_t y : labels) {
    if (y >= k) fail(Errc::IndexOutOfRange, "label beyond score columns");
    ++present[y];
  }
  if (std::count_if(present.begin(), present.end(), [](std::size_t c) { return c > 0; }) < 2)
    fail(Errc::DegenerateLabels, "fewer than two classes present");

  AucResult r;
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> column(scores.size());
  std::vector<bool> positive(scores.size());
  for (std::size_t c = 0; c < k; ++c) {
    if (present[c] == 0 || present[c] == labels.size()) {
      r.skipped.push_back(c);
      continue;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
      column[i] = scores[i][c];
      positive[i] = labels[i] == c;
    }
    sum += binary_auc(column, positive);
    ++used;
  }
  r.macro = sum / static_cast<double>(used);
  return r;
}

ClassBuckets per_class_buckets(const ConfusionMatrix& cm, std::size_t n_per_class) {
  for (std::size_t t = 0; t < cm.n; ++t)
    if (cm.row_total(t) != n_per_class)
      fail(Errc::Unbalanced, render(label_at(t)) + " has " + std::to_string(cm.row_total(t)) +
                                 " samples, expected " + std::to_string(n_per_class));
  ClassBuckets b;
  const double scale = static_cast<double>(n_per_class) / 42.0;
  b.high_threshold = static_cast<std::size_t>(std::lround(40.0 * scale));
  b.low_threshold = static_cast<std::size_t>(std::lround(26.0 * scale));
  for (std::size_t t = 0; t < cm.n; ++t) {
    const std::size_t correct = cm.at(t, t);
    if (correct >= b.high_threshold) b.high.push_back(t);
    else if (correct <= b.low_threshold) b.low.push_back(t);
  }
  return b;
}

MetricsReport make_report(std::span<const std::size_t> preds,
                          const std::vector<std::vector<double>>& scores,
                          std::span<const std::size_t> labels) {
  MetricsReport r;
  r.samples = labels.size();
  r.top1 = top1_accuracy(preds, labels);
  const ConfusionMatrix cm = confusion(preds, labels);
  const AucResult auc = roc_auc_macro_ovr(scores, labels);
  r.auc_macro = auc.macro;
  r.auc_skipped = auc.skipped;
  r.collapsed = collapsed_accuracy(cm);
  r.laterality_fraction = laterality_error_fraction(cm);
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    const std::size_t n = cm.row_total(t);
    r.per_class[t] = n ? static_cast<double>(cm.at(t, t)) / static_cast<double>(n) : -1.0;
  }
  const std::size_t n0 = cm.row_total(0);
  bool balanced = n0 > 0;
  for (std::size_t t = 1; t < kNumClasses; ++t) balanced = balanced && cm.row_total(t) == n0;
  if (balanced) r.buckets = per_class_buckets(cm, n0);
  return r;
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["samples"] = report.samples;
  j["top1_accuracy"] = report.top1;
  j["roc_auc_macro_ovr"] = report.auc_macro;
  j["auc_skipped_classes"] = nlohmann::json::array();
  for (std::size_t c : report.auc_skipped) j["auc_skipped_classes"].push_back(render(label_at(c)));
  j["collapsed_accuracy"] = report.collapsed;
  j["laterality_error_fraction"] =
      report.laterality_fraction ? nlohmann::ordered_json(*report.laterality_fraction) : nullptr;
  // Table-style listing sorted by accuracy, ties in canonical order.
  std::vector<std::size_t> order(kNumClasses);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.per_class[a] > report.per_class[b];
  });
  auto& per = j["per_class_accuracy"] = nlohmann::ordered_json::array();
  for (std::size_t c : order) {
    if (report.per_class[c] < 0) continue;
    per.push_back({{"label", render(label_at(c))}, {"accuracy", report.per_class[c]}});
  }
  if (report.buckets) {
    auto names = [](const std::vector<std::size_t>& cs) {
      nlohmann::ordered_json a = nlohmann::ordered_json::array();
      for (std::size_t c : cs) a.push_back(render(label_at(c)));
      return a;
    };
    j["buckets"] = {{"high_threshold", report.buckets->high_threshold},
                    {"low_threshold", report.buckets->low_threshold},
                    {"high", names(report.buckets->high)},
                    {"low", names(report.buckets->low)}};
  }
  return j.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred";
  for (std::size_t p = 0; p < cm.n; ++p) out += "," + csv_escape(render(label_at(p)));
  out += "\n";
  for (std::size_t t = 0; t < cm.n; ++t) {
    out += csv_escape(render(label_at(t)));
    for (std::size_t p = 0; p < cm.n; ++p) out += "," + std::to_string(cm.at(t, p));
    out += "\n";
  }
  return out;
}

}  // namespace ervc
