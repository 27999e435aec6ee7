#pragma once

// Accuracy, one-vs-rest ROC AUC, confusion analytics and the laterality
// decomposition of classification errors.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ervc/taxonomy.hpp"

namespace ervc {

/// Throws Empty (no samples) or ShapeMismatch (length mismatch).
double top1_accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels);

struct ConfusionMatrix {
  std::size_t n = kNumClasses;
  std::vector<std::size_t> counts = std::vector<std::size_t>(kNumClasses * kNumClasses, 0);

  std::size_t& at(std::size_t truth, std::size_t pred) { return counts[truth * n + pred]; }
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * n + pred]; }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_total(std::size_t truth) const;
};

/// Throws IndexOutOfRange or ShapeMismatch.
ConfusionMatrix confusion(std::span<const std::size_t> preds, std::span<const std::size_t> labels);

/// Fraction of samples whose true and predicted classes share a neutral view. Throws EmptyMatrix.
double collapsed_accuracy(const ConfusionMatrix& cm);

/// Among misclassifications, the fraction that only got laterality wrong;
/// nullopt when there are no errors.
std::optional<double> laterality_error_fraction(const ConfusionMatrix& cm);

struct AucResult {
  double macro = 0.0;
  std::vector<std::size_t> skipped;  // classes without both positives and negatives
};

/// Macro one-vs-rest AUC over classes with at least one positive and one
/// negative. Rank statistic, ties count 1/2. Throws DegenerateLabels when
/// fewer than two classes occur, ShapeMismatch on ragged input.
AucResult roc_auc_macro_ovr(const std::vector<std::vector<double>>& scores,
                            std::span<const std::size_t> labels);

/// Binary AUC of `scores` for positives flagged in `positive`.
double binary_auc(std::span<const double> scores, const std::vector<bool>& positive);

struct ClassBuckets {
  std::size_t high_threshold = 0;  // correct >= this
  std::size_t low_threshold = 0;   // correct <= this
  std::vector<std::size_t> high;
  std::vector<std::size_t> low;
};

/// Thresholds 40 and 26 out of 42, scaled by n_per_class / 42 and rounded.
/// Throws Unbalanced if any row total differs from n_per_class.
ClassBuckets per_class_buckets(const ConfusionMatrix& cm, std::size_t n_per_class);

struct MetricsReport {
  std::size_t samples = 0;
  double top1 = 0.0;
  double auc_macro = 0.0;
  std::vector<std::size_t> auc_skipped;
  double collapsed = 0.0;
  std::optional<double> laterality_fraction;
  std::array<double, kNumClasses> per_class{};  // -1 when a class has no samples
  std::optional<ClassBuckets> buckets;          // present for balanced sets
};

MetricsReport make_report(std::span<const std::size_t> preds,
                          const std::vector<std::vector<double>>& scores,
                          std::span<const std::size_t> labels);

std::string report_json(const MetricsReport& report);
/// 49x49 CSV: header row and first column carry canonical labels.
std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace ervc
