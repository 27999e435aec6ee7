#pragma once

// 2x2 association tests between a record flag (side marker, redaction) and
// classification success.

#include <optional>
#include <string>
#include <vector>

#include "ervc/taxonomy.hpp"

namespace ervc {

/// Rows: flag present / absent. Columns: correct / incorrect.
struct Table2x2 {
  double a = 0, b = 0, c = 0, d = 0;
  double n() const { return a + b + c + d; }
  bool has_zero_marginal() const;
};

struct Chi2 {
  double statistic = 0.0;
  bool zero_marginal = false;  // statistic forced to 0
};

/// Pearson statistic; with `yates`, |ad - bc| is reduced by N/2 (floored at 0).
Chi2 chi2_statistic(const Table2x2& t, bool yates = true);

/// Survival function of chi-squared with one degree of freedom: erfc(sqrt(x/2)).
/// Throws NegativeStatistic.
double chi2_sf(double x, int df = 1);

/// Throws ZeroMarginal.
double phi_coefficient(const Table2x2& t);

struct FlaggedOutcome {
  ViewLabel label{};
  bool flag = false;
  bool correct = false;
};

struct AssociationRow {
  ViewLabel label{};
  std::size_t n = 0;
  double flag_fraction = 0.0;
  double correct_fraction = 0.0;
  double chi2 = 0.0;
  std::optional<double> p_value;  // absent when the table has a zero marginal
};

/// One row per label present, canonical label order.
std::vector<AssociationRow> association_by_label(const std::vector<FlaggedOutcome>& records,
                                                 bool yates = true);

struct OverallAssociation {
  Table2x2 table;
  double chi2 = 0.0;
  std::optional<double> p_value;
  std::optional<double> phi;
};

OverallAssociation overall_association(const std::vector<FlaggedOutcome>& records, bool yates = true);

/// "<1e-300" below that bound, otherwise a 6 significant digit form.
std::string format_p_value(double p);

/// label,with_marker_pct,correct_pct,p_value
std::string association_csv(const std::vector<AssociationRow>& rows);

}  // namespace ervc
