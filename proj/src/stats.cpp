#include "ervc/stats.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "ervc/error.hpp"
#include "ervc/io.hpp"

namespace ervc {

bool Table2x2::has_zero_marginal() const {
  return a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0;
}

Chi2 chi2_statistic(const Table2x2& t, bool yates) {
  if (t.has_zero_marginal()) return {0.0, true};
  const double n = t.n();
  double diff = std::abs(t.a * t.d - t.b * t.c);
  if (yates) diff = std::max(diff - n / 2.0, 0.0);
  const double denom = (t.a + t.b) * (t.c + t.d) * (t.a + t.c) * (t.b + t.d);
  return {n * diff * diff / denom, false};
}

double chi2_sf(double x, int df) {
  if (df != 1) fail(Errc::BadConfig, "only df = 1 is supported");
  if (!(x >= 0.0)) fail(Errc::NegativeStatistic, "chi-squared statistic must be >= 0");
  return std::erfc(std::sqrt(x / 2.0));
}

double phi_coefficient(const Table2x2& t) {
  if (t.has_zero_marginal()) fail(Errc::ZeroMarginal, "phi undefined with an empty row or column");
  return (t.a * t.d - t.b * t.c) /
         std::sqrt((t.a + t.b) * (t.c + t.d) * (t.a + t.c) * (t.b + t.d));
}

namespace {

void tally(Table2x2& t, const FlaggedOutcome& r) {
  if (r.flag) (r.correct ? t.a : t.b) += 1;
  else (r.correct ? t.c : t.d) += 1;
}

}  // namespace

std::vector<AssociationRow> association_by_label(const std::vector<FlaggedOutcome>& records, bool yates) {
  std::map<std::size_t, Table2x2> tables;
  for (const auto& r : records) tally(tables[class_index(r.label)], r);
  std::vector<AssociationRow> rows;
  for (const auto& [cls, t] : tables) {
    AssociationRow row;
    row.label = label_at(cls);
    row.n = static_cast<std::size_t>(t.n());
    row.flag_fraction = (t.a + t.b) / t.n();
    row.correct_fraction = (t.a + t.c) / t.n();
    const Chi2 x = chi2_statistic(t, yates);
    row.chi2 = x.statistic;
    if (!x.zero_marginal) row.p_value = chi2_sf(x.statistic);
    rows.push_back(row);
  }
  return rows;
}

OverallAssociation overall_association(const std::vector<FlaggedOutcome>& records, bool yates) {
  OverallAssociation o;
  for (const auto& r : records) tally(o.table, r);
  const Chi2 x = chi2_statistic(o.table, yates);
  o.chi2 = x.statistic;
  if (!x.zero_marginal) {
    o.p_value = chi2_sf(x.statistic);
    o.phi = phi_coefficient(o.table);
  }
  return o;
}

std::string format_p_value(double p) {
  if (p < 1e-300) return "<1e-300";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", p);
  return buf;
}

std::string association_csv(const std::vector<AssociationRow>& rows) {
  std::string out = "label,with_marker_pct,correct_pct,p_value\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,", 100.0 * r.flag_fraction, 100.0 * r.correct_fraction);
    out += csv_escape(render(r.label)) + buf + (r.p_value ? format_p_value(*r.p_value) : "NA") + "\n";
  }
  return out;
}

}  // namespace ervc
