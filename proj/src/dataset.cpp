#include "ervc/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "ervc/error.hpp"
#include "ervc/io.hpp"
#include "ervc/rng.hpp"

namespace ervc {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "TRAIN";
    case Split::Val: return "VAL";
    case Split::Test: return "TEST";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "TRAIN") return Split::Train;
  if (text == "VAL") return Split::Val;
  if (text == "TEST") return Split::Test;
  fail(Errc::BadCsv, "unknown split '" + std::string(text) + "'");
}

namespace {

bool parse_flag(const std::string& text) {
  if (text == "1") return true;
  if (text == "0") return false;
  fail(Errc::BadCsv, "flag must be 0 or 1, got '" + text + "'");
}

int parse_turns(const std::string& text) {
  if (text.size() != 1 || text[0] < '0' || text[0] > '3')
    fail(Errc::BadCsv, "quarter_turns must be 0..3, got '" + text + "'");
  return text[0] - '0';
}

struct Alias {
  std::string_view from;
  std::string_view to;
};

constexpr std::array<Alias, 6> kAliases{{
    {"LEFT", "L"},
    {"RIGHT", "R"},
    {"FRONT", "FORE"},
    {"FORELIMB", "FORE"},
    {"HINDLIMB", "HIND"},
    {"HOOF", "FOOT"},
}};

}  // namespace

std::string write_metadata_csv(const std::vector<RadiographRecord>& records) {
  std::ostringstream out;
  out << kMetadataHeader << '\n';
  for (const auto& r : records) {
    out << csv_escape(r.set_id) << ',' << csv_escape(r.file) << ',' << csv_escape(r.raw_view)
        << ',' << render(r.label) << ',' << (r.has_marker ? 1 : 0) << ','
        << (r.redacted ? 1 : 0) << ',' << r.orientation.quarter_turns << ','
        << (r.orientation.mirror ? 1 : 0) << ',' << (r.split ? to_string(*r.split) : "") << '\n';
  }
  return out.str();
}

std::vector<RadiographRecord> read_metadata_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) fail(Errc::BadCsv, "missing header row");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kMetadataHeader) fail(Errc::BadCsv, "unexpected header '" + header + "'");
  std::vector<RadiographRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 9) fail(Errc::BadCsv, "row " + std::to_string(i) + " needs 9 fields");
    RadiographRecord r;
    r.set_id = row[0];
    r.file = row[1];
    r.raw_view = row[2];
    r.label = parse_label(row[3]);
    r.has_marker = parse_flag(row[4]);
    r.redacted = parse_flag(row[5]);
    r.orientation.quarter_turns = parse_turns(row[6]);
    r.orientation.mirror = parse_flag(row[7]);
    if (!row[8].empty()) r.split = parse_split(row[8]);
    records.push_back(std::move(r));
  }
  return records;
}

ViewLabel standardize_view_name(std::string_view raw) {
  std::istringstream in{std::string(raw)};
  std::string token;
  std::string normalized;
  while (in >> token) {
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (const auto& alias : kAliases)
      if (token == alias.from) token = alias.to;
    if (!normalized.empty()) normalized.push_back(' ');
    normalized += token;
  }
  if (auto label = try_parse_label(normalized)) return *label;
  fail(Errc::UnknownLabel, "'" + std::string(raw) + "'");
}

SetAudit audit_set(const std::vector<RadiographRecord>& records) {
  SetAudit audit;
  if (!records.empty()) audit.set_id = records.front().set_id;
  std::array<std::size_t, kNumClasses> seen{};
  for (const auto& r : records) ++seen[class_index(r.label)];
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (seen[c] == 0) audit.missing.push_back(label_at(c));
    if (seen[c] > 1) audit.duplicated.push_back(label_at(c));
  }
  audit.status = audit.missing.empty() && audit.duplicated.empty() ? SetStatus::Complete
                                                                    : SetStatus::Incomplete;
  return audit;
}

std::vector<SetAudit> audit_all(const std::vector<RadiographRecord>& records) {
  std::map<std::string, std::vector<RadiographRecord>> by_set;
  for (const auto& r : records) by_set[r.set_id].push_back(r);
  std::vector<SetAudit> audits;
  for (const auto& [id, group] : by_set) audits.push_back(audit_set(group));
  return audits;
}

SplitAssignment split_sets(std::vector<std::string> set_ids, SplitCounts counts,
                           std::uint64_t seed) {
  std::sort(set_ids.begin(), set_ids.end());
  if (std::adjacent_find(set_ids.begin(), set_ids.end()) != set_ids.end())
    fail(Errc::CountMismatch, "duplicate set ids");
  if (counts.train + counts.val + counts.test != set_ids.size())
    fail(Errc::CountMismatch, "counts sum to " +
                                  std::to_string(counts.train + counts.val + counts.test) +
                                  " but there are " + std::to_string(set_ids.size()) + " sets");
  SplitMix64 rng(seed);
  for (std::size_t i = set_ids.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(set_ids[i - 1], set_ids[j]);
  }
  SplitAssignment out;
  for (std::size_t i = 0; i < set_ids.size(); ++i) {
    const Split s = i < counts.train                ? Split::Train
                    : i < counts.train + counts.val ? Split::Val
                                                    : Split::Test;
    out.emplace(set_ids[i], s);
  }
  return out;
}

SplitCounts proportional_counts(std::size_t n_sets) {
  SplitCounts c;
  c.train = (n_sets * 116 + 99) / 198;
  c.val = (n_sets * 40 + 99) / 198;
  if (c.train + c.val > n_sets) c.val = n_sets - c.train;
  c.test = n_sets - c.train - c.val;
  return c;
}

DatasetStats dataset_stats(const std::vector<RadiographRecord>& records) {
  DatasetStats stats;
  auto bump = [](FlagFrequency& f, const RadiographRecord& r) {
    ++f.count;
    f.with_marker += r.has_marker ? 1 : 0;
    f.redacted += r.redacted ? 1 : 0;
  };
  for (const auto& r : records) {
    bump(stats.overall, r);
    if (!r.split) continue;
    bump(stats.per_label[{class_index(r.label), *r.split}], r);
    bump(stats.per_split[*r.split], r);
  }
  return stats;
}

std::string dataset_stats_csv(const DatasetStats& stats) {
  std::ostringstream out;
  out << "label,split,count,marker_fraction,redaction_fraction\n";
  for (const auto& [key, f] : stats.per_label)
    out << render(label_at(key.first)) << ',' << to_string(key.second) << ',' << f.count << ','
        << format_real(f.marker_fraction()) << ',' << format_real(f.redaction_fraction()) << '\n';
  for (const auto& [split, f] : stats.per_split)
    out << "ALL," << to_string(split) << ',' << f.count << ',' << format_real(f.marker_fraction())
        << ',' << format_real(f.redaction_fraction()) << '\n';
  out << "ALL,ALL," << stats.overall.count << ',' << format_real(stats.overall.marker_fraction())
      << ',' << format_real(stats.overall.redaction_fraction()) << '\n';
  return out.str();
}

}  // namespace ervc
