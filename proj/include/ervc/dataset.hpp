#pragma once

// Curation: view-name standardization, set completeness audit, set-level
// splits, and marker/redaction statistics. Also the metadata CSV schema.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ervc/image.hpp"
#include "ervc/taxonomy.hpp"

namespace ervc {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct RadiographRecord {
  std::string set_id;
  std::string file;
  std::string raw_view;
  ViewLabel label{};
  bool has_marker = false;
  bool redacted = false;
  Orientation orientation;
  std::optional<Split> split;
};

/// Exact header of the metadata CSV.
inline constexpr std::string_view kMetadataHeader =
    "set_id,file,raw_view,label,has_marker,redacted,quarter_turns,mirror,split";

std::string write_metadata_csv(const std::vector<RadiographRecord>& records);
/// Throws BadCsv (wrong header/arity/flags) or UnknownLabel.
std::vector<RadiographRecord> read_metadata_csv(std::string_view text);

/// Case-fold, trim, collapse whitespace, apply the alias table, then parse.
/// Throws UnknownLabel.
ViewLabel standardize_view_name(std::string_view raw);

enum class SetStatus { Complete, Incomplete };

struct SetAudit {
  std::string set_id;
  SetStatus status = SetStatus::Incomplete;
  std::vector<ViewLabel> missing;
  std::vector<ViewLabel> duplicated;
};

/// Records must share one set_id (the first record's id is reported).
SetAudit audit_set(const std::vector<RadiographRecord>& records);
/// Audits every set_id present, ordered by set_id.
std::vector<SetAudit> audit_all(const std::vector<RadiographRecord>& records);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

using SplitAssignment = std::map<std::string, Split>;

/// Sorts ids, Fisher-Yates shuffles them with SplitMix64(seed), then assigns
/// contiguous runs of train/val/test. Throws CountMismatch.
SplitAssignment split_sets(std::vector<std::string> set_ids, SplitCounts counts,
                           std::uint64_t seed);

/// Integer counts in the 116/40/42 proportions summing to n_sets.
SplitCounts proportional_counts(std::size_t n_sets);

struct FlagFrequency {
  std::size_t count = 0;
  std::size_t with_marker = 0;
  std::size_t redacted = 0;

  double marker_fraction() const { return count ? double(with_marker) / double(count) : 0.0; }
  double redaction_fraction() const { return count ? double(redacted) / double(count) : 0.0; }
};

struct DatasetStats {
  // keyed by (class index, split)
  std::map<std::pair<std::size_t, Split>, FlagFrequency> per_label;
  std::map<Split, FlagFrequency> per_split;
  FlagFrequency overall;
};

/// Records without a split are counted in `overall` only.
DatasetStats dataset_stats(const std::vector<RadiographRecord>& records);
std::string dataset_stats_csv(const DatasetStats& stats);

}  // namespace ervc
