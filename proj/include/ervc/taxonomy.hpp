#pragma once

// 48-class view taxonomy: laterality x limb x region x projection.
//
// Class indices follow the byte-wise lexicographic order of the canonical
// label strings ("L FORE CARPUS DLPMO" is index 0). The order is frozen;
// confusion matrices and checkpoints depend on it.

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace ervc {

inline constexpr std::size_t kNumClasses = 48;
inline constexpr std::size_t kNumNeutralClasses = 24;

enum class Laterality { L, R };
enum class Limb { Fore, Hind };
enum class Region { Carpus, Fetlock, Tarsus, Stifle, Foot };
enum class Projection { DP, LM, DLPMO, DMPLO, FlexedLM, FlexedDP, CdCr, CdlCrmo };

/// Region headings of the examination protocol table; fetlock splits by limb.
enum class ProtocolRegion { Carpus, ForeFetlock, HindFetlock, Tarsus, Stifle, ForeHoof };

struct NeutralViewLabel {
  Limb limb;
  Region region;
  Projection projection;

  auto operator<=>(const NeutralViewLabel&) const = default;
};

struct ViewLabel {
  Laterality laterality;
  Limb limb;
  Region region;
  Projection projection;

  auto operator<=>(const ViewLabel&) const = default;

  NeutralViewLabel neutral() const { return {limb, region, projection}; }
};

std::string_view to_string(Laterality v);
std::string_view to_string(Limb v);
std::string_view to_string(Region v);
std::string_view to_string(Projection v);

/// Uppercase, single-space rendering, e.g. "R HIND STIFLE CD CR".
std::string render(const ViewLabel& label);
std::string render(const NeutralViewLabel& label);

bool is_valid(const NeutralViewLabel& label);
bool is_valid(const ViewLabel& label);

/// Case-insensitive, whitespace-tolerant; accepts HOOF for FOOT.
/// Throws Error{UnknownLabel}.
ViewLabel parse_label(std::string_view text);
std::optional<ViewLabel> try_parse_label(std::string_view text);

NeutralViewLabel collapse_laterality(const ViewLabel& label);

std::size_t class_index(const ViewLabel& label);
const ViewLabel& label_at(std::size_t index);
const std::array<ViewLabel, kNumClasses>& all_labels();

/// The 24 neutral labels in order of first appearance among all_labels().
const std::array<NeutralViewLabel, kNumNeutralClasses>& all_neutral_labels();
std::size_t neutral_index(const NeutralViewLabel& label);

/// Class index of the same view on the opposite limb.
std::size_t mirror_class(std::size_t index);

ProtocolRegion protocol_region(Limb limb, Region region);

/// Long-form view name from the examination protocol table.
/// Throws Error{UnknownPair} for combinations outside the protocol.
std::string_view expand_abbreviation(ProtocolRegion region, Projection projection);

}  // namespace ervc
