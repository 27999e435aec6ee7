#include "ervc/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <vector>

#include "ervc/error.hpp"

namespace ervc {
namespace {

struct ProtocolRow {
  ProtocolRegion region;
  Projection projection;
  std::string_view long_form;
};

constexpr std::array<ProtocolRow, 24> kProtocol{{
    {ProtocolRegion::Carpus, Projection::DP, "dorsopalmar"},
    {ProtocolRegion::Carpus, Projection::DLPMO, "dorsal 55° lateral to palmaromedial oblique"},
    {ProtocolRegion::Carpus, Projection::DMPLO, "dorsal 75° medial to palmarolateral oblique"},
    {ProtocolRegion::Carpus, Projection::FlexedLM, "flexed lateromedial"},
    {ProtocolRegion::Carpus, Projection::FlexedDP, "flexed dorsal 60° proximal dorsodistal oblique"},
    {ProtocolRegion::ForeFetlock, Projection::DP, "dorsopalmar"},
    {ProtocolRegion::ForeFetlock, Projection::DLPMO, "dorsal 45° lateral to palmaromedial oblique"},
    {ProtocolRegion::ForeFetlock, Projection::DMPLO, "dorsal 45° medial to palmarolateral oblique"},
    {ProtocolRegion::ForeFetlock, Projection::FlexedLM, "flexed lateromedial"},
    {ProtocolRegion::ForeFetlock, Projection::FlexedDP,
     "flexed dorsal 125° distal to palmaroproximal oblique"},
    {ProtocolRegion::ForeFetlock, Projection::LM, "lateromedial"},
    {ProtocolRegion::HindFetlock, Projection::DP, "dorsoplantar"},
    {ProtocolRegion::HindFetlock, Projection::DLPMO, "dorsal 45° lateral to pantaromedial oblique"},
    {ProtocolRegion::HindFetlock, Projection::DMPLO, "dorsal 45° medial to pantarolateral oblique"},
    {ProtocolRegion::HindFetlock, Projection::LM, "lateromedial"},
    {ProtocolRegion::Tarsus, Projection::DP, "dorsoplantar"},
    {ProtocolRegion::Tarsus, Projection::DLPMO, "dorsal 10° lateral to pantaromedial oblique"},
    {ProtocolRegion::Tarsus, Projection::DMPLO, "dorsal 65° medial to pantarolateral oblique"},
    {ProtocolRegion::Tarsus, Projection::LM, "lateromedial"},
    {ProtocolRegion::Stifle, Projection::LM, "lateromedial"},
    {ProtocolRegion::Stifle, Projection::CdCr, "caudocranial"},
    {ProtocolRegion::Stifle, Projection::CdlCrmo, "caudolateral to craniomedial oblique"},
    {ProtocolRegion::ForeHoof, Projection::LM, "lateromedial"},
    {ProtocolRegion::ForeHoof, Projection::DP, "dorsal 60° proximal to palmarodistal oblique"},
}};

std::optional<ProtocolRegion> try_protocol_region(Limb limb, Region region) {
  switch (region) {
    case Region::Carpus:
      return limb == Limb::Fore ? std::optional{ProtocolRegion::Carpus} : std::nullopt;
    case Region::Fetlock:
      return limb == Limb::Fore ? ProtocolRegion::ForeFetlock : ProtocolRegion::HindFetlock;
    case Region::Tarsus:
      return limb == Limb::Hind ? std::optional{ProtocolRegion::Tarsus} : std::nullopt;
    case Region::Stifle:
      return limb == Limb::Hind ? std::optional{ProtocolRegion::Stifle} : std::nullopt;
    case Region::Foot:
      return limb == Limb::Fore ? std::optional{ProtocolRegion::ForeHoof} : std::nullopt;
  }
  return std::nullopt;
}

const ProtocolRow* find_row(ProtocolRegion region, Projection projection) {
  for (const auto& row : kProtocol)
    if (row.region == region && row.projection == projection) return &row;
  return nullptr;
}

struct Tables {
  std::array<ViewLabel, kNumClasses> labels{};
  std::array<NeutralViewLabel, kNumNeutralClasses> neutral{};
  std::map<std::string, std::size_t, std::less<>> by_text;

  Tables() {
    std::vector<std::pair<std::string, ViewLabel>> all;
    for (Laterality lat : {Laterality::L, Laterality::R})
      for (Limb limb : {Limb::Fore, Limb::Hind})
        for (Region region : {Region::Carpus, Region::Fetlock, Region::Tarsus, Region::Stifle,
                              Region::Foot})
          for (int p = 0; p <= static_cast<int>(Projection::CdlCrmo); ++p) {
            ViewLabel label{lat, limb, region, static_cast<Projection>(p)};
            if (is_valid(label)) all.emplace_back(render(label), label);
          }
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (all.size() != kNumClasses) throw std::logic_error("taxonomy does not hold 48 views");
    std::size_t n = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      labels[i] = all[i].second;
      by_text.emplace(all[i].first, i);
      const auto neutral_label = collapse_laterality(all[i].second);
      if (std::find(neutral.begin(), neutral.begin() + n, neutral_label) == neutral.begin() + n)
        neutral[n++] = neutral_label;
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

// Whitespace-collapsed uppercase tokens.
std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace

std::string_view to_string(Laterality v) { return v == Laterality::L ? "L" : "R"; }

std::string_view to_string(Limb v) { return v == Limb::Fore ? "FORE" : "HIND"; }

std::string_view to_string(Region v) {
  switch (v) {
    case Region::Carpus: return "CARPUS";
    case Region::Fetlock: return "FETLOCK";
    case Region::Tarsus: return "TARSUS";
    case Region::Stifle: return "STIFLE";
    case Region::Foot: return "FOOT";
  }
  return "?";
}

std::string_view to_string(Projection v) {
  switch (v) {
    case Projection::DP: return "DP";
    case Projection::LM: return "LM";
    case Projection::DLPMO: return "DLPMO";
    case Projection::DMPLO: return "DMPLO";
    case Projection::FlexedLM: return "FLEXED LM";
    case Projection::FlexedDP: return "FLEXED DP";
    case Projection::CdCr: return "CD CR";
    case Projection::CdlCrmo: return "CDL CRMO";
  }
  return "?";
}

std::string render(const NeutralViewLabel& label) {
  std::string out;
  out.append(to_string(label.limb)).append(" ");
  out.append(to_string(label.region)).append(" ");
  out.append(to_string(label.projection));
  return out;
}

std::string render(const ViewLabel& label) {
  return std::string(to_string(label.laterality)) + " " + render(label.neutral());
}

bool is_valid(const NeutralViewLabel& label) {
  const auto region = try_protocol_region(label.limb, label.region);
  return region && find_row(*region, label.projection) != nullptr;
}

bool is_valid(const ViewLabel& label) { return is_valid(label.neutral()); }

std::optional<ViewLabel> try_parse_label(std::string_view text) {
  auto tokens = tokenize(text);
  std::string joined;
  for (auto& token : tokens) {
    if (token == "HOOF") token = "FOOT";
    if (!joined.empty()) joined.push_back(' ');
    joined += token;
  }
  const auto& by_text = tables().by_text;
  const auto it = by_text.find(joined);
  if (it == by_text.end()) return std::nullopt;
  return tables().labels[it->second];
}

ViewLabel parse_label(std::string_view text) {
  if (auto label = try_parse_label(text)) return *label;
  fail(Errc::UnknownLabel, "'" + std::string(text) + "'");
}

NeutralViewLabel collapse_laterality(const ViewLabel& label) { return label.neutral(); }

std::size_t class_index(const ViewLabel& label) {
  const auto& by_text = tables().by_text;
  const auto it = by_text.find(render(label));
  if (it == by_text.end()) fail(Errc::UnknownLabel, render(label));
  return it->second;
}

const ViewLabel& label_at(std::size_t index) {
  if (index >= kNumClasses) fail(Errc::IndexOutOfRange, "class index " + std::to_string(index));
  return tables().labels[index];
}

const std::array<ViewLabel, kNumClasses>& all_labels() { return tables().labels; }

const std::array<NeutralViewLabel, kNumNeutralClasses>& all_neutral_labels() {
  return tables().neutral;
}

std::size_t neutral_index(const NeutralViewLabel& label) {
  const auto& neutral = tables().neutral;
  const auto it = std::find(neutral.begin(), neutral.end(), label);
  if (it == neutral.end()) fail(Errc::UnknownLabel, render(label));
  return static_cast<std::size_t>(it - neutral.begin());
}

std::size_t mirror_class(std::size_t index) {
  ViewLabel label = label_at(index);
  label.laterality = label.laterality == Laterality::L ? Laterality::R : Laterality::L;
  return class_index(label);
}

ProtocolRegion protocol_region(Limb limb, Region region) {
  if (auto r = try_protocol_region(limb, region)) return *r;
  fail(Errc::UnknownPair, std::string(to_string(limb)) + " " + std::string(to_string(region)));
}

std::string_view expand_abbreviation(ProtocolRegion region, Projection projection) {
  if (const auto* row = find_row(region, projection)) return row->long_form;
  fail(Errc::UnknownPair, std::string(to_string(projection)));
}

}  // namespace ervc
