#include "doctest.h"
#include "ervc/error.hpp"
#include "ervc/taxonomy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

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

TEST_CASE("parse_label canonical examples") {
  const ViewLabel a = parse_label("L FORE CARPUS DLPMO");
  CHECK(a == ViewLabel{Laterality::L, Limb::Fore, Region::Carpus, Projection::DLPMO});
  const ViewLabel b = parse_label("R HIND STIFLE CD CR");
  CHECK(b == ViewLabel{Laterality::R, Limb::Hind, Region::Stifle, Projection::CdCr});
  CHECK(code_of([] { parse_label("L FORE ELBOW DP"); }) == Errc::UnknownLabel);
}

TEST_CASE("parse_label folds case and whitespace, accepts HOOF") {
  CHECK(parse_label("  l   fore carpus  dlpmo ") == parse_label("L FORE CARPUS DLPMO"));
  CHECK(parse_label("L FORE HOOF DP") == parse_label("L FORE FOOT DP"));
  CHECK_FALSE(try_parse_label("L FORE CARPUS").has_value());
  CHECK_FALSE(try_parse_label("").has_value());
}

TEST_CASE("enumeration: 48 labels, 24 neutral views") {
  const auto& labels = all_labels();
  std::set<std::string> rendered;
  for (const auto& l : labels) rendered.insert(render(l));
  CHECK(rendered.size() == kNumClasses);

  std::map<NeutralViewLabel, int> hits;
  for (const auto& l : labels) ++hits[collapse_laterality(l)];
  CHECK(hits.size() == kNumNeutralClasses);
  for (const auto& [n, k] : hits) CHECK(k == 2);
  CHECK(all_neutral_labels().size() == kNumNeutralClasses);
}

TEST_CASE("render and parse round-trip on every label") {
  for (const auto& l : all_labels()) CHECK(parse_label(render(l)) == l);
}

TEST_CASE("class_index is the lexicographic order of canonical strings") {
  std::vector<std::string> names;
  for (const auto& l : all_labels()) names.push_back(render(l));
  std::vector<std::string> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  CHECK(names == sorted);
  CHECK(render(label_at(0)) == "L FORE CARPUS DLPMO");
  std::set<std::size_t> indices;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    CHECK(class_index(label_at(i)) == i);
    indices.insert(class_index(label_at(i)));
  }
  CHECK(indices.size() == kNumClasses);
}

TEST_CASE("collapse_laterality drops only laterality") {
  const ViewLabel l{Laterality::L, Limb::Fore, Region::Fetlock, Projection::DLPMO};
  const ViewLabel r{Laterality::R, Limb::Fore, Region::Fetlock, Projection::DLPMO};
  const NeutralViewLabel n{Limb::Fore, Region::Fetlock, Projection::DLPMO};
  CHECK(collapse_laterality(l) == n);
  CHECK(collapse_laterality(r) == n);
}

TEST_CASE("mirror pairs share a neutral view") {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const std::size_t m = mirror_class(i);
    CHECK(m != i);
    CHECK(mirror_class(m) == i);
    CHECK(collapse_laterality(label_at(m)) == collapse_laterality(label_at(i)));
    CHECK(label_at(m).laterality != label_at(i).laterality);
  }
}

TEST_CASE("DLPMO and DMPLO are distinct wherever both exist") {
  for (const auto& n : all_neutral_labels()) {
    if (n.projection != Projection::DLPMO) continue;
    const NeutralViewLabel other{n.limb, n.region, Projection::DMPLO};
    CHECK(is_valid(other));
    CHECK(render(n) != render(other));
  }
}

TEST_CASE("expand_abbreviation") {
  CHECK(expand_abbreviation(ProtocolRegion::Carpus, Projection::DLPMO) ==
        "dorsal 55° lateral to palmaromedial oblique");
  CHECK(expand_abbreviation(ProtocolRegion::ForeFetlock, Projection::FlexedDP) ==
        "flexed dorsal 125° distal to palmaroproximal oblique");
  CHECK(code_of([] { expand_abbreviation(ProtocolRegion::Tarsus, Projection::CdCr); }) ==
        Errc::UnknownPair);
  for (const auto& n : all_neutral_labels())
    CHECK_FALSE(expand_abbreviation(protocol_region(n.limb, n.region), n.projection).empty());
}
