#include "doctest.h"
#include "ervc/dataset.hpp"
#include "ervc/error.hpp"
#include "ervc/synthgen.hpp"

#include <cmath>
#include <set>

using namespace ervc;

static Image16 mirror(const Image16& in) { return orient(in, 0, true); }

static PhantomConfig clean(std::size_t side) {
  PhantomConfig cfg;
  cfg.side = side;
  cfg.marker_prob = 0.0;
  cfg.redact_prob = 0.0;
  cfg.noise = 0.0;
  return cfg;
}

TEST_CASE("left view is the mirror of the right view without asymmetry") {
  const PhantomConfig cfg = clean(64);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const ViewLabel l = label_at(i);
    if (l.laterality != Laterality::L) continue;
    const ViewLabel r = label_at(mirror_class(i));
    for (std::uint64_t s : {1u, 99u}) {
      const auto a = render_phantom(l, cfg, s).image;
      const auto b = render_phantom(r, cfg, s).image;
      CHECK(a == mirror(b));
    }
  }
}

TEST_CASE("asymmetry breaks the mirror identity") {
  PhantomConfig cfg = clean(64);
  cfg.asymmetry = 0.2;
  const ViewLabel l = parse_label("L FORE CARPUS DP");
  const ViewLabel r = parse_label("R FORE CARPUS DP");
  const auto a = render_phantom(l, cfg, 3).image;
  const auto b = render_phantom(r, cfg, 3).image;
  std::size_t differ = 0;
  const auto mb = mirror(b);
  for (std::size_t k = 0; k < a.pixels().size(); ++k) differ += a.pixels()[k] != mb.pixels()[k];
  CHECK(differ > 0);
}

TEST_CASE("render is deterministic and 12-bit") {
  PhantomConfig cfg;
  cfg.side = 48;
  const ViewLabel v = parse_label("R HIND TARSUS DLPMO");
  const auto a = render_phantom(v, cfg, 11);
  const auto b = render_phantom(v, cfg, 11);
  CHECK(a.image == b.image);
  CHECK(a.record.label == v);
  CHECK(a.image.width() == 48);
  CHECK(a.image.height() == 48);
  CHECK(a.image.max_value() <= kPhantomFullScale);
}

TEST_CASE("neutral views have distinct geometry") {
  const PhantomConfig cfg = clean(32);
  std::set<std::vector<std::uint16_t>> seen;
  for (const auto& n : all_neutral_labels()) {
    const auto img = render_phantom(ViewLabel{Laterality::L, n.limb, n.region, n.projection}, cfg, 5).image;
    seen.insert({img.pixels().begin(), img.pixels().end()});
  }
  CHECK(seen.size() == kNumNeutralClasses);
}

TEST_CASE("marker sits in a corner box clear of the geometry") {
  PhantomConfig cfg = clean(64);
  cfg.marker_prob = 1.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const auto p = render_phantom(label_at(i), cfg, 100 + i);
    REQUIRE(p.record.has_marker);
    const RectRegion& box = p.marker_box;
    CHECK(box.width > 0);
    const bool left_edge = box.x0 + box.width <= 64 / 5, right_edge = box.x0 >= 64 - 64 / 5;
    const bool top_edge = box.y0 + box.height <= 64 / 5, bottom_edge = box.y0 >= 64 - 64 / 5;
    CHECK((left_edge || right_edge));
    CHECK((top_edge || bottom_edge));
    std::set<std::uint16_t> values;
    std::size_t glyph = 0;
    for (std::size_t y = box.y0; y < box.y0 + box.height; ++y)
      for (std::size_t x = box.x0; x < box.x0 + box.width; ++x) {
        const auto v = p.image.at(x, y);
        if (v == kPhantomFullScale) ++glyph;
        else values.insert(v);
      }
    CHECK(glyph > 0);
    CHECK(values.size() == 1);
  }
}

TEST_CASE("redaction zeroes its region") {
  PhantomConfig cfg = clean(64);
  cfg.redact_prob = 1.0;
  const auto p = render_phantom(label_at(7), cfg, 4);
  CHECK(p.record.redacted);
  CHECK(p.redaction.width > 0);
  for (std::size_t y = p.redaction.y0; y < p.redaction.y0 + p.redaction.height; ++y)
    for (std::size_t x = p.redaction.x0; x < p.redaction.x0 + p.redaction.width; ++x)
      CHECK(p.image.at(x, y) == 0);
}

TEST_CASE("generate_corpus") {
  PhantomConfig cfg;
  cfg.side = 32;
  cfg.seed = 9;
  const auto one = generate_corpus(1, cfg);
  REQUIRE(one.size() == 48);
  std::vector<RadiographRecord> records;
  for (const auto& p : one) records.push_back(p.record);
  CHECK(audit_set(records).status == SetStatus::Complete);
  CHECK(one[0].record.set_id == "S0001");
  CHECK(one[7].record.file == "S0001/07.pgm");

  const auto again = generate_corpus(1, cfg);
  for (std::size_t i = 0; i < 48; ++i) {
    CHECK(again[i].image == one[i].image);
    CHECK(again[i].record.has_marker == one[i].record.has_marker);
  }

  const auto big = generate_corpus(100, cfg);
  CHECK(big.size() == 4800);
  std::size_t marked = 0;
  std::map<std::size_t, std::size_t> per_class;
  for (const auto& p : big) {
    marked += p.record.has_marker;
    ++per_class[class_index(p.record.label)];
  }
  const double f = marked / 4800.0, sigma = std::sqrt(0.193 * 0.807 / 4800.0);
  CHECK(std::abs(f - 0.193) <= 3 * sigma);
  CHECK(per_class.size() == 48);
  for (const auto& [c, n] : per_class) CHECK(n == 100);
}

TEST_CASE("config validation") {
  PhantomConfig cfg;
  cfg.side = 8;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.marker_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
