#include "ervc/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "ervc/augment.hpp"
#include "ervc/rng.hpp"

namespace ervc {

void PhantomConfig::validate() const {
  if (side < 16) fail(Errc::BadConfig, "phantom side must be >= 16");
  for (double p : {marker_prob, redact_prob, asymmetry})
    if (!(p >= 0.0 && p <= 1.0)) fail(Errc::BadConfig, "probabilities and asymmetry must be in [0, 1]");
  if (!(noise >= 0.0 && noise <= 1.0)) fail(Errc::BadConfig, "noise must be in [0, 1]");
}

namespace {

// Object coordinates span [-1, 1]; shapes are evaluated at |u| so every
// primitive off the midline appears as a mirrored pair.
struct Primitive {
  bool capsule = false;
  double cx = 0, cy = 0;
  double rx = 0, ry = 0;  // ellipse radii; capsule radius and half length
  double angle = 0;       // capsule tilt
  double intensity = 0;

  double eval(double u, double v) const {
    double d2;
    if (capsule) {
      const double dx = u - cx, dy = v - cy;
      const double c = std::cos(angle), s = std::sin(angle);
      const double along = std::clamp(dx * s + dy * c, -ry, ry);
      const double px = dx - along * s, py = dy - along * c;
      d2 = (px * px + py * py) / (rx * rx);
    } else {
      const double a = (u - cx) / rx, b = (v - cy) / ry;
      d2 = a * a + b * b;
    }
    return intensity * std::clamp((1.0 - d2) * 4.0, 0.0, 1.0);
  }

  double extent_x() const { return cx + (capsule ? rx + ry * std::abs(std::sin(angle)) : rx); }
  double extent_y() const { return std::abs(cy) + (capsule ? rx + ry * std::abs(std::cos(angle)) : ry); }
};

using Geometry = std::vector<Primitive>;

constexpr double kBackground = 0.06;
constexpr double kExtent = 0.6;

double eval_geometry(const Geometry& g, double u, double v) {
  u = std::abs(u);
  double acc = 0.0;
  for (const auto& p : g) acc += p.eval(u, v);
  return acc;
}

Geometry random_geometry(std::uint64_t seed) {
  SplitMix64 rng(seed);
  Geometry g;
  const std::size_t n = 3 + rng.below(3);
  while (g.size() < n) {
    Primitive p;
    p.capsule = rng.bernoulli(0.5);
    p.cx = g.empty() || rng.bernoulli(0.3) ? 0.0 : rng.uniform(0.12, 0.45);
    p.cy = rng.uniform(-0.45, 0.45);
    p.rx = rng.uniform(0.06, 0.2);
    p.ry = rng.uniform(0.1, 0.35);
    p.angle = p.cx == 0.0 ? 0.0 : rng.uniform(-0.7, 0.7);
    p.intensity = rng.uniform(0.3, 0.8);
    if (p.extent_x() <= kExtent && p.extent_y() <= kExtent) g.push_back(p);
  }
  return g;
}

std::vector<double> thumbnail(const Geometry& g) {
  constexpr int kSide = 24;
  std::vector<double> out;
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x)
      out.push_back(std::min(1.0, eval_geometry(g, (2.0 * x + 1 - kSide) / kSide,
                                                (2.0 * y + 1 - kSide) / kSide)));
  return out;
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// One geometry per neutral class; a candidate too close to an earlier class
// is redrawn.
const std::vector<Geometry>& neutral_geometries() {
  static const std::vector<Geometry> table = [] {
    constexpr double kMinDistance = 0.05;
    std::vector<Geometry> gs;
    std::vector<std::vector<double>> thumbs;
    for (std::size_t n = 0; n < kNumNeutralClasses; ++n) {
      for (std::uint64_t attempt = 0;; ++attempt) {
        Geometry g = random_geometry(splitmix64_mix(0x50A7'0000ULL + n * 1000 + attempt));
        auto t = thumbnail(g);
        const bool distinct = std::all_of(thumbs.begin(), thumbs.end(), [&](const auto& o) {
          return mean_abs_diff(o, t) > kMinDistance;
        });
        if (distinct || attempt == 999) {
          gs.push_back(std::move(g));
          thumbs.push_back(std::move(t));
          break;
        }
      }
    }
    return gs;
  }();
  return table;
}

using Glyph = std::array<const char*, 7>;
constexpr Glyph kGlyphL = {"#....", "#....", "#....", "#....", "#....", "#....", "#####"};
constexpr Glyph kGlyphR = {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"};

RectRegion corner_box(std::size_t side, int corner, std::size_t w, std::size_t h,
                      std::size_t margin) {
  RectRegion r;
  r.width = w;
  r.height = h;
  r.x0 = (corner & 1) ? side - margin - w : margin;
  r.y0 = (corner & 2) ? side - margin - h : margin;
  return r;
}

}  // namespace

PhantomRecord render_phantom(const ViewLabel& label, const PhantomConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!is_valid(label)) fail(Errc::UnknownLabel, "invalid view label");
  const Geometry& geom = neutral_geometries()[neutral_index(label.neutral())];
  SplitMix64 rng(seed);

  double scale = 1.0, tx = 0.0, ty = 0.0, gain = 1.0;
  {
    const double s = rng.uniform(0.92, 1.08), x = rng.uniform(-0.04, 0.04),
                 y = rng.uniform(-0.04, 0.04), g = rng.uniform(0.85, 1.15);
    if (cfg.jitter) scale = s, tx = x, ty = y, gain = g;
  }
  const bool want_marker = rng.bernoulli(cfg.marker_prob);
  const int marker_corner = static_cast<int>(rng.below(4));
  const bool want_redaction = rng.bernoulli(cfg.redact_prob);
  const int redact_corner = (marker_corner + 1 + static_cast<int>(rng.below(3))) % 4;
  const double redact_w = rng.uniform(0.12, 0.22), redact_h = rng.uniform(0.06, 0.12);
  const std::uint64_t noise_seed = rng();

  const bool left = label.laterality == Laterality::L;
  const double widen = left ? 1.0 + cfg.asymmetry : 1.0;
  const std::size_t side = cfg.side;
  const double ds = static_cast<double>(side);

  std::vector<double> field(side * side);
  for (std::size_t py = 0; py < side; ++py)
    for (std::size_t px = 0; px < side; ++px) {
      double u = ((2.0 * px + 1 - ds) / ds - tx) / scale;
      const double v = ((2.0 * py + 1 - ds) / ds - ty) / scale;
      if (u > 0) u /= widen;
      field[py * side + px] = kBackground + gain * eval_geometry(geom, u, v);
    }
  // Right-side views are the mirror image of the left-side rendering.
  if (!left)
    for (std::size_t py = 0; py < side; ++py)
      std::reverse(field.begin() + static_cast<std::ptrdiff_t>(py * side),
                   field.begin() + static_cast<std::ptrdiff_t>((py + 1) * side));
  if (cfg.noise > 0) {
    SplitMix64 nrng(noise_seed);
    for (double& f : field) f += cfg.noise * nrng.normal();
  }

  PhantomRecord out;
  out.image = Image16(side, side);
  for (std::size_t i = 0; i < field.size(); ++i)
    out.image.pixels()[i] = static_cast<std::uint16_t>(
        std::lround(std::clamp(field[i], 0.0, 1.0) * kPhantomFullScale));

  if (want_marker) {
    const std::size_t k = std::max<std::size_t>(1, side / 64);
    const std::size_t margin = std::max<std::size_t>(1, side / 32);
    out.marker_box = corner_box(side, marker_corner, 5 * k, 7 * k, margin);
    const Glyph& glyph = left ? kGlyphL : kGlyphR;
    for (std::size_t gy = 0; gy < 7 * k; ++gy)
      for (std::size_t gx = 0; gx < 5 * k; ++gx)
        if (glyph[gy / k][gx / k] == '#')
          out.image.at(out.marker_box.x0 + gx, out.marker_box.y0 + gy) = kPhantomFullScale;
  }
  if (want_redaction) {
    out.redaction = corner_box(side, redact_corner,
                               std::max<std::size_t>(1, static_cast<std::size_t>(redact_w * ds)),
                               std::max<std::size_t>(1, static_cast<std::size_t>(redact_h * ds)), 0);
    out.image = redact(out.image, out.redaction);
  }

  out.record.raw_view = render(label);
  out.record.label = label;
  out.record.has_marker = want_marker;
  out.record.redacted = want_redaction;
  return out;
}

std::vector<PhantomRecord> generate_corpus(std::size_t n_sets, const PhantomConfig& cfg) {
  cfg.validate();
  if (n_sets == 0) fail(Errc::BadConfig, "need at least one set");
  std::vector<PhantomRecord> out;
  out.reserve(n_sets * kNumClasses);
  for (std::size_t s = 1; s <= n_sets; ++s) {
    char id[16];
    std::snprintf(id, sizeof id, "S%04zu", s);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      PhantomRecord r = render_phantom(label_at(c), cfg, derive_seed(cfg.seed, s, c));
      char file[40];
      std::snprintf(file, sizeof file, "%s/%02zu.pgm", id, c);
      r.record.set_id = id;
      r.record.file = file;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace ervc
