#pragma once

// Procedural 48-class phantom corpus. Each neutral view has its own seeded,
// left-right symmetric arrangement of ellipses and capsules; right-side images
// are the mirror of the left-side rendering, and `asymmetry` widens one half of
// the left-side object so laterality is learnable but subtle.

#include <cstdint>
#include <vector>

#include "ervc/dataset.hpp"
#include "ervc/image.hpp"

namespace ervc {

struct PhantomConfig {
  std::size_t side = 250;
  double marker_prob = 0.193;
  double redact_prob = 0.262;
  double asymmetry = 0.0;  // in [0, 1]
  double noise = 0.02;     // Gaussian sigma, fraction of full scale
  bool jitter = true;      // per-image scale/shift/gain variation
  std::uint64_t seed = 0;

  /// Throws BadConfig.
  void validate() const;
};

inline constexpr std::uint16_t kPhantomFullScale = 4095;  // 12-bit detector range

struct PhantomRecord {
  Image16 image;
  RadiographRecord record;
  RectRegion marker_box;  // empty when no marker
  RectRegion redaction;   // empty when not redacted
};

PhantomRecord render_phantom(const ViewLabel& label, const PhantomConfig& cfg, std::uint64_t seed);

/// 48 * n_sets records; set ids "S0001".., files "<set>/<class index>.pgm".
/// Record seeds are derive_seed(cfg.seed, set number, class index).
std::vector<PhantomRecord> generate_corpus(std::size_t n_sets, const PhantomConfig& cfg);

}  // namespace ervc
