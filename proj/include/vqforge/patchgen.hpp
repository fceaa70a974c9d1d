#pragma once

#include <cstdint>
#include <string>

#include "vqforge/media_io.hpp"

namespace vqforge {

struct PatchgenConfig {
  double spatial_fraction = 0.4;
  double temporal_fraction = 0.4;
  double max_overlap = 0.25;  // vs the stv-patch volume
  int max_attempts = 1000;
};

struct PatchBox {
  long long x0 = 0, y0 = 0, t0 = 0;
  long long w = 0, h = 0, d = 0;

  long long volume() const { return w * h * d; }
};

struct PatchTriplet {
  std::string video_id;
  PatchBox sv, tv, stv;
};

// vol(a intersect b) / vol(b) -- normalized by the SECOND box
double overlap_fraction(const PatchBox& a, const PatchBox& b);

// sv: round(f*W) x round(f*H), full duration; tv: full frame, round(f*T)
// frames; stv: scaled on all three axes. sv and tv origins are drawn
// uniformly once; the stv origin is rejection-sampled until both overlap
// constraints hold, which keeps the sv/tv origin marginals exactly uniform.
PatchTriplet gen_patch_triplet(const VideoMeta& meta, uint64_t seed,
                               const PatchgenConfig& cfg = {});

}  // namespace vqforge
