#include "vqforge/patchgen.hpp"

#include <algorithm>
#include <cmath>

#include "vqforge/error.hpp"
#include "vqforge/rng.hpp"

namespace vqforge {

double overlap_fraction(const PatchBox& a, const PatchBox& b) {
  auto overlap = [](long long a0, long long alen, long long b0, long long blen) {
    return std::max(0ll, std::min(a0 + alen, b0 + blen) - std::max(a0, b0));
  };
  long long vol = overlap(a.x0, a.w, b.x0, b.w) * overlap(a.y0, a.h, b.y0, b.h) *
                  overlap(a.t0, a.d, b.t0, b.d);
  return static_cast<double>(vol) / static_cast<double>(b.volume());
}

namespace {

long long scaled(double fraction, long long dim) {
  // half-away-from-zero rounding for bit-stable sizing
  return std::llround(fraction * static_cast<double>(dim));
}

}  // namespace

PatchTriplet gen_patch_triplet(const VideoMeta& meta, uint64_t seed,
                               const PatchgenConfig& cfg) {
  meta.validate();
  long long W = meta.width, H = meta.height, T = meta.frame_count;
  if (W < 5 || H < 5 || T < 5)
    fail(Errc::bad_meta, meta.id + ": need at least 5 px / 5 frames per axis");

  long long pw = scaled(cfg.spatial_fraction, W);
  long long ph = scaled(cfg.spatial_fraction, H);
  long long pd = scaled(cfg.temporal_fraction, T);

  PatchTriplet out;
  out.video_id = meta.id;
  out.sv = {0, 0, 0, pw, ph, T};
  out.tv = {0, 0, 0, W, H, pd};
  out.stv = {0, 0, 0, pw, ph, pd};

  Rng rng(seed);
  // sv and tv origins are single unconditioned draws, so their marginals
  // stay exactly uniform; only the stv origin is rejection-sampled.
  out.sv.x0 = static_cast<long long>(rng.below(W - pw + 1));
  out.sv.y0 = static_cast<long long>(rng.below(H - ph + 1));
  out.tv.t0 = static_cast<long long>(rng.below(T - pd + 1));

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    out.stv.x0 = static_cast<long long>(rng.below(W - pw + 1));
    out.stv.y0 = static_cast<long long>(rng.below(H - ph + 1));
    out.stv.t0 = static_cast<long long>(rng.below(T - pd + 1));
    if (overlap_fraction(out.sv, out.stv) <= cfg.max_overlap &&
        overlap_fraction(out.tv, out.stv) <= cfg.max_overlap)
      return out;
  }
  fail(Errc::infeasible_geometry,
       meta.id + ": no feasible stv placement in " +
           std::to_string(cfg.max_attempts) + " attempts");
}

}  // namespace vqforge
