#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqforge/media_io.hpp"

namespace vqforge {

struct FeatureConfig {
  // spatial Gaussian-derivative scales (short axis); long axis = elongation * scale
  std::vector<double> lm_scales{1.0, 1.4142135623730951, 2.0};
  double lm_elongation = 3.0;
  std::vector<double> temporal_scales{1.0, 2.0, 4.0};
};

inline constexpr int kFeatureCount = 26;

struct FeatureVector26 {
  std::array<double, kFeatureCount> values{};

  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
};

// Fixed column names: lum/color/contrast/face (mean,std), six
// lm_s{1..3}_o{0,90} pairs, then t{1,2,4}_spmean/_spstd.
const std::array<std::string, kFeatureCount>& feature_names();

struct FaceSidecar {
  std::string video_id;
  std::vector<int> per_frame_counts;
};

// JSON: {"video_id": "...", "counts": [...]}
FaceSidecar load_face_sidecar(const std::string& path);

// mean over pixels of the absolute luminance L = R + G + B
double frame_mean_abs_luminance(std::span<const uint8_t> rgb);

// Hasler-Susstrunk: sqrt(var_rg + var_yb) + 0.3*sqrt(mean_rg^2 + mean_yb^2)
double frame_colorfulness(std::span<const uint8_t> rgb);

// population std / mean of the luma plane; 0 when the mean is 0
double frame_rms_contrast(std::span<const double> luma);

// mean |response| of first-derivative-of-Gaussian filters, 3 scales x
// {0deg, 90deg}, over the valid (unpadded) region. Order: s1_o0, s1_o90,
// s2_o0, s2_o90, s3_o0, s3_o90.
std::array<double, 6> lm_responses(std::span<const double> luma, int width,
                                   int height, const FeatureConfig& cfg = {});

// per temporal scale: (spatial mean, spatial std) of the time-averaged
// |temporal derivative| map; order t1_spmean, t1_spstd, t2..., t4...
std::array<double, 6> temporal_band_features(const GrayVolume& vol,
                                             const FeatureConfig& cfg = {});

FeatureVector26 extract_features(const FrameSequence& frames,
                                 const FaceSidecar* faces = nullptr,
                                 const FeatureConfig& cfg = {});

struct FeatureRow {
  std::string id;
  FeatureVector26 features;
};

void write_features_csv(const std::string& path,
                        std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features_csv(const std::string& path);

}  // namespace vqforge
