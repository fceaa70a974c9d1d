#include "vqforge/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"

namespace vqforge {

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "lum_mean",       "lum_std",        "color_mean",      "color_std",
      "contrast_mean",  "contrast_std",   "face_mean",       "face_std",
      "lm_s1_o0_mean",  "lm_s1_o0_std",   "lm_s1_o90_mean",  "lm_s1_o90_std",
      "lm_s2_o0_mean",  "lm_s2_o0_std",   "lm_s2_o90_mean",  "lm_s2_o90_std",
      "lm_s3_o0_mean",  "lm_s3_o0_std",   "lm_s3_o90_mean",  "lm_s3_o90_std",
      "t1_spmean",      "t1_spstd",       "t2_spmean",       "t2_spstd",
      "t4_spmean",      "t4_spstd"};
  return names;
}

FaceSidecar load_face_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open sidecar " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, path + ": " + e.what());
  }
  FaceSidecar sc;
  try {
    sc.video_id = j.at("video_id").get<std::string>();
    sc.per_frame_counts = j.at("counts").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, path + ": " + e.what());
  }
  for (int c : sc.per_frame_counts)
    if (c < 0) fail(Errc::format_error, path + ": negative face count");
  return sc;
}

// ---------------------------------------------------------------------------
// per-frame scalars

double frame_mean_abs_luminance(std::span<const uint8_t> rgb) {
  size_t n = rgb.size() / 3;
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sum += static_cast<double>(rgb[3 * i]) + rgb[3 * i + 1] + rgb[3 * i + 2];
  }
  return sum / static_cast<double>(n);
}

double frame_colorfulness(std::span<const uint8_t> rgb) {
  size_t n = rgb.size() / 3;
  double sum_rg = 0, sum_rg2 = 0, sum_yb = 0, sum_yb2 = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
    double rgv = r - g;
    double ybv = 0.5 * (r + g) - b;
    sum_rg += rgv;
    sum_rg2 += rgv * rgv;
    sum_yb += ybv;
    sum_yb2 += ybv * ybv;
  }
  double mu_rg = sum_rg / n, mu_yb = sum_yb / n;
  double var_rg = std::max(0.0, sum_rg2 / n - mu_rg * mu_rg);
  double var_yb = std::max(0.0, sum_yb2 / n - mu_yb * mu_yb);
  return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb);
}

double frame_rms_contrast(std::span<const double> luma) {
  size_t n = luma.size();
  double sum = 0;
  for (double v : luma) sum += v;
  double mean = sum / n;
  if (mean == 0.0) return 0.0;
  double ss = 0;
  for (double v : luma) {
    double d = v - mean;
    ss += d * d;
  }
  return std::sqrt(ss / n) / mean;
}

// ---------------------------------------------------------------------------
// Gaussian and Gaussian-derivative taps

namespace {

// plain Gaussian, normalized to unit sum
std::vector<double> gauss_taps(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// first derivative of a Gaussian, exactly antisymmetric, unit L1 norm
std::vector<double> gauss_deriv_taps(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1, 0.0);
  double l1 = 0;
  for (int i = 1; i <= radius; ++i) {
    double v = i * std::exp(-0.5 * i * i / (sigma * sigma));
    k[radius + i] = -v;
    k[radius - i] = v;
    l1 += 2 * v;
  }
  for (double& v : k) v /= l1;
  return k;
}

// horizontal cross-correlation, valid region only: out is (w-2r) x h
void correlate_rows(const double* img, int w, int h,
                    const std::vector<double>& k, std::vector<double>& out) {
  int r = (static_cast<int>(k.size()) - 1) / 2;
  int ow = w - 2 * r;
  out.resize(static_cast<size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* row = img + static_cast<size_t>(y) * w;
    double* orow = out.data() + static_cast<size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < 2 * r + 1; ++i) acc += k[i] * row[x + i];
      orow[x] = acc;
    }
  }
}

// vertical cross-correlation, valid region only: out is w x (h-2r)
void correlate_cols(const double* img, int w, int h,
                    const std::vector<double>& k, std::vector<double>& out) {
  int r = (static_cast<int>(k.size()) - 1) / 2;
  int oh = h - 2 * r;
  out.resize(static_cast<size_t>(w) * oh);
  for (int y = 0; y < oh; ++y) {
    double* orow = out.data() + static_cast<size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = 0; i < 2 * r + 1; ++i)
        acc += k[i] * img[static_cast<size_t>(y + i) * w + x];
      orow[x] = acc;
    }
  }
}

double mean_abs(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::fabs(x);
  return s / static_cast<double>(v.size());
}

// derivative along x (short axis sigma), smoothing along y (3x elongated)
double lm_response_0deg(const double* img, int w, int h, double sigma,
                        double elongation) {
  int r = static_cast<int>(std::ceil(3.0 * elongation * sigma));
  if (w < 2 * r + 1 || h < 2 * r + 1)
    fail(Errc::frame_too_small,
         "frame " + std::to_string(w) + "x" + std::to_string(h) +
             " leaves no valid pixels for filter radius " + std::to_string(r));
  auto deriv = gauss_deriv_taps(sigma, r);
  auto smooth = gauss_taps(elongation * sigma, r);
  std::vector<double> tmp, resp;
  correlate_rows(img, w, h, deriv, tmp);
  correlate_cols(tmp.data(), w - 2 * r, h, smooth, resp);
  return mean_abs(resp);
}

std::vector<double> transpose_plane(const double* img, int w, int h) {
  std::vector<double> t(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      t[static_cast<size_t>(x) * h + y] = img[static_cast<size_t>(y) * w + x];
  return t;
}

double population_std(const std::vector<double>& v, double mean) {
  double ss = 0;
  for (double x : v) {
    double d = x - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::array<double, 6> lm_responses(std::span<const double> luma, int width,
                                   int height, const FeatureConfig& cfg) {
  if (cfg.lm_scales.size() != 3)
    fail(Errc::config_error, "lm_scales must have exactly 3 entries");
  // the 90-degree filter is the 0-degree filter on the transposed plane,
  // which makes the transpose-swap symmetry exact
  std::vector<double> tr = transpose_plane(luma.data(), width, height);
  std::array<double, 6> out{};
  for (size_t s = 0; s < 3; ++s) {
    out[2 * s] = lm_response_0deg(luma.data(), width, height, cfg.lm_scales[s],
                                  cfg.lm_elongation);
    out[2 * s + 1] = lm_response_0deg(tr.data(), height, width, cfg.lm_scales[s],
                                      cfg.lm_elongation);
  }
  return out;
}

std::array<double, 6> temporal_band_features(const GrayVolume& vol,
                                             const FeatureConfig& cfg) {
  if (cfg.temporal_scales.size() != 3)
    fail(Errc::config_error, "temporal_scales must have exactly 3 entries");
  double sigma_max = *std::max_element(cfg.temporal_scales.begin(),
                                       cfg.temporal_scales.end());
  int need = 2 * static_cast<int>(std::ceil(3.0 * sigma_max)) + 1;
  if (vol.frames < need)
    fail(Errc::too_few_frames, "need at least " + std::to_string(need) +
                                   " frames, have " + std::to_string(vol.frames));

  size_t plane = static_cast<size_t>(vol.width) * vol.height;
  std::array<double, 6> out{};
  for (size_t s = 0; s < 3; ++s) {
    double sigma = cfg.temporal_scales[s];
    int r = static_cast<int>(std::ceil(3.0 * sigma));
    auto k = gauss_deriv_taps(sigma, r);
    int valid = vol.frames - 2 * r;

    std::vector<double> avg(plane, 0.0);
    for (size_t p = 0; p < plane; ++p) {
      double acc_abs = 0;
      for (int t = 0; t < valid; ++t) {
        double acc = 0;
        for (int i = 0; i < 2 * r + 1; ++i)
          acc += k[i] * vol.data[static_cast<size_t>(t + i) * plane + p];
        acc_abs += std::fabs(acc);
      }
      avg[p] = acc_abs / valid;
    }
    double sum = 0;
    for (double v : avg) sum += v;
    double mean = sum / static_cast<double>(plane);
    out[2 * s] = mean;
    out[2 * s + 1] = population_std(avg, mean);
  }
  return out;
}

FeatureVector26 extract_features(const FrameSequence& frames,
                                 const FaceSidecar* faces,
                                 const FeatureConfig& cfg) {
  frames.validate();
  if (faces && static_cast<int>(faces->per_frame_counts.size()) !=
                   frames.meta.frame_count)
    fail(Errc::sidecar_mismatch,
         frames.meta.id + ": sidecar has " +
             std::to_string(faces->per_frame_counts.size()) + " counts for " +
             std::to_string(frames.meta.frame_count) + " frames");

  GrayVolume vol = to_gray(frames);
  size_t plane = static_cast<size_t>(vol.width) * vol.height;
  int T = frames.meta.frame_count;

  // 10 per-frame scalars: L, C, contrast, faces, six LM responses
  std::vector<std::array<double, 10>> per_frame(T);
  for (int t = 0; t < T; ++t) {
    auto& f = per_frame[t];
    f[0] = frame_mean_abs_luminance(frames.frames[t]);
    f[1] = frame_colorfulness(frames.frames[t]);
    f[2] = frame_rms_contrast({vol.plane(t), plane});
    f[3] = faces ? static_cast<double>(faces->per_frame_counts[t]) : 0.0;
    auto lm = lm_responses({vol.plane(t), plane}, vol.width, vol.height, cfg);
    for (int k = 0; k < 6; ++k) f[4 + k] = lm[k];
  }

  FeatureVector26 fv;
  for (int k = 0; k < 10; ++k) {
    double sum = 0;
    for (int t = 0; t < T; ++t) sum += per_frame[t][k];
    double mean = sum / T;
    double ss = 0;
    for (int t = 0; t < T; ++t) {
      double d = per_frame[t][k] - mean;
      ss += d * d;
    }
    fv[2 * k] = mean;
    fv[2 * k + 1] = std::sqrt(ss / T);  // population std over frames
  }

  auto temporal = temporal_band_features(vol, cfg);
  for (int k = 0; k < 6; ++k) fv[20 + k] = temporal[k];
  return fv;
}

// ---------------------------------------------------------------------------
// CSV

void write_features_csv(const std::string& path,
                        std::span<const FeatureRow> rows) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "video_id";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << r.id;
    for (double v : r.features.values) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<FeatureRow> read_features_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.column("video_id");
  if (c_id < 0) fail(Errc::format_error, path + ": missing video_id column");
  std::array<int, kFeatureCount> cols{};
  for (int i = 0; i < kFeatureCount; ++i) {
    cols[i] = t.column(feature_names()[i]);
    if (cols[i] < 0)
      fail(Errc::format_error, path + ": missing column " + feature_names()[i]);
  }
  std::vector<FeatureRow> out;
  for (const auto& row : t.rows) {
    FeatureRow r;
    r.id = row[c_id];
    for (int i = 0; i < kFeatureCount; ++i)
      r.features[i] = parse_double(row[cols[i]], feature_names()[i]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vqforge
