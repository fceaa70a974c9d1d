#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vqforge {

enum class ContentKind { video, sv, tv, stv };

const char* kind_name(ContentKind k);
ContentKind parse_kind(const std::string& name);

struct Rating {
  std::string subject_id;
  std::string content_id;
  ContentKind kind = ContentKind::video;
  double score = 0.0;
};

struct SubjectFlags {
  bool blocked = false;
  double stall_fraction = 0.0;
  bool wore_lenses = true;
};

// Sparse subjects x contents score matrix; at most one score per
// (subject, content, kind).
struct RatingTable {
  std::vector<Rating> rows;
  std::map<std::string, SubjectFlags> flags;
};

struct CleaningConfig {
  double stall_fraction_max = 0.5;
  double kurtosis_lo = 2.0;   // Gaussian-like band, also gates stage 4
  double kurtosis_hi = 4.0;
  double bt500_outlier_fraction = 0.05;
  double bt500_balance = 0.3;
  double modified_z_cut = 3.5;
  double tukey_k = 1.5;
  int min_scores_for_outlier = 5;
};

// beta2 = m4 / m2^2, population moments. Errors: too_few (n < 4),
// zero_variance.
double kurtosis(std::span<const double> xs);

// type-7 quantile (linear interpolation) of an ascending-sorted sample
double quantile_type7(std::span<const double> sorted, double q);

// Single-pass BT.500 Annex-1 style screen: per stimulus mean, sample std
// and kurtosis set 2s or sqrt(20)s thresholds; subjects with more than 5%
// outlying scores that are not one-sided (|P-Q|/(P+Q) < 0.3) are rejected.
// Stimulus = (content_id, kind). Returns sorted rejected subject ids.
std::vector<std::string> bt500_screen(const RatingTable& table,
                                      const CleaningConfig& cfg = {});

struct OutlierResult {
  std::vector<double> kept;
  std::vector<size_t> dropped;  // indices into the input span
};

// modified Z-score: M = 0.6745 (x - median)/MAD, drop |M| > 3.5; MAD = 0
// falls back to mean absolute deviation with the 1.253314 constant; both
// zero keeps everything.
OutlierResult modified_z_filter(std::span<const double> xs,
                                const CleaningConfig& cfg = {});

// Tukey fences Q1 - k IQR, Q3 + k IQR with type-7 quantiles
OutlierResult tukey_filter(std::span<const double> xs,
                           const CleaningConfig& cfg = {});

// kurtosis in [2,4] -> modified Z path, otherwise Tukey; zero-variance
// input keeps everything. Errors: too_few (n < 5).
OutlierResult outlier_filter(std::span<const double> xs,
                             const CleaningConfig& cfg = {});

struct StimulusStats {
  std::string content_id;
  ContentKind kind = ContentKind::video;
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample std
};

struct CleaningReport {
  std::vector<std::string> subjects_dropped_stage1;  // blocked / stalled
  std::vector<std::string> subjects_dropped_stage2;  // lens non-compliance
  std::vector<std::string> subjects_dropped_stage3;  // BT.500
  std::vector<Rating> scores_dropped_stage4;
  std::vector<StimulusStats> final_stats;
};

// The four stages in order; content kinds are screened independently in
// stages 3-4. Every subject in the table must have a flags entry
// (Errc::missing_flags otherwise).
std::pair<RatingTable, CleaningReport> clean(const RatingTable& table,
                                             const CleaningConfig& cfg = {});

// ratings CSV: subject_id,content_id,content_kind,score
// flags CSV:   subject_id,blocked,stall_fraction,wore_lenses
std::vector<Rating> read_ratings_csv(const std::string& path);
void write_ratings_csv(const std::string& path, std::span<const Rating> rows);
std::map<std::string, SubjectFlags> read_flags_csv(const std::string& path);
void write_flags_csv(const std::string& path,
                     const std::map<std::string, SubjectFlags>& flags);
void write_cleaning_report_json(const std::string& path,
                                const CleaningReport& report);

}  // namespace vqforge
