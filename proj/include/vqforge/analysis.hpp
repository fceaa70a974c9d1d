#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vqforge/cleaning.hpp"

namespace vqforge {

// Spearman rank correlation: Pearson over mid-ranks (ties get the average
// rank). Errors: length_mismatch, degenerate (constant input), too_few.
double srcc(std::span<const double> x, std::span<const double> y);

// Pearson product-moment correlation, same error contract as srcc.
double lcc(std::span<const double> x, std::span<const double> y);

struct MosEntry {
  std::string content_id;
  ContentKind kind = ContentKind::video;
  double mos = 0.0;
  double stddev = 0.0;  // sample std, 0 for a single rating
  int n = 0;
};

using MosTable = std::vector<MosEntry>;

MosTable compute_mos(const RatingTable& table, ContentKind kind);

struct AnalysisConfig {
  int n_splits = 50;
  int histogram_bins = 20;
};

struct ConsistencyResult {
  double mean_srcc = 0.0;
  double std_srcc = 0.0;
  int n_splits = 0;
  uint64_t seed = 0;
};

// Split-half consistency: subjects (sorted by id) are shuffled with seed +
// split_index, halved (odd counts put the extra subject in the first
// half), and the SRCC between the two half-MOS vectors is averaged over
// splits. Contents missing from either half are excluded per split.
ConsistencyResult inter_subject_consistency(const RatingTable& table,
                                            ContentKind kind, int n_splits,
                                            uint64_t seed);

// Median over subjects of the LCC between their scores on golden contents
// and the reference scores; subjects with fewer than 3 golden ratings are
// skipped. Errors: no_golden_data when nobody qualifies.
double intra_subject_golden(const RatingTable& table,
                            const std::map<std::string, double>& golden);

// SRCC between source-video MOS and patch MOS of the given kind, paired
// by content id. Errors: no_pairs (< 3 pairs).
double patch_video_correlation(const MosTable& video_mos,
                               const MosTable& patch_mos, ContentKind kind);

struct HistogramRow {
  double lo = 0.0;
  double hi = 0.0;
  long count = 0;
};

// Equal-width bins over [0,100]; counts sum to the content count.
std::vector<HistogramRow> export_histogram(const MosTable& mos, int bins = 20);

void write_mos_csv(const std::string& path, const MosTable& mos);
MosTable read_mos_csv(const std::string& path);
void write_histogram_csv(const std::string& path,
                         std::span<const HistogramRow> rows);

}  // namespace vqforge
