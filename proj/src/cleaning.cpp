#include "vqforge/cleaning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"

namespace vqforge {

const char* kind_name(ContentKind k) {
  switch (k) {
    case ContentKind::video: return "video";
    case ContentKind::sv: return "sv";
    case ContentKind::tv: return "tv";
    case ContentKind::stv: return "stv";
  }
  return "video";
}

ContentKind parse_kind(const std::string& name) {
  if (name == "video") return ContentKind::video;
  if (name == "sv") return ContentKind::sv;
  if (name == "tv") return ContentKind::tv;
  if (name == "stv") return ContentKind::stv;
  fail(Errc::format_error, "unknown content kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// moments and quantiles

double kurtosis(std::span<const double> xs) {
  size_t n = xs.size();
  if (n < 4) fail(Errc::too_few, "kurtosis needs at least 4 values");
  double sum = 0;
  for (double v : xs) sum += v;
  double mean = sum / n;
  double m2 = 0, m4 = 0;
  for (double v : xs) {
    double d = v - mean;
    double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  if (m2 == 0.0) fail(Errc::zero_variance, "kurtosis of constant data");
  return m4 / (m2 * m2);
}

double quantile_type7(std::span<const double> sorted, double q) {
  size_t n = sorted.size();
  double h = static_cast<double>(n - 1) * q;
  size_t lo = static_cast<size_t>(std::floor(h));
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

double median_sorted(std::span<const double> sorted) {
  size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

// ---------------------------------------------------------------------------
// per-stimulus outlier filters

OutlierResult modified_z_filter(std::span<const double> xs,
                                const CleaningConfig& cfg) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  double med = median_sorted(sorted);

  std::vector<double> absdev(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) absdev[i] = std::fabs(xs[i] - med);
  std::vector<double> devsorted = absdev;
  std::sort(devsorted.begin(), devsorted.end());
  double mad = median_sorted(devsorted);

  double scale;
  if (mad > 0.0) {
    scale = mad / 0.6745;
  } else {
    double mean_ad = 0;
    for (double d : absdev) mean_ad += d;
    mean_ad /= absdev.size();
    if (mean_ad == 0.0) return {std::vector<double>(xs.begin(), xs.end()), {}};
    scale = 1.253314 * mean_ad;
  }

  OutlierResult r;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (std::fabs(xs[i] - med) / scale > cfg.modified_z_cut)
      r.dropped.push_back(i);
    else
      r.kept.push_back(xs[i]);
  }
  return r;
}

OutlierResult tukey_filter(std::span<const double> xs,
                           const CleaningConfig& cfg) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  double q1 = quantile_type7(sorted, 0.25);
  double q3 = quantile_type7(sorted, 0.75);
  double iqr = q3 - q1;
  double lo = q1 - cfg.tukey_k * iqr, hi = q3 + cfg.tukey_k * iqr;

  OutlierResult r;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < lo || xs[i] > hi)
      r.dropped.push_back(i);
    else
      r.kept.push_back(xs[i]);
  }
  return r;
}

OutlierResult outlier_filter(std::span<const double> xs,
                             const CleaningConfig& cfg) {
  if (xs.size() < static_cast<size_t>(cfg.min_scores_for_outlier))
    fail(Errc::too_few, "outlier filter needs at least " +
                            std::to_string(cfg.min_scores_for_outlier) +
                            " scores");
  double beta2;
  try {
    beta2 = kurtosis(xs);
  } catch (const Error& e) {
    if (e.code() == Errc::zero_variance)
      return {std::vector<double>(xs.begin(), xs.end()), {}};
    throw;
  }
  if (beta2 >= cfg.kurtosis_lo && beta2 <= cfg.kurtosis_hi)
    return modified_z_filter(xs, cfg);
  return tukey_filter(xs, cfg);
}

// ---------------------------------------------------------------------------
// BT.500 subject screen

namespace {

struct StimKey {
  std::string content;
  ContentKind kind;
  bool operator<(const StimKey& o) const {
    return content != o.content ? content < o.content : kind < o.kind;
  }
};

}  // namespace

std::vector<std::string> bt500_screen(const RatingTable& table,
                                      const CleaningConfig& cfg) {
  if (table.rows.empty()) fail(Errc::empty_table, "no ratings");

  std::map<StimKey, std::vector<double>> by_stim;
  for (const auto& r : table.rows)
    by_stim[{r.content_id, r.kind}].push_back(r.score);

  // per-stimulus thresholds; zero-variance stimuli contribute no counts
  struct Bands {
    double lo, hi;
    bool active;
  };
  std::map<StimKey, Bands> bands;
  for (const auto& [key, scores] : by_stim) {
    size_t n = scores.size();
    if (n < 2) {  // a lone score has no spread to screen against
      bands[key] = {0, 0, false};
      continue;
    }
    double sum = 0;
    for (double v : scores) sum += v;
    double mean = sum / n;
    double ss = 0, m2 = 0, m4 = 0;
    for (double v : scores) {
      double d = v - mean;
      ss += d * d;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    double sd = std::sqrt(ss / (n - 1));  // sample std
    if (sd == 0.0) {
      bands[key] = {0, 0, false};
      continue;
    }
    m2 /= n;
    m4 /= n;
    double beta2 = m4 / (m2 * m2);
    double k = (beta2 >= cfg.kurtosis_lo && beta2 <= cfg.kurtosis_hi)
                   ? 2.0
                   : std::sqrt(20.0);
    bands[key] = {mean - k * sd, mean + k * sd, true};
  }

  struct SubjectCounts {
    long p = 0, q = 0, rated = 0;
  };
  std::map<std::string, SubjectCounts> counts;
  for (const auto& r : table.rows) {
    auto& c = counts[r.subject_id];
    const Bands& b = bands[{r.content_id, r.kind}];
    if (!b.active) continue;
    ++c.rated;
    if (r.score > b.hi) ++c.p;
    if (r.score < b.lo) ++c.q;
  }

  std::vector<std::string> rejectedIds;
  for (const auto& [subject, c] : counts) {
    if (c.rated == 0 || c.p + c.q == 0) continue;
    double frac = static_cast<double>(c.p + c.q) / c.rated;
    double balance = std::fabs(static_cast<double>(c.p - c.q)) / (c.p + c.q);
    if (frac > cfg.bt500_outlier_fraction && balance < cfg.bt500_balance)
      rejectedIds.push_back(subject);
  }
  std::sort(rejectedIds.begin(), rejectedIds.end());
  return rejectedIds;
}

// ---------------------------------------------------------------------------
// four-stage cleaning pipeline

std::pair<RatingTable, CleaningReport> clean(const RatingTable& table,
                                             const CleaningConfig& cfg) {
  CleaningReport report;

  std::set<std::string> subjects;
  for (const auto& r : table.rows) subjects.insert(r.subject_id);
  for (const auto& s : subjects)
    if (!table.flags.count(s))
      fail(Errc::missing_flags, "no flags for subject " + s);

  // (1) blocked subjects and sessions where most playbacks stalled
  std::set<std::string> dropped;
  for (const auto& s : subjects) {
    const auto& f = table.flags.at(s);
    if (f.blocked || f.stall_fraction > cfg.stall_fraction_max) {
      dropped.insert(s);
      report.subjects_dropped_stage1.push_back(s);
    }
  }

  // (2) uncorrected vision
  for (const auto& s : subjects) {
    if (dropped.count(s)) continue;
    if (!table.flags.at(s).wore_lenses) {
      dropped.insert(s);
      report.subjects_dropped_stage2.push_back(s);
    }
  }

  RatingTable work;
  for (const auto& r : table.rows)
    if (!dropped.count(r.subject_id)) work.rows.push_back(r);

  // (3) BT.500 screen, each content kind independently
  if (!work.rows.empty()) {
    std::set<std::string> stage3;
    for (ContentKind kind : {ContentKind::video, ContentKind::sv,
                             ContentKind::tv, ContentKind::stv}) {
      RatingTable sub;
      for (const auto& r : work.rows)
        if (r.kind == kind) sub.rows.push_back(r);
      if (sub.rows.empty()) continue;
      for (const auto& s : bt500_screen(sub, cfg)) stage3.insert(s);
    }
    for (const auto& s : stage3) {
      dropped.insert(s);
      report.subjects_dropped_stage3.push_back(s);
    }
    std::erase_if(work.rows,
                  [&](const Rating& r) { return dropped.count(r.subject_id) > 0; });
  }

  // (4) per-stimulus outlier scores; stimuli below the minimum sample size
  // pass through unfiltered
  std::map<StimKey, std::vector<size_t>> stim_rows;
  for (size_t i = 0; i < work.rows.size(); ++i)
    stim_rows[{work.rows[i].content_id, work.rows[i].kind}].push_back(i);

  std::set<size_t> drop_rows;
  for (const auto& [key, rows] : stim_rows) {
    if (rows.size() < static_cast<size_t>(cfg.min_scores_for_outlier)) continue;
    std::vector<double> scores;
    scores.reserve(rows.size());
    for (size_t i : rows) scores.push_back(work.rows[i].score);
    OutlierResult res = outlier_filter(scores, cfg);
    for (size_t di : res.dropped) {
      drop_rows.insert(rows[di]);
      report.scores_dropped_stage4.push_back(work.rows[rows[di]]);
    }
  }

  RatingTable cleaned;
  for (size_t i = 0; i < work.rows.size(); ++i)
    if (!drop_rows.count(i)) cleaned.rows.push_back(work.rows[i]);
  for (const auto& [s, f] : table.flags)
    if (!dropped.count(s)) cleaned.flags[s] = f;

  std::map<StimKey, std::vector<double>> final_scores;
  for (const auto& r : cleaned.rows)
    final_scores[{r.content_id, r.kind}].push_back(r.score);
  for (const auto& [key, scores] : final_scores) {
    StimulusStats st;
    st.content_id = key.content;
    st.kind = key.kind;
    st.n = static_cast<int>(scores.size());
    double sum = 0;
    for (double v : scores) sum += v;
    st.mean = sum / scores.size();
    if (scores.size() > 1) {
      double ss = 0;
      for (double v : scores) {
        double d = v - st.mean;
        ss += d * d;
      }
      st.stddev = std::sqrt(ss / (scores.size() - 1));
    }
    report.final_stats.push_back(std::move(st));
  }

  return {std::move(cleaned), std::move(report)};
}

// ---------------------------------------------------------------------------
// CSV / JSON io

std::vector<Rating> read_ratings_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_s = t.column("subject_id"), c_c = t.column("content_id"),
      c_k = t.column("content_kind"), c_v = t.column("score");
  if (c_s < 0 || c_c < 0 || c_k < 0 || c_v < 0)
    fail(Errc::format_error,
         path + ": need columns subject_id,content_id,content_kind,score");
  std::vector<Rating> out;
  for (const auto& row : t.rows) {
    Rating r;
    r.subject_id = row[c_s];
    r.content_id = row[c_c];
    r.kind = parse_kind(row[c_k]);
    r.score = parse_double(row[c_v], "score");
    if (r.score < 0 || r.score > 100)
      fail(Errc::format_error, path + ": score outside [0,100]");
    out.push_back(std::move(r));
  }
  return out;
}

void write_ratings_csv(const std::string& path, std::span<const Rating> rows) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "subject_id,content_id,content_kind,score\n";
  for (const auto& r : rows)
    out << r.subject_id << ',' << r.content_id << ',' << kind_name(r.kind)
        << ',' << format_double(r.score) << '\n';
}

std::map<std::string, SubjectFlags> read_flags_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_s = t.column("subject_id"), c_b = t.column("blocked"),
      c_f = t.column("stall_fraction"), c_l = t.column("wore_lenses");
  if (c_s < 0 || c_b < 0 || c_f < 0 || c_l < 0)
    fail(Errc::format_error,
         path + ": need columns subject_id,blocked,stall_fraction,wore_lenses");
  std::map<std::string, SubjectFlags> out;
  for (const auto& row : t.rows) {
    SubjectFlags f;
    f.blocked = parse_int(row[c_b], "blocked") != 0;
    f.stall_fraction = parse_double(row[c_f], "stall_fraction");
    f.wore_lenses = parse_int(row[c_l], "wore_lenses") != 0;
    out[row[c_s]] = f;
  }
  return out;
}

void write_flags_csv(const std::string& path,
                     const std::map<std::string, SubjectFlags>& flags) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "subject_id,blocked,stall_fraction,wore_lenses\n";
  for (const auto& [s, f] : flags)
    out << s << ',' << (f.blocked ? 1 : 0) << ',' << format_double(f.stall_fraction)
        << ',' << (f.wore_lenses ? 1 : 0) << '\n';
}

void write_cleaning_report_json(const std::string& path,
                                const CleaningReport& report) {
  nlohmann::json j;
  j["subjects_dropped_stage1"] = report.subjects_dropped_stage1;
  j["subjects_dropped_stage2"] = report.subjects_dropped_stage2;
  j["subjects_dropped_stage3"] = report.subjects_dropped_stage3;
  auto& s4 = j["scores_dropped_stage4"] = nlohmann::json::array();
  for (const auto& r : report.scores_dropped_stage4)
    s4.push_back({{"subject_id", r.subject_id},
                  {"content_id", r.content_id},
                  {"content_kind", kind_name(r.kind)},
                  {"score", r.score}});
  auto& fs = j["final_stats"] = nlohmann::json::array();
  for (const auto& st : report.final_stats)
    fs.push_back({{"content_id", st.content_id},
                  {"content_kind", kind_name(st.kind)},
                  {"n", st.n},
                  {"mean", st.mean},
                  {"std", st.stddev}});
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace vqforge
