#include "vqforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"
#include "vqforge/rng.hpp"

namespace vqforge {

namespace {

std::vector<double> midranks(std::span<const double> x) {
  size_t n = x.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    fail(Errc::degenerate, "correlation of constant data");
  return sxy / std::sqrt(sxx * syy);
}

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail(Errc::length_mismatch, "vectors of length " + std::to_string(x.size()) +
                                    " and " + std::to_string(y.size()));
  if (x.size() < 3) fail(Errc::too_few, "need at least 3 points");
}

}  // namespace

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  auto rx = midranks(x);
  auto ry = midranks(y);
  return pearson(rx, ry);
}

double lcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  return pearson(x, y);
}

MosTable compute_mos(const RatingTable& table, ContentKind kind) {
  if (table.rows.empty()) fail(Errc::empty_table, "no ratings");
  std::map<std::string, std::vector<double>> scores;
  for (const auto& r : table.rows)
    if (r.kind == kind) scores[r.content_id].push_back(r.score);

  MosTable out;
  for (const auto& [content, vals] : scores) {
    MosEntry e;
    e.content_id = content;
    e.kind = kind;
    e.n = static_cast<int>(vals.size());
    double sum = 0;
    for (double v : vals) sum += v;
    e.mos = sum / vals.size();
    if (vals.size() > 1) {
      double ss = 0;
      for (double v : vals) {
        double d = v - e.mos;
        ss += d * d;
      }
      e.stddev = std::sqrt(ss / (vals.size() - 1));
    }
    out.push_back(std::move(e));
  }
  return out;
}

ConsistencyResult inter_subject_consistency(const RatingTable& table,
                                            ContentKind kind, int n_splits,
                                            uint64_t seed) {
  std::set<std::string> subject_set;
  std::map<std::string, std::map<std::string, double>> by_subject;  // subject -> content -> score
  for (const auto& r : table.rows) {
    if (r.kind != kind) continue;
    subject_set.insert(r.subject_id);
    by_subject[r.subject_id][r.content_id] = r.score;
  }
  if (subject_set.size() < 4)
    fail(Errc::too_few_subjects, "need at least 4 subjects, have " +
                                     std::to_string(subject_set.size()));

  std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  size_t half = (subjects.size() + 1) / 2;  // odd: extra subject to the first half

  std::vector<double> split_srcc;
  for (int split = 0; split < n_splits; ++split) {
    std::vector<size_t> order(subjects.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed + static_cast<uint64_t>(split));
    rng.shuffle(order);

    std::map<std::string, std::pair<double, int>> acc_a, acc_b;
    for (size_t i = 0; i < order.size(); ++i) {
      auto& acc = i < half ? acc_a : acc_b;
      for (const auto& [content, score] : by_subject[subjects[order[i]]]) {
        auto& slot = acc[content];
        slot.first += score;
        slot.second += 1;
      }
    }

    // contents rated in both halves only
    std::vector<double> mos_a, mos_b;
    for (const auto& [content, a] : acc_a) {
      auto it = acc_b.find(content);
      if (it == acc_b.end()) continue;
      mos_a.push_back(a.first / a.second);
      mos_b.push_back(it->second.first / it->second.second);
    }
    split_srcc.push_back(srcc(mos_a, mos_b));
  }

  ConsistencyResult res;
  res.n_splits = n_splits;
  res.seed = seed;
  double sum = 0;
  for (double v : split_srcc) sum += v;
  res.mean_srcc = sum / split_srcc.size();
  double ss = 0;
  for (double v : split_srcc) {
    double d = v - res.mean_srcc;
    ss += d * d;
  }
  res.std_srcc = std::sqrt(ss / split_srcc.size());
  return res;
}

double intra_subject_golden(const RatingTable& table,
                            const std::map<std::string, double>& golden) {
  std::map<std::string, std::vector<std::pair<double, double>>> per_subject;
  for (const auto& r : table.rows) {
    auto it = golden.find(r.content_id);
    if (it == golden.end()) continue;
    per_subject[r.subject_id].emplace_back(r.score, it->second);
  }

  std::vector<double> lccs;
  for (const auto& [subject, pairs] : per_subject) {
    if (pairs.size() < 3) continue;
    std::vector<double> s, ref;
    for (const auto& [a, b] : pairs) {
      s.push_back(a);
      ref.push_back(b);
    }
    lccs.push_back(lcc(s, ref));
  }
  if (lccs.empty())
    fail(Errc::no_golden_data, "no subject has 3 or more golden ratings");

  std::sort(lccs.begin(), lccs.end());
  size_t n = lccs.size();
  return n % 2 ? lccs[n / 2] : 0.5 * (lccs[n / 2 - 1] + lccs[n / 2]);
}

double patch_video_correlation(const MosTable& video_mos,
                               const MosTable& patch_mos, ContentKind kind) {
  std::map<std::string, double> vids;
  for (const auto& e : video_mos)
    if (e.kind == ContentKind::video) vids[e.content_id] = e.mos;

  std::vector<double> v, p;
  for (const auto& e : patch_mos) {
    if (e.kind != kind) continue;
    auto it = vids.find(e.content_id);  // patches share the source video id
    if (it == vids.end()) continue;
    v.push_back(it->second);
    p.push_back(e.mos);
  }
  if (v.size() < 3)
    fail(Errc::no_pairs, "only " + std::to_string(v.size()) +
                             " video/patch MOS pairs for kind " + kind_name(kind));
  return srcc(v, p);
}

std::vector<HistogramRow> export_histogram(const MosTable& mos, int bins) {
  if (mos.empty()) fail(Errc::empty_table, "empty MOS table");
  std::vector<HistogramRow> rows(bins);
  double width = 100.0 / bins;
  for (int b = 0; b < bins; ++b) {
    rows[b].lo = b * width;
    rows[b].hi = (b + 1) * width;
  }
  for (const auto& e : mos) {
    int b = std::min(bins - 1, static_cast<int>(e.mos / width));
    ++rows[b].count;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// io

void write_mos_csv(const std::string& path, const MosTable& mos) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "content_id,content_kind,mos,std,n\n";
  for (const auto& e : mos)
    out << e.content_id << ',' << kind_name(e.kind) << ','
        << format_double(e.mos) << ',' << format_double(e.stddev) << ',' << e.n
        << '\n';
}

MosTable read_mos_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.column("content_id"), c_k = t.column("content_kind"),
      c_m = t.column("mos"), c_s = t.column("std"), c_n = t.column("n");
  if (c_id < 0 || c_m < 0)
    fail(Errc::format_error, path + ": need columns content_id,mos");
  MosTable out;
  for (const auto& row : t.rows) {
    MosEntry e;
    e.content_id = row[c_id];
    e.kind = c_k >= 0 ? parse_kind(row[c_k]) : ContentKind::video;
    e.mos = parse_double(row[c_m], "mos");
    e.stddev = c_s >= 0 ? parse_double(row[c_s], "std") : 0.0;
    e.n = c_n >= 0 ? static_cast<int>(parse_int(row[c_n], "n")) : 1;
    out.push_back(std::move(e));
  }
  return out;
}

void write_histogram_csv(const std::string& path,
                         std::span<const HistogramRow> rows) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "bin_low,bin_high,count\n";
  for (const auto& r : rows)
    out << format_double(r.lo) << ',' << format_double(r.hi) << ',' << r.count
        << '\n';
}

}  // namespace vqforge
