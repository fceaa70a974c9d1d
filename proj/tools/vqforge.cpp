// vqforge: dataset-construction and subjective-study analysis toolkit.
// Subcommands chain into a batch pipeline over CSV/JSONL files:
//   extract-features -> sample -> gen-patches   (dataset construction)
//   simulate -> screen -> clean -> analyze      (study pipeline)

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vqforge/analysis.hpp"
#include "vqforge/cleaning.hpp"
#include "vqforge/config.hpp"
#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"
#include "vqforge/features.hpp"
#include "vqforge/log.hpp"
#include "vqforge/media_io.hpp"
#include "vqforge/patchgen.hpp"
#include "vqforge/rng.hpp"
#include "vqforge/sampler.hpp"
#include "vqforge/screening.hpp"
#include "vqforge/simulate.hpp"

namespace fs = std::filesystem;
using namespace vqforge;

namespace {

// Writers take paths; "-" routes the finished file to stdout so that
// pipelines can stream any single-file output.
class OutputPath {
 public:
  explicit OutputPath(const std::string& arg) : to_stdout_(arg == "-") {
    path_ = to_stdout_ ? (fs::temp_directory_path() /
                          ("vqforge_out_" + std::to_string(::getpid())))
                             .string()
                       : arg;
  }
  const std::string& path() const { return path_; }
  void finish() {
    if (!to_stdout_) return;
    std::ifstream in(path_, std::ios::binary);
    std::cout << in.rdbuf();
    std::cout.flush();
    in.close();
    fs::remove(path_);
  }

 private:
  std::string path_;
  bool to_stdout_;
};

PipelineConfig load_config_opt(const std::string& config_path) {
  if (config_path.empty()) return PipelineConfig{};
  return load_config(config_path);
}

int default_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n ? static_cast<int>(n) : 1;
}

// index-ordered parallel map; results land in input order regardless of
// worker count
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int workers = std::min<int>(jobs, static_cast<int>(n));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// subcommand bodies

int cmd_defaults() {
  PipelineConfig cfg;
  print_config(std::cout, cfg);
  return 0;
}

int cmd_extract_features(const std::vector<std::string>& inputs,
                         const std::string& format_name,
                         const std::string& faces_dir, const std::string& out,
                         const std::string& config_path, int jobs) {
  PipelineConfig cfg = load_config_opt(config_path);
  VideoFormat format = parse_video_format(format_name);

  std::vector<FeatureRow> rows(inputs.size());
  parallel_for(inputs.size(), jobs, [&](size_t i) {
    FrameSequence seq = load_frames(inputs[i], format);
    FaceSidecar sidecar;
    const FaceSidecar* faces = nullptr;
    if (!faces_dir.empty()) {
      fs::path sc = fs::path(faces_dir) / (seq.meta.id + ".json");
      if (fs::exists(sc)) {
        sidecar = load_face_sidecar(sc.string());
        faces = &sidecar;
      }
    }
    rows[i].id = seq.meta.id;
    rows[i].features = extract_features(seq, faces, cfg.features);
    log_debug("extracted " + seq.meta.id);
  });

  OutputPath target(out);
  write_features_csv(target.path(), rows);
  target.finish();
  log_info("wrote features for " + std::to_string(rows.size()) + " videos");
  return 0;
}

int cmd_sample(const std::string& candidates_path, const std::string& reference_path,
               const std::string& groups_path, const std::string& out,
               const std::string& report_path, int target_size,
               const std::string& mode_name, uint64_t seed,
               const std::string& config_path) {
  PipelineConfig cfg = load_config_opt(config_path);

  SelectionProblem problem;
  problem.bins_per_feature = cfg.sampler.bins_per_feature;
  problem.target_size = target_size > 0 ? target_size : cfg.sampler.target_size;
  problem.group_quotas = cfg.sampler.quotas;

  std::map<std::string, std::string> groups;
  if (!groups_path.empty()) {
    CsvTable t = read_csv(groups_path);
    int c_id = t.column("video_id"), c_g = t.column("group");
    if (c_id < 0 || c_g < 0)
      fail(Errc::format_error, groups_path + ": need columns video_id,group");
    for (const auto& row : t.rows) groups[row[c_id]] = row[c_g];
  }

  for (const auto& r : read_features_csv(candidates_path)) {
    CandidateRow c;
    c.id = r.id;
    auto it = groups.find(r.id);
    if (it != groups.end()) c.group = it->second;
    c.values.assign(r.features.values.begin(), r.features.values.end());
    problem.candidates.push_back(std::move(c));
  }
  for (const auto& r : read_features_csv(reference_path))
    problem.reference.emplace_back(r.features.values.begin(),
                                   r.features.values.end());

  SolverMode mode =
      parse_solver_mode(mode_name.empty() ? cfg.sampler.mode : mode_name);
  SelectionResult result = solve(problem, mode, seed, cfg.sampler.swap_cap_factor);

  OutputPath target(out);
  {
    std::ofstream o(target.path());
    if (!o) fail(Errc::io_error, "cannot write " + target.path());
    for (const auto& id : result.selected_ids) o << id << '\n';
  }
  target.finish();

  if (!report_path.empty()) {
    nlohmann::json j{{"objective", result.objective},
                     {"solver", mode == SolverMode::exact ? "exact" : "heuristic"},
                     {"iterations", result.iterations},
                     {"per_feature_deviation", result.per_feature_deviation}};
    std::ofstream o(report_path);
    if (!o) fail(Errc::io_error, "cannot write " + report_path);
    o << j.dump(2) << '\n';
  }
  log_info("selected " + std::to_string(result.selected_ids.size()) +
           " candidates, objective " + format_double(result.objective));
  return 0;
}

int cmd_gen_patches(const std::string& meta_path, uint64_t seed,
                    const std::string& out, const std::string& config_path) {
  PipelineConfig cfg = load_config_opt(config_path);
  auto metas = read_meta_csv(meta_path);

  OutputPath target(out);
  {
    std::ofstream o(target.path());
    if (!o) fail(Errc::io_error, "cannot write " + target.path());
    o << "video_id,patch_kind,x0,y0,w,h,t0,d\n";
    auto emit = [&](const std::string& id, const char* kind, const PatchBox& b) {
      o << id << ',' << kind << ',' << b.x0 << ',' << b.y0 << ',' << b.w << ','
        << b.h << ',' << b.t0 << ',' << b.d << '\n';
    };
    for (const auto& meta : metas) {
      PatchTriplet t =
          gen_patch_triplet(meta, seed ^ fnv1a(meta.id), cfg.patchgen);
      emit(meta.id, "sv", t.sv);
      emit(meta.id, "tv", t.tv);
      emit(meta.id, "stv", t.stv);
    }
  }
  target.finish();
  log_info("generated patch triplets for " + std::to_string(metas.size()) +
           " videos");
  return 0;
}

int cmd_screen(const std::string& events_path, const std::string& golden_path,
               const std::string& out, const std::string& config_path) {
  PipelineConfig cfg = load_config_opt(config_path);
  auto logs = read_events_jsonl(events_path);
  std::map<std::string, double> golden;
  if (!golden_path.empty()) golden = read_golden_csv(golden_path);

  std::vector<SessionVerdict> verdicts;
  for (const auto& log : logs)
    verdicts.push_back(replay_session(log, cfg.screening, golden));
  std::sort(verdicts.begin(), verdicts.end(),
            [](const SessionVerdict& a, const SessionVerdict& b) {
              return a.subject_id < b.subject_id;
            });

  OutputPath target(out);
  write_verdicts_csv(target.path(), verdicts);
  target.finish();

  long rejected = 0;
  for (const auto& v : verdicts)
    if (v.state == VerdictState::rejected) ++rejected;
  log_info("screened " + std::to_string(verdicts.size()) + " subjects, " +
           std::to_string(rejected) + " rejected");
  return 0;
}

int cmd_clean(const std::string& ratings_path, const std::string& flags_path,
              const std::string& verdicts_path, const std::string& out,
              const std::string& report_path, const std::string& config_path) {
  PipelineConfig cfg = load_config_opt(config_path);

  RatingTable table;
  table.rows = read_ratings_csv(ratings_path);
  table.flags = read_flags_csv(flags_path);
  if (!verdicts_path.empty()) {
    for (const auto& [subject, v] : read_verdicts_csv(verdicts_path))
      if (v.state == VerdictState::rejected) table.flags[subject].blocked = true;
  }

  auto [cleaned, report] = clean(table, cfg.cleaning);

  OutputPath target(out);
  write_ratings_csv(target.path(), cleaned.rows);
  target.finish();
  if (!report_path.empty()) write_cleaning_report_json(report_path, report);

  log_info("kept " + std::to_string(cleaned.rows.size()) + " of " +
           std::to_string(table.rows.size()) + " ratings");
  return 0;
}

int cmd_analyze(const std::string& ratings_path, const std::string& golden_path,
                const std::string& out_dir, uint64_t seed, int splits,
                const std::string& config_path) {
  PipelineConfig cfg = load_config_opt(config_path);
  if (splits > 0) cfg.analysis.n_splits = splits;

  RatingTable table;
  table.rows = read_ratings_csv(ratings_path);
  fs::create_directories(out_dir);

  std::vector<ContentKind> kinds;
  for (ContentKind k : {ContentKind::video, ContentKind::sv, ContentKind::tv,
                        ContentKind::stv}) {
    bool present = false;
    for (const auto& r : table.rows)
      if (r.kind == k) {
        present = true;
        break;
      }
    if (present) kinds.push_back(k);
  }
  if (kinds.empty()) fail(Errc::empty_table, "no ratings in " + ratings_path);

  nlohmann::json consistency;
  std::map<ContentKind, MosTable> mos_by_kind;
  for (ContentKind k : kinds) {
    MosTable mos = compute_mos(table, k);
    mos_by_kind[k] = mos;
    write_mos_csv(
        (fs::path(out_dir) / ("mos_" + std::string(kind_name(k)) + ".csv")).string(),
        mos);
    write_histogram_csv(
        (fs::path(out_dir) / ("histogram_" + std::string(kind_name(k)) + ".csv"))
            .string(),
        export_histogram(mos, cfg.analysis.histogram_bins));
    try {
      ConsistencyResult c =
          inter_subject_consistency(table, k, cfg.analysis.n_splits, seed);
      consistency[kind_name(k)] = {{"mean_srcc", c.mean_srcc},
                                   {"std_srcc", c.std_srcc},
                                   {"n_splits", c.n_splits},
                                   {"seed", c.seed}};
    } catch (const Error& e) {
      if (e.code() != Errc::too_few_subjects) throw;
      log_warn(std::string("consistency skipped for ") + kind_name(k) + ": " +
               e.what());
    }
  }
  {
    std::ofstream o(fs::path(out_dir) / "consistency.json");
    o << consistency.dump(2) << '\n';
  }

  if (mos_by_kind.count(ContentKind::video)) {
    nlohmann::json pc;
    for (ContentKind k : {ContentKind::sv, ContentKind::tv, ContentKind::stv}) {
      if (!mos_by_kind.count(k)) continue;
      pc[kind_name(k)] = patch_video_correlation(mos_by_kind[ContentKind::video],
                                                 mos_by_kind[k], k);
    }
    if (!pc.empty()) {
      std::ofstream o(fs::path(out_dir) / "patch_correlation.json");
      o << pc.dump(2) << '\n';
    }
  }

  if (!golden_path.empty()) {
    auto golden = read_golden_csv(golden_path);
    nlohmann::json g{{"median_lcc", intra_subject_golden(table, golden)}};
    std::ofstream o(fs::path(out_dir) / "golden.json");
    o << g.dump(2) << '\n';
  }

  log_info("analysis written to " + out_dir);
  return 0;
}

int cmd_simulate(const std::string& out_dir, uint64_t seed,
                 const std::string& config_path) {
  PipelineConfig cfg = load_config_opt(config_path);
  StudyOutputs study =
      simulate_study(cfg.world, cfg.population, seed, cfg.screening);

  fs::create_directories(out_dir);
  write_events_jsonl((fs::path(out_dir) / "events.jsonl").string(), study.logs);
  write_ratings_csv((fs::path(out_dir) / "ratings.csv").string(),
                    study.table.rows);
  write_flags_csv((fs::path(out_dir) / "flags.csv").string(), study.table.flags);
  write_golden_csv((fs::path(out_dir) / "golden.csv").string(),
                   study.golden_refs);
  write_labels_csv((fs::path(out_dir) / "labels.csv").string(), study.labels);
  write_quality_csv((fs::path(out_dir) / "quality.csv").string(),
                    study.true_quality);
  log_info("simulated " + std::to_string(study.logs.size()) + " sessions into " +
           out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqforge: video-quality study toolkit"};
  app.require_subcommand(1);

  std::string config_path, out = "out", out_dir = "out";
  uint64_t seed = 0;
  int jobs = default_jobs();

  auto* feat = app.add_subcommand("extract-features",
                                  "compute the 26 holistic features per video");
  std::vector<std::string> feat_inputs;
  std::string feat_format = "y4m", feat_faces;
  feat->add_option("inputs", feat_inputs, "video paths")->required();
  feat->add_option("--format", feat_format, "y4m | png_dir | raw_rgb");
  feat->add_option("--faces", feat_faces, "directory of <id>.json face sidecars");
  feat->add_option("--out", out, "output CSV ('-' for stdout)")->required();
  feat->add_option("--config", config_path, "pipeline config file");
  feat->add_option("--jobs", jobs, "worker threads");
  feat->add_option("--seed", seed, "unused; accepted for interface parity");

  auto* sample =
      app.add_subcommand("sample", "histogram-matched subset selection");
  std::string cand_path, ref_path, groups_path, report_path, mode_name;
  int target_size = 0;
  sample->add_option("--candidates", cand_path, "candidate features CSV")->required();
  sample->add_option("--reference", ref_path, "reference features CSV")->required();
  sample->add_option("--groups", groups_path, "optional video_id,group CSV");
  sample->add_option("--out", out, "selected ids, one per line")->required();
  sample->add_option("--report", report_path, "JSON report path");
  sample->add_option("--target-size", target_size, "overrides config target_size");
  sample->add_option("--mode", mode_name, "exact | heuristic");
  sample->add_option("--seed", seed, "solver seed");
  sample->add_option("--config", config_path, "pipeline config file");
  sample->add_option("--jobs", jobs, "worker threads");

  auto* patches = app.add_subcommand("gen-patches", "sv/tv/stv patch triplets");
  std::string meta_path;
  patches->add_option("--meta", meta_path, "video meta CSV")->required();
  patches->add_option("--out", out, "patch CSV ('-' for stdout)")->required();
  patches->add_option("--seed", seed, "global seed");
  patches->add_option("--config", config_path, "pipeline config file");
  patches->add_option("--jobs", jobs, "worker threads");

  auto* screen =
      app.add_subcommand("screen", "replay session logs into verdicts");
  std::string events_path, golden_path;
  screen->add_option("--events", events_path, "session events JSONL")->required();
  screen->add_option("--golden", golden_path, "golden reference CSV");
  screen->add_option("--out", out, "verdicts CSV")->required();
  screen->add_option("--config", config_path, "pipeline config file");
  screen->add_option("--seed", seed, "unused; accepted for interface parity");
  screen->add_option("--jobs", jobs, "worker threads");

  auto* cln = app.add_subcommand("clean", "four-stage rating table cleaning");
  std::string ratings_path, flags_path, verdicts_path;
  cln->add_option("--ratings", ratings_path, "ratings CSV")->required();
  cln->add_option("--flags", flags_path, "subject flags CSV")->required();
  cln->add_option("--verdicts", verdicts_path,
                  "screening verdicts CSV; rejected subjects become blocked");
  cln->add_option("--out", out, "cleaned ratings CSV")->required();
  cln->add_option("--report", report_path, "cleaning report JSON");
  cln->add_option("--config", config_path, "pipeline config file");
  cln->add_option("--seed", seed, "unused; accepted for interface parity");
  cln->add_option("--jobs", jobs, "worker threads");

  auto* analyze =
      app.add_subcommand("analyze", "MOS and consistency statistics");
  int splits = 0;
  analyze->add_option("--ratings", ratings_path, "cleaned ratings CSV")->required();
  analyze->add_option("--golden", golden_path, "golden reference CSV");
  analyze->add_option("--out-dir", out_dir, "output directory")->required();
  analyze->add_option("--splits", splits, "split-half repetitions");
  analyze->add_option("--seed", seed, "split shuffling seed");
  analyze->add_option("--config", config_path, "pipeline config file");
  analyze->add_option("--jobs", jobs, "worker threads");

  auto* sim = app.add_subcommand("simulate", "synthetic subject study");
  sim->add_option("--out-dir", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "study seed");
  sim->add_option("--config", config_path, "pipeline config file");
  sim->add_option("--jobs", jobs, "worker threads");

  app.add_subcommand("defaults", "print the full default pipeline config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("defaults")) return cmd_defaults();
    if (app.got_subcommand(feat))
      return cmd_extract_features(feat_inputs, feat_format, feat_faces, out,
                                  config_path, jobs);
    if (app.got_subcommand(sample))
      return cmd_sample(cand_path, ref_path, groups_path, out, report_path,
                        target_size, mode_name, seed, config_path);
    if (app.got_subcommand(patches))
      return cmd_gen_patches(meta_path, seed, out, config_path);
    if (app.got_subcommand(screen))
      return cmd_screen(events_path, golden_path, out, config_path);
    if (app.got_subcommand(cln))
      return cmd_clean(ratings_path, flags_path, verdicts_path, out, report_path,
                       config_path);
    if (app.got_subcommand(analyze))
      return cmd_analyze(ratings_path, golden_path, out_dir, seed, splits,
                         config_path);
    if (app.got_subcommand(sim)) return cmd_simulate(out_dir, seed, config_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", errc_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: INTERNAL: %s\n", e.what());
    return 1;
  }
  return 2;
}
