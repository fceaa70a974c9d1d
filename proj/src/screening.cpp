#include "vqforge/screening.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"

namespace vqforge {

using json = nlohmann::json;

const char* reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::none: return "none";
    case RejectReason::env_fail: return "env_fail";
    case RejectReason::quiz_fail: return "quiz_fail";
    case RejectReason::training_delay: return "training_delay";
    case RejectReason::negative_delay: return "negative_delay";
    case RejectReason::mid_stall: return "mid_stall";
    case RejectReason::flat_scores: return "flat_scores";
    case RejectReason::slider_nudge: return "slider_nudge";
    case RejectReason::repeat_inconsistent: return "repeat_inconsistent";
    case RejectReason::golden_inconsistent: return "golden_inconsistent";
    case RejectReason::incomplete: return "incomplete";
  }
  return "unknown";
}

RejectReason parse_reason(const std::string& name) {
  static const std::pair<const char*, RejectReason> table[] = {
      {"none", RejectReason::none},
      {"env_fail", RejectReason::env_fail},
      {"quiz_fail", RejectReason::quiz_fail},
      {"training_delay", RejectReason::training_delay},
      {"negative_delay", RejectReason::negative_delay},
      {"mid_stall", RejectReason::mid_stall},
      {"flat_scores", RejectReason::flat_scores},
      {"slider_nudge", RejectReason::slider_nudge},
      {"repeat_inconsistent", RejectReason::repeat_inconsistent},
      {"golden_inconsistent", RejectReason::golden_inconsistent},
      {"incomplete", RejectReason::incomplete},
  };
  for (const auto& [n, r] : table)
    if (name == n) return r;
  fail(Errc::format_error, "unknown reject reason '" + name + "'");
}

namespace {

SessionState rejected(SessionState s, RejectReason why) {
  s.rejected = true;
  s.reason = why;
  return s;
}

bool env_ok(const EnvReport& env, const ScreeningConfig& cfg) {
  int short_side = std::min(env.window_w, env.window_h);
  int need = env.device == DeviceKind::mobile ? cfg.min_short_side_mobile
                                              : cfg.min_short_side_other;
  if (short_side < need) return false;
  if (env.zoom != cfg.required_zoom) return false;
  return std::find(cfg.browser_allowlist.begin(), cfg.browser_allowlist.end(),
                   env.browser) != cfg.browser_allowlist.end();
}

double population_std(const std::vector<RatingEvent>& ratings) {
  double sum = 0;
  for (const auto& r : ratings) sum += r.score;
  double mean = sum / ratings.size();
  double ss = 0;
  for (const auto& r : ratings) {
    double d = r.score - mean;
    ss += d * d;
  }
  return std::sqrt(ss / ratings.size());
}

// After the (n_test/2)-th test rating: connection stability, then flat
// scores, then slider nudging.
SessionState mid_task_check(SessionState s, const ScreeningConfig& cfg) {
  s.mid_checked = true;
  if (s.test_playbacks > 0) {
    double stalled = static_cast<double>(s.test_stalls) / s.test_playbacks;
    if (stalled > cfg.mid_stall_fraction)
      return rejected(std::move(s), RejectReason::mid_stall);
  }
  if (population_std(s.test_ratings) < cfg.flat_score_min_std)
    return rejected(std::move(s), RejectReason::flat_scores);
  double max_travel = 0;
  for (const auto& r : s.test_ratings)
    max_travel = std::max(max_travel, r.slider_travel);
  if (max_travel < cfg.min_slider_travel)
    return rejected(std::move(s), RejectReason::slider_nudge);
  return s;
}

}  // namespace

SessionState apply_event(SessionState s, const SessionEvent& event,
                         const ScreeningConfig& cfg) {
  if (s.rejected) return s;  // absorbing

  using Phase = SessionState::Phase;
  return std::visit(
      [&](const auto& e) -> SessionState {
        using E = std::decay_t<decltype(e)>;

        if constexpr (std::is_same_v<E, EnvReport>) {
          if (s.phase != Phase::instructions)
            fail(Errc::phase_order, "env report outside instructions");
          if (!env_ok(e, cfg)) return rejected(std::move(s), RejectReason::env_fail);
          return s;
        } else if constexpr (std::is_same_v<E, VideoLoad>) {
          if (s.phase != Phase::instructions)
            fail(Errc::phase_order, "video load outside instructions");
          s.total_load += e.load_time;
          if (s.total_load > cfg.max_total_load)
            return rejected(std::move(s), RejectReason::env_fail);
          return s;
        } else if constexpr (std::is_same_v<E, QuizResult>) {
          if (s.phase != Phase::instructions)
            fail(Errc::phase_order, "quiz outside instructions");
          if (e.correct < cfg.quiz_pass)
            return rejected(std::move(s), RejectReason::quiz_fail);
          s.phase = Phase::training;
          return s;
        } else if constexpr (std::is_same_v<E, Playback>) {
          if (s.phase != Phase::training && s.phase != Phase::test)
            fail(Errc::phase_order, "playback outside training/test");
          if (e.delay < 0.0)
            return rejected(std::move(s), RejectReason::negative_delay);
          if (s.phase == Phase::training) {
            s.training_delay_total += e.delay;
            if (e.delay > cfg.per_video_delay_max ||
                s.training_delay_total > cfg.training_delay_total_max)
              return rejected(std::move(s), RejectReason::training_delay);
          } else {
            ++s.test_playbacks;
            // test-phase delays feed only the stall fraction
            if (e.delay > cfg.per_video_delay_max) ++s.test_stalls;
          }
          return s;
        } else if constexpr (std::is_same_v<E, RatingEvent>) {
          if (e.role == RatingRole::training) {
            if (s.phase != Phase::training)
              fail(Errc::phase_order, "training rating outside training");
            if (++s.training_ratings == cfg.n_training) s.phase = Phase::test;
            return s;
          }
          if (s.phase != Phase::test)
            fail(Errc::phase_order, "test rating outside test phase");
          s.test_ratings.push_back(e);
          if (!s.mid_checked &&
              static_cast<int>(s.test_ratings.size()) == cfg.n_test / 2)
            return mid_task_check(std::move(s), cfg);
          return s;
        } else {
          static_assert(std::is_same_v<E, Survey>);
          if (s.phase != Phase::test)
            fail(Errc::phase_order, "survey before test phase");
          s.surveyed = true;
          s.survey = e;
          s.phase = Phase::survey;
          return s;
        }
      },
      event);
}

SessionVerdict finalize_session(const SessionState& state,
                                const ScreeningConfig& cfg,
                                const std::map<std::string, double>& golden_scores,
                                const std::string& subject_id) {
  SessionVerdict v;
  v.subject_id = subject_id;
  v.ratings = state.test_ratings;

  if (state.rejected) {
    v.state = VerdictState::rejected;
    v.reason = state.reason;
    return v;
  }
  if (!state.surveyed ||
      static_cast<int>(state.test_ratings.size()) < cfg.n_test) {
    v.state = VerdictState::rejected;
    v.reason = RejectReason::incomplete;
    return v;
  }

  // repeat self-consistency: mean |first - second| over the repeated pairs
  std::map<std::string, std::vector<double>> repeats;
  std::vector<std::pair<std::string, double>> goldens;
  for (const auto& r : state.test_ratings) {
    if (r.role == RatingRole::repeat) repeats[r.video_id].push_back(r.score);
    if (r.role == RatingRole::golden) goldens.emplace_back(r.video_id, r.score);
  }
  bool pairs_ok = static_cast<int>(repeats.size()) == cfg.n_repeat;
  for (const auto& [id, scores] : repeats)
    if (scores.size() != 2) pairs_ok = false;
  if (!pairs_ok || static_cast<int>(goldens.size()) != cfg.n_golden) {
    v.state = VerdictState::rejected;
    v.reason = RejectReason::incomplete;
    return v;
  }

  double repeat_sum = 0;
  for (const auto& [id, scores] : repeats)
    repeat_sum += std::fabs(scores[0] - scores[1]);
  if (repeat_sum / repeats.size() > cfg.repeat_mad_max) {
    v.state = VerdictState::rejected;
    v.reason = RejectReason::repeat_inconsistent;
    return v;
  }

  double golden_sum = 0;
  for (const auto& [id, score] : goldens) {
    auto it = golden_scores.find(id);
    if (it == golden_scores.end())
      fail(Errc::missing_golden, "no reference score for golden video " + id);
    golden_sum += std::fabs(score - it->second);
  }
  if (golden_sum / goldens.size() > cfg.golden_mad_max) {
    v.state = VerdictState::rejected;
    v.reason = RejectReason::golden_inconsistent;
    return v;
  }

  v.state = VerdictState::accepted;
  v.reason = RejectReason::none;
  return v;
}

SessionVerdict replay_session(const SubjectLog& log, const ScreeningConfig& cfg,
                              const std::map<std::string, double>& golden_scores) {
  SessionState state;
  for (const auto& e : log.events) state = apply_event(std::move(state), e, cfg);
  return finalize_session(state, cfg, golden_scores, log.subject_id);
}

// ---------------------------------------------------------------------------
// JSONL serialization

namespace {

const char* device_name(DeviceKind d) {
  switch (d) {
    case DeviceKind::mobile: return "mobile";
    case DeviceKind::desktop: return "desktop";
    case DeviceKind::laptop: return "laptop";
  }
  return "desktop";
}

DeviceKind parse_device(const std::string& s) {
  if (s == "mobile") return DeviceKind::mobile;
  if (s == "desktop") return DeviceKind::desktop;
  if (s == "laptop") return DeviceKind::laptop;
  fail(Errc::format_error, "unknown device '" + s + "'");
}

const char* role_name(RatingRole r) {
  switch (r) {
    case RatingRole::training: return "training";
    case RatingRole::test: return "test";
    case RatingRole::repeat: return "repeat";
    case RatingRole::golden: return "golden";
  }
  return "test";
}

RatingRole parse_role(const std::string& s) {
  if (s == "training") return RatingRole::training;
  if (s == "test") return RatingRole::test;
  if (s == "repeat") return RatingRole::repeat;
  if (s == "golden") return RatingRole::golden;
  fail(Errc::format_error, "unknown rating role '" + s + "'");
}

SessionEvent event_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "env_report") {
    EnvReport e;
    e.window_w = j.at("window_w").get<int>();
    e.window_h = j.at("window_h").get<int>();
    e.zoom = j.at("zoom").get<int>();
    e.browser = j.at("browser").get<std::string>();
    e.device = parse_device(j.at("device").get<std::string>());
    return e;
  }
  if (type == "video_load")
    return VideoLoad{j.at("video_id").get<std::string>(),
                     j.at("load_time").get<double>()};
  if (type == "playback")
    return Playback{j.at("video_id").get<std::string>(),
                    j.at("delay").get<double>()};
  if (type == "rating") {
    RatingEvent e;
    e.video_id = j.at("video_id").get<std::string>();
    e.role = parse_role(j.at("role").get<std::string>());
    e.score = j.at("score").get<double>();
    e.slider_travel = j.at("slider_travel").get<double>();
    return e;
  }
  if (type == "quiz_result") return QuizResult{j.at("correct").get<int>()};
  if (type == "survey") {
    Survey e;
    e.wore_prescribed_lenses = j.at("wore_prescribed_lenses").get<bool>();
    e.age_group = j.value("age_group", "");
    e.gender = j.value("gender", "");
    e.viewing_distance = j.value("viewing_distance", "");
    return e;
  }
  fail(Errc::format_error, "unknown event type '" + type + "'");
}

json event_to_json(const SessionEvent& event) {
  return std::visit(
      [](const auto& e) -> json {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, EnvReport>) {
          return {{"type", "env_report"}, {"window_w", e.window_w},
                  {"window_h", e.window_h}, {"zoom", e.zoom},
                  {"browser", e.browser}, {"device", device_name(e.device)}};
        } else if constexpr (std::is_same_v<E, VideoLoad>) {
          return {{"type", "video_load"}, {"video_id", e.video_id},
                  {"load_time", e.load_time}};
        } else if constexpr (std::is_same_v<E, Playback>) {
          return {{"type", "playback"}, {"video_id", e.video_id},
                  {"delay", e.delay}};
        } else if constexpr (std::is_same_v<E, RatingEvent>) {
          return {{"type", "rating"}, {"video_id", e.video_id},
                  {"role", role_name(e.role)}, {"score", e.score},
                  {"slider_travel", e.slider_travel}};
        } else if constexpr (std::is_same_v<E, QuizResult>) {
          return {{"type", "quiz_result"}, {"correct", e.correct}};
        } else {
          static_assert(std::is_same_v<E, Survey>);
          return {{"type", "survey"},
                  {"wore_prescribed_lenses", e.wore_prescribed_lenses},
                  {"age_group", e.age_group}, {"gender", e.gender},
                  {"viewing_distance", e.viewing_distance}};
        }
      },
      event);
}

}  // namespace

std::string event_to_json_line(const std::string& subject_id,
                               const SessionEvent& event) {
  json j = event_to_json(event);
  j["subject_id"] = subject_id;
  return j.dump();
}

std::vector<SubjectLog> read_events_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::vector<SubjectLog> logs;
  std::map<std::string, size_t> index;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(Errc::format_error,
           path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    std::string subject;
    try {
      subject = j.at("subject_id").get<std::string>();
    } catch (const json::exception&) {
      fail(Errc::format_error,
           path + ":" + std::to_string(lineno) + ": missing subject_id");
    }
    auto it = index.find(subject);
    if (it == index.end()) {
      index[subject] = logs.size();
      logs.push_back({subject, {}});
      it = index.find(subject);
    }
    try {
      logs[it->second].events.push_back(event_from_json(j));
    } catch (const json::exception& e) {
      fail(Errc::format_error,
           path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return logs;
}

void write_events_jsonl(const std::string& path,
                        const std::vector<SubjectLog>& logs) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  for (const auto& log : logs)
    for (const auto& e : log.events)
      out << event_to_json_line(log.subject_id, e) << '\n';
}

std::map<std::string, double> read_golden_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.column("video_id"), c_mos = t.column("mos");
  if (c_id < 0 || c_mos < 0)
    fail(Errc::format_error, path + ": need columns video_id,mos");
  std::map<std::string, double> out;
  for (const auto& row : t.rows)
    out[row[c_id]] = parse_double(row[c_mos], "mos");
  return out;
}

void write_golden_csv(const std::string& path,
                      const std::map<std::string, double>& golden) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "video_id,mos\n";
  for (const auto& [id, mos] : golden)
    out << id << ',' << format_double(mos) << '\n';
}

void write_verdicts_csv(const std::string& path,
                        const std::vector<SessionVerdict>& verdicts) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "subject_id,state,reason\n";
  for (const auto& v : verdicts)
    out << v.subject_id << ','
        << (v.state == VerdictState::accepted ? "accepted" : "rejected") << ','
        << reason_name(v.reason) << '\n';
}

std::map<std::string, SessionVerdict> read_verdicts_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.column("subject_id"), c_state = t.column("state"),
      c_reason = t.column("reason");
  if (c_id < 0 || c_state < 0 || c_reason < 0)
    fail(Errc::format_error, path + ": need columns subject_id,state,reason");
  std::map<std::string, SessionVerdict> out;
  for (const auto& row : t.rows) {
    SessionVerdict v;
    v.subject_id = row[c_id];
    if (row[c_state] == "accepted")
      v.state = VerdictState::accepted;
    else if (row[c_state] == "rejected")
      v.state = VerdictState::rejected;
    else
      fail(Errc::format_error, path + ": bad state '" + row[c_state] + "'");
    v.reason = parse_reason(row[c_reason]);
    out[v.subject_id] = std::move(v);
  }
  return out;
}

}  // namespace vqforge
