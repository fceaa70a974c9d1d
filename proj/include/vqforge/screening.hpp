#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace vqforge {

enum class DeviceKind { mobile, desktop, laptop };

struct EnvReport {
  int window_w = 0;
  int window_h = 0;
  int zoom = 100;  // percent
  std::string browser;
  DeviceKind device = DeviceKind::desktop;
};

struct VideoLoad {
  std::string video_id;
  double load_time = 0.0;  // seconds
};

struct Playback {
  std::string video_id;
  double delay = 0.0;  // measured minus nominal duration, seconds
};

enum class RatingRole { training, test, repeat, golden };

struct RatingEvent {
  std::string video_id;
  RatingRole role = RatingRole::test;
  double score = 0.0;          // 0..100
  double slider_travel = 0.0;  // 0..100
};

struct QuizResult {
  int correct = 0;  // 0..6
};

struct Survey {
  bool wore_prescribed_lenses = true;
  std::string age_group;
  std::string gender;
  std::string viewing_distance;
};

using SessionEvent =
    std::variant<EnvReport, VideoLoad, Playback, RatingEvent, QuizResult, Survey>;

struct ScreeningConfig {
  int min_short_side_mobile = 480;
  int min_short_side_other = 720;
  int required_zoom = 100;
  std::vector<std::string> browser_allowlist{"chrome", "firefox", "edge",
                                             "safari"};
  double max_total_load = 20.0;        // seconds, summed over preloads
  int quiz_pass = 5;                   // of 6
  double per_video_delay_max = 2.0;    // seconds; beyond this a playback "stalled"
  double training_delay_total_max = 5.0;
  double mid_stall_fraction = 0.5;
  double flat_score_min_std = 5.0;
  double min_slider_travel = 5.0;
  double repeat_mad_max = 20.0;
  double golden_mad_max = 25.0;
  int n_training = 5;
  int n_test = 90;
  int n_repeat = 4;
  int n_golden = 4;
};

enum class VerdictState { accepted, rejected };

enum class RejectReason {
  none,
  env_fail,
  quiz_fail,
  training_delay,
  negative_delay,
  mid_stall,
  flat_scores,
  slider_nudge,
  repeat_inconsistent,
  golden_inconsistent,
  incomplete,
};

const char* reason_name(RejectReason r);
RejectReason parse_reason(const std::string& name);

// Accumulated fold state. Rejected is absorbing: once set, further events
// are ignored.
struct SessionState {
  enum class Phase { instructions, training, test, survey };
  Phase phase = Phase::instructions;
  bool rejected = false;
  RejectReason reason = RejectReason::none;

  double total_load = 0.0;
  double training_delay_total = 0.0;
  int training_ratings = 0;
  long test_playbacks = 0;
  long test_stalls = 0;
  bool mid_checked = false;
  std::vector<RatingEvent> test_ratings;
  bool surveyed = false;
  Survey survey{};
};

// Pure fold step. Throws Errc::phase_order on out-of-order events.
SessionState apply_event(SessionState state, const SessionEvent& event,
                         const ScreeningConfig& cfg);

struct SessionVerdict {
  std::string subject_id;
  VerdictState state = VerdictState::rejected;
  RejectReason reason = RejectReason::incomplete;
  std::vector<RatingEvent> ratings;  // test-phase ratings
};

// Post-task repeat/golden checks on a session that reached the survey.
// Sessions rejected mid-stream keep their verdict; unfinished or
// role-deficient sessions become Rejected(incomplete). Throws
// Errc::missing_golden when a golden rating has no reference score.
SessionVerdict finalize_session(const SessionState& state,
                                const ScreeningConfig& cfg,
                                const std::map<std::string, double>& golden_scores,
                                const std::string& subject_id);

struct SubjectLog {
  std::string subject_id;
  std::vector<SessionEvent> events;
};

SessionVerdict replay_session(const SubjectLog& log, const ScreeningConfig& cfg,
                              const std::map<std::string, double>& golden_scores);

// JSONL, one event per line, "subject_id" and "type" fields on every line.
std::vector<SubjectLog> read_events_jsonl(const std::string& path);
void write_events_jsonl(const std::string& path,
                        const std::vector<SubjectLog>& logs);
std::string event_to_json_line(const std::string& subject_id,
                               const SessionEvent& event);

// golden CSV: video_id,mos
std::map<std::string, double> read_golden_csv(const std::string& path);
void write_golden_csv(const std::string& path,
                      const std::map<std::string, double>& golden);

// verdicts CSV: subject_id,state,reason
void write_verdicts_csv(const std::string& path,
                        const std::vector<SessionVerdict>& verdicts);
std::map<std::string, SessionVerdict> read_verdicts_csv(const std::string& path);

}  // namespace vqforge
