#include "vqforge/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"
#include "vqforge/rng.hpp"

namespace vqforge {

const char* subject_kind_name(SubjectKind k) {
  switch (k) {
    case SubjectKind::sincere: return "sincere";
    case SubjectKind::spammer_uniform: return "spammer_uniform";
    case SubjectKind::spammer_constant: return "spammer_constant";
    case SubjectKind::spammer_nudge: return "spammer_nudge";
  }
  return "sincere";
}

void PopulationSpec::validate() const {
  if (subjects < 1) fail(Errc::bad_spec, "population needs at least 1 subject");
  if (sigma_e < 0 || sigma_b < 0 || sigma_repeat_factor < 0)
    fail(Errc::bad_spec, "negative sigma");
  for (double p : {stall_prob, frac_uniform, frac_constant, frac_nudge,
                   env_fail_prob, quiz_fail_prob, training_stall_prob,
                   negative_delay_prob, abandon_prob, repeat_scramble_prob,
                   lens_noncompliance_prob})
    if (p < 0.0 || p > 1.0) fail(Errc::bad_spec, "probability outside [0,1]");
  if (frac_uniform + frac_constant + frac_nudge > 1.0 + 1e-12)
    fail(Errc::bad_spec, "spammer fractions exceed 1");
}

namespace {

std::string padded_id(const char* prefix, int i, int width) {
  std::string n = std::to_string(i);
  std::string out = prefix;
  out.append(width > static_cast<int>(n.size()) ? width - n.size() : 0, '0');
  out += n;
  return out;
}

double clamp_score(double v) { return std::min(100.0, std::max(0.0, v)); }

struct SubjectContext {
  SubjectKind kind = SubjectKind::sincere;
  double bias = 0.0;
  double constant_value = 50.0;
  double slider_pos = 50.0;  // persists between ratings
  bool env_fail = false, quiz_fail = false, training_stall = false;
  bool negative_delay = false, abandon = false, repeat_scramble = false;
  bool lens_noncompliant = false;
  bool golden_shifted = false;
};

}  // namespace

StudyOutputs simulate_study(const WorldModel& world, const PopulationSpec& pop,
                            uint64_t seed, const ScreeningConfig& cfg) {
  pop.validate();
  const StudyDesign& design = world.design;
  int singles = design.n_test - 2 * design.n_repeat - design.n_golden;
  if (singles < 0) fail(Errc::bad_spec, "study design has more repeats/goldens than slots");
  int uniques = singles + design.n_repeat;
  if (world.n_videos < uniques)
    fail(Errc::bad_spec, "world has " + std::to_string(world.n_videos) +
                             " videos, sessions need " + std::to_string(uniques));

  StudyOutputs out;

  // latent content qualities
  Rng world_rng(seed ^ fnv1a("world"));
  for (int i = 0; i < world.n_videos; ++i) {
    std::string id = padded_id("vid_", i, 5);
    out.true_quality[id] = world_rng.uniform(world.quality_lo, world.quality_hi);
  }
  std::vector<std::string> training_ids;
  for (int i = 0; i < design.n_training; ++i) {
    std::string id = padded_id("train_", i, 2);
    out.true_quality[id] = world_rng.uniform(world.quality_lo, world.quality_hi);
    training_ids.push_back(id);
  }
  // golden references span the quality range, the usual design for
  // reliability probes
  std::vector<std::string> golden_ids;
  for (int i = 0; i < design.n_golden; ++i) {
    std::string id = padded_id("golden_", i, 2);
    double q = design.n_golden == 1
                   ? 0.5 * (world.quality_lo + world.quality_hi)
                   : world.quality_lo + (world.quality_hi - world.quality_lo) *
                                            i / (design.n_golden - 1);
    out.true_quality[id] = q;
    out.golden_refs[id] = q;
    golden_ids.push_back(id);
  }

  // subject kinds: fixed counts per fraction, mixed across ids
  std::vector<SubjectKind> kinds(pop.subjects, SubjectKind::sincere);
  int n_uni = static_cast<int>(std::llround(pop.frac_uniform * pop.subjects));
  int n_con = static_cast<int>(std::llround(pop.frac_constant * pop.subjects));
  int n_nud = static_cast<int>(std::llround(pop.frac_nudge * pop.subjects));
  int cursor = 0;
  for (int i = 0; i < n_uni && cursor < pop.subjects; ++i)
    kinds[cursor++] = SubjectKind::spammer_uniform;
  for (int i = 0; i < n_con && cursor < pop.subjects; ++i)
    kinds[cursor++] = SubjectKind::spammer_constant;
  for (int i = 0; i < n_nud && cursor < pop.subjects; ++i)
    kinds[cursor++] = SubjectKind::spammer_nudge;
  Rng assign_rng(seed ^ fnv1a("assign"));
  assign_rng.shuffle(kinds);

  for (int si = 0; si < pop.subjects; ++si) {
    std::string subject = padded_id("s", si, 5);
    Rng rng(seed ^ fnv1a(subject));

    SubjectContext ctx;
    ctx.kind = kinds[si];
    ctx.env_fail = rng.bernoulli(pop.env_fail_prob);
    ctx.quiz_fail = rng.bernoulli(pop.quiz_fail_prob);
    ctx.training_stall = rng.bernoulli(pop.training_stall_prob);
    ctx.negative_delay = rng.bernoulli(pop.negative_delay_prob);
    ctx.abandon = rng.bernoulli(pop.abandon_prob);
    ctx.repeat_scramble = rng.bernoulli(pop.repeat_scramble_prob);
    ctx.lens_noncompliant = rng.bernoulli(pop.lens_noncompliance_prob);
    ctx.golden_shifted = pop.golden_offset != 0.0;
    ctx.bias = rng.normal(0.0, pop.sigma_b);
    ctx.constant_value = std::round(rng.uniform(30.0, 70.0));
    ctx.slider_pos = 50.0;

    out.labels[subject] = ctx.kind;

    SubjectLog log;
    log.subject_id = subject;
    SessionState state;
    bool stopped = false;
    auto emit = [&](SessionEvent e) {
      log.events.push_back(e);
      state = apply_event(std::move(state), log.events.back(), cfg);
      if (state.rejected) stopped = true;  // the live gate ends the session
      return !stopped;
    };

    auto score_for = [&](const std::string& content, bool second_viewing,
                         bool is_golden) {
      double s;
      switch (ctx.kind) {
        case SubjectKind::spammer_uniform:
          s = std::round(rng.uniform(0.0, 100.0));
          break;
        case SubjectKind::spammer_constant:
          s = ctx.constant_value;
          break;
        case SubjectKind::spammer_nudge:
          s = clamp_score(ctx.slider_pos + rng.uniform(-4.5, 4.5));
          break;
        case SubjectKind::sincere:
        default: {
          if (second_viewing && ctx.repeat_scramble) {
            s = std::round(rng.uniform(0.0, 100.0));
            break;
          }
          double sigma =
              second_viewing ? pop.sigma_e * pop.sigma_repeat_factor : pop.sigma_e;
          double q = out.true_quality.at(content);
          double shift = is_golden && ctx.golden_shifted ? pop.golden_offset : 0.0;
          s = clamp_score(std::round(q + ctx.bias + shift + rng.normal(0.0, sigma)));
          break;
        }
      }
      double travel = std::fabs(s - ctx.slider_pos);
      ctx.slider_pos = s;
      return std::pair<double, double>(s, travel);
    };

    // instructions: environment, preloads, quiz
    EnvReport env{1366, 768, 100, "chrome", DeviceKind::desktop};
    if (ctx.env_fail) env = {640, 480, 100, "chrome", DeviceKind::desktop};
    if (!emit(env)) goto session_done;
    for (int i = 0; i < design.n_training; ++i)
      if (!emit(VideoLoad{training_ids[i], rng.uniform(0.5, 2.0)})) goto session_done;
    if (!emit(QuizResult{ctx.quiz_fail ? 3 : 5 + static_cast<int>(rng.below(2))}))
      goto session_done;

    // training
    for (int i = 0; i < design.n_training; ++i) {
      double delay = rng.uniform(0.0, 0.3);
      if (ctx.training_stall && i == 2) delay = 3.0;
      if (ctx.negative_delay && i == 1) delay = -0.5;
      if (!emit(Playback{training_ids[i], delay})) goto session_done;
      auto [s, travel] = score_for(training_ids[i], false, false);
      if (!emit(RatingEvent{training_ids[i], RatingRole::training, s, travel}))
        goto session_done;
    }

    // test playlist: singles, repeat pairs, goldens, shuffled
    {
      std::vector<int> pool(world.n_videos);
      std::iota(pool.begin(), pool.end(), 0);
      rng.shuffle(pool);

      struct Slot {
        std::string content;
        RatingRole role;
        bool second = false;
        bool golden = false;
      };
      std::vector<Slot> slots;
      for (int i = 0; i < singles; ++i)
        slots.push_back({padded_id("vid_", pool[i], 5), RatingRole::test, false, false});
      for (int i = 0; i < design.n_repeat; ++i) {
        std::string id = padded_id("vid_", pool[singles + i], 5);
        slots.push_back({id, RatingRole::repeat, false, false});
        slots.push_back({id, RatingRole::repeat, true, false});
      }
      for (const auto& id : golden_ids)
        slots.push_back({id, RatingRole::golden, false, true});
      rng.shuffle(slots);
      // repeat pairs are symmetric, so order within a pair does not matter,
      // but the model treats the chronologically second one as a re-view
      std::map<std::string, bool> seen;

      int abandon_at = ctx.abandon ? design.n_test * 2 / 3 : design.n_test + 1;
      for (int slot_i = 0; slot_i < static_cast<int>(slots.size()); ++slot_i) {
        if (slot_i >= abandon_at) break;
        const Slot& slot = slots[slot_i];
        double delay =
            rng.bernoulli(pop.stall_prob) ? rng.uniform(2.5, 9.5) : rng.uniform(0.0, 0.4);
        if (!emit(Playback{slot.content, delay})) goto session_done;
        bool second = slot.role == RatingRole::repeat && seen[slot.content];
        if (slot.role == RatingRole::repeat) seen[slot.content] = true;
        auto [s, travel] = score_for(slot.content, second, slot.golden);
        if (!emit(RatingEvent{slot.content, slot.role, s, travel})) goto session_done;
      }
      if (ctx.abandon) goto session_done;
    }

    emit(Survey{!ctx.lens_noncompliant, "20-30", "na", "15-30in"});

  session_done:
    // test-phase ratings feed the table, first viewing only per content
    {
      std::map<std::string, bool> recorded;
      long playbacks = 0, stalls = 0;
      bool in_test = false;
      int training_seen = 0;
      for (const auto& e : log.events) {
        if (const auto* r = std::get_if<RatingEvent>(&e)) {
          if (r->role == RatingRole::training) {
            if (++training_seen == design.n_training) in_test = true;
            continue;
          }
          if (!recorded[r->video_id]) {
            recorded[r->video_id] = true;
            out.table.rows.push_back(
                {subject, r->video_id, ContentKind::video, r->score});
          }
        } else if (const auto* p = std::get_if<Playback>(&e)) {
          if (!in_test) continue;
          ++playbacks;
          if (p->delay > cfg.per_video_delay_max) ++stalls;
        }
      }
      SubjectFlags flags;
      flags.blocked = false;
      flags.stall_fraction =
          playbacks > 0 ? static_cast<double>(stalls) / playbacks : 0.0;
      flags.wore_lenses = state.surveyed ? state.survey.wore_prescribed_lenses : true;
      out.table.flags[subject] = flags;
    }
    out.logs.push_back(std::move(log));
  }

  return out;
}

PopulationSpec canned_population(RejectReason reason) {
  PopulationSpec spec;
  spec.subjects = 8;
  spec.sigma_e = 6.0;
  spec.sigma_b = 4.0;
  spec.stall_prob = 0.0;
  switch (reason) {
    case RejectReason::none: break;
    case RejectReason::env_fail: spec.env_fail_prob = 1.0; break;
    case RejectReason::quiz_fail: spec.quiz_fail_prob = 1.0; break;
    case RejectReason::training_delay: spec.training_stall_prob = 1.0; break;
    case RejectReason::negative_delay: spec.negative_delay_prob = 1.0; break;
    case RejectReason::mid_stall: spec.stall_prob = 0.9; break;
    case RejectReason::flat_scores: spec.frac_constant = 1.0; break;
    case RejectReason::slider_nudge: spec.frac_nudge = 1.0; break;
    case RejectReason::repeat_inconsistent: spec.repeat_scramble_prob = 1.0; break;
    case RejectReason::golden_inconsistent: spec.golden_offset = 45.0; break;
    case RejectReason::incomplete: spec.abandon_prob = 1.0; break;
  }
  return spec;
}

void write_labels_csv(const std::string& path,
                      const std::map<std::string, SubjectKind>& labels) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "subject_id,kind\n";
  for (const auto& [s, k] : labels)
    out << s << ',' << subject_kind_name(k) << '\n';
}

void write_quality_csv(const std::string& path,
                       const std::map<std::string, double>& quality) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "content_id,quality\n";
  for (const auto& [c, q] : quality)
    out << c << ',' << format_double(q) << '\n';
}

}  // namespace vqforge
