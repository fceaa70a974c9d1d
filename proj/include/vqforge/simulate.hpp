#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vqforge/cleaning.hpp"
#include "vqforge/screening.hpp"

namespace vqforge {

struct StudyDesign {
  int n_training = 5;
  int n_test = 90;
  int n_repeat = 4;
  int n_golden = 4;
};

struct WorldModel {
  int n_videos = 200;
  double quality_lo = 20.0;
  double quality_hi = 80.0;
  StudyDesign design{};
};

enum class SubjectKind { sincere, spammer_uniform, spammer_constant, spammer_nudge };

const char* subject_kind_name(SubjectKind k);

struct PopulationSpec {
  int subjects = 100;

  // sincere rater model: clamp(round(q + bias + N(0, sigma_e)), 0, 100)
  double sigma_e = 10.0;
  double sigma_b = 5.0;
  // second viewing of a repeated video uses sigma_e * this factor
  // (raters remember the stimulus, so self-noise is below fresh noise)
  double sigma_repeat_factor = 0.7;
  double stall_prob = 0.02;  // per test playback

  // spammer mix, fractions of the whole population
  double frac_uniform = 0.0;
  double frac_constant = 0.0;
  double frac_nudge = 0.0;

  // session-level failure knobs, each a per-subject probability
  double env_fail_prob = 0.0;
  double quiz_fail_prob = 0.0;
  double training_stall_prob = 0.0;
  double negative_delay_prob = 0.0;
  double abandon_prob = 0.0;         // walk away mid-test -> incomplete
  double repeat_scramble_prob = 0.0; // second viewings rated at random
  double lens_noncompliance_prob = 0.0;
  double golden_offset = 0.0;        // constant shift on golden scores

  void validate() const;  // Errc::bad_spec
};

struct StudyOutputs {
  std::vector<SubjectLog> logs;
  RatingTable table;  // test-phase scores (first viewing of repeats)
  std::map<std::string, double> golden_refs;   // golden content -> reference MOS
  std::map<std::string, double> true_quality;  // content -> latent quality
  std::map<std::string, SubjectKind> labels;
};

// Deterministic given seed. Sessions run through the screening state
// machine as they are generated, so a subject the live gate would stop
// emits no further events, and logs satisfy the phase-order contract by
// construction.
StudyOutputs simulate_study(const WorldModel& world, const PopulationSpec& pop,
                            uint64_t seed, const ScreeningConfig& cfg = {});

// One spec per rejection reason; used by the reason-coverage suite.
PopulationSpec canned_population(RejectReason reason);

void write_labels_csv(const std::string& path,
                      const std::map<std::string, SubjectKind>& labels);
void write_quality_csv(const std::string& path,
                       const std::map<std::string, double>& quality);

}  // namespace vqforge
