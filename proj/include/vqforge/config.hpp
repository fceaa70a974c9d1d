#pragma once

#include <iosfwd>
#include <string>

#include "vqforge/analysis.hpp"
#include "vqforge/cleaning.hpp"
#include "vqforge/features.hpp"
#include "vqforge/patchgen.hpp"
#include "vqforge/sampler.hpp"
#include "vqforge/screening.hpp"
#include "vqforge/simulate.hpp"

namespace vqforge {

struct SamplerSettings {
  int bins_per_feature = 10;
  int target_size = 100;
  std::string mode = "heuristic";
  int swap_cap_factor = 50;
  std::map<std::string, std::pair<int, int>> quotas;
};

// One key-value file with [section] headers covers every stage; unknown
// sections or keys are rejected (Errc::config_error).
struct PipelineConfig {
  FeatureConfig features;
  SamplerSettings sampler;
  PatchgenConfig patchgen;
  ScreeningConfig screening;
  CleaningConfig cleaning;
  AnalysisConfig analysis;
  WorldModel world;
  PopulationSpec population;
};

PipelineConfig load_config(const std::string& path);
void apply_config_text(PipelineConfig& cfg, const std::string& text);
void print_config(std::ostream& os, const PipelineConfig& cfg);

}  // namespace vqforge
