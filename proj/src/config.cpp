#include "vqforge/config.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"

namespace vqforge {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double as_double(const std::string& v, const std::string& key) {
  try {
    return parse_double(v, key);
  } catch (const Error&) {
    fail(Errc::config_error, "bad value for " + key + ": '" + v + "'");
  }
}

int as_int(const std::string& v, const std::string& key) {
  try {
    return static_cast<int>(parse_int(v, key));
  } catch (const Error&) {
    fail(Errc::config_error, "bad value for " + key + ": '" + v + "'");
  }
}

std::vector<double> as_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(as_double(trim(item), key));
  return out;
}

std::vector<std::string> as_string_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

void apply_key(PipelineConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value) {
  auto unknown = [&]() -> void {
    fail(Errc::config_error, "unknown key '" + key + "' in [" + section + "]");
  };

  if (section == "features") {
    if (key == "lm_scales") cfg.features.lm_scales = as_double_list(value, key);
    else if (key == "lm_elongation") cfg.features.lm_elongation = as_double(value, key);
    else if (key == "temporal_scales") cfg.features.temporal_scales = as_double_list(value, key);
    else unknown();
  } else if (section == "sampler") {
    if (key == "bins_per_feature") cfg.sampler.bins_per_feature = as_int(value, key);
    else if (key == "target_size") cfg.sampler.target_size = as_int(value, key);
    else if (key == "mode") cfg.sampler.mode = value;
    else if (key == "swap_cap_factor") cfg.sampler.swap_cap_factor = as_int(value, key);
    else if (key.rfind("quota.", 0) == 0) {
      std::string group = key.substr(6);
      auto parts = as_string_list(value);
      if (group.empty() || parts.size() != 2)
        fail(Errc::config_error, "quota needs 'quota.<group> = min,max'");
      cfg.sampler.quotas[group] = {as_int(parts[0], key), as_int(parts[1], key)};
    } else unknown();
  } else if (section == "patchgen") {
    if (key == "spatial_fraction") cfg.patchgen.spatial_fraction = as_double(value, key);
    else if (key == "temporal_fraction") cfg.patchgen.temporal_fraction = as_double(value, key);
    else if (key == "max_overlap") cfg.patchgen.max_overlap = as_double(value, key);
    else if (key == "max_attempts") cfg.patchgen.max_attempts = as_int(value, key);
    else unknown();
  } else if (section == "screening") {
    auto& s = cfg.screening;
    if (key == "min_short_side_mobile") s.min_short_side_mobile = as_int(value, key);
    else if (key == "min_short_side_other") s.min_short_side_other = as_int(value, key);
    else if (key == "required_zoom") s.required_zoom = as_int(value, key);
    else if (key == "browser_allowlist") s.browser_allowlist = as_string_list(value);
    else if (key == "max_total_load") s.max_total_load = as_double(value, key);
    else if (key == "quiz_pass") s.quiz_pass = as_int(value, key);
    else if (key == "per_video_delay_max") s.per_video_delay_max = as_double(value, key);
    else if (key == "training_delay_total_max") s.training_delay_total_max = as_double(value, key);
    else if (key == "mid_stall_fraction") s.mid_stall_fraction = as_double(value, key);
    else if (key == "flat_score_min_std") s.flat_score_min_std = as_double(value, key);
    else if (key == "min_slider_travel") s.min_slider_travel = as_double(value, key);
    else if (key == "repeat_mad_max") s.repeat_mad_max = as_double(value, key);
    else if (key == "golden_mad_max") s.golden_mad_max = as_double(value, key);
    else if (key == "n_training") s.n_training = as_int(value, key);
    else if (key == "n_test") s.n_test = as_int(value, key);
    else if (key == "n_repeat") s.n_repeat = as_int(value, key);
    else if (key == "n_golden") s.n_golden = as_int(value, key);
    else unknown();
  } else if (section == "cleaning") {
    auto& c = cfg.cleaning;
    if (key == "stall_fraction_max") c.stall_fraction_max = as_double(value, key);
    else if (key == "kurtosis_lo") c.kurtosis_lo = as_double(value, key);
    else if (key == "kurtosis_hi") c.kurtosis_hi = as_double(value, key);
    else if (key == "bt500_outlier_fraction") c.bt500_outlier_fraction = as_double(value, key);
    else if (key == "bt500_balance") c.bt500_balance = as_double(value, key);
    else if (key == "modified_z_cut") c.modified_z_cut = as_double(value, key);
    else if (key == "tukey_k") c.tukey_k = as_double(value, key);
    else if (key == "min_scores_for_outlier") c.min_scores_for_outlier = as_int(value, key);
    else unknown();
  } else if (section == "analysis") {
    if (key == "n_splits") cfg.analysis.n_splits = as_int(value, key);
    else if (key == "histogram_bins") cfg.analysis.histogram_bins = as_int(value, key);
    else unknown();
  } else if (section == "simulate") {
    auto& p = cfg.population;
    if (key == "subjects") p.subjects = as_int(value, key);
    else if (key == "n_videos") cfg.world.n_videos = as_int(value, key);
    else if (key == "quality_lo") cfg.world.quality_lo = as_double(value, key);
    else if (key == "quality_hi") cfg.world.quality_hi = as_double(value, key);
    else if (key == "sigma_e") p.sigma_e = as_double(value, key);
    else if (key == "sigma_b") p.sigma_b = as_double(value, key);
    else if (key == "sigma_repeat_factor") p.sigma_repeat_factor = as_double(value, key);
    else if (key == "stall_prob") p.stall_prob = as_double(value, key);
    else if (key == "frac_uniform") p.frac_uniform = as_double(value, key);
    else if (key == "frac_constant") p.frac_constant = as_double(value, key);
    else if (key == "frac_nudge") p.frac_nudge = as_double(value, key);
    else if (key == "env_fail_prob") p.env_fail_prob = as_double(value, key);
    else if (key == "quiz_fail_prob") p.quiz_fail_prob = as_double(value, key);
    else if (key == "training_stall_prob") p.training_stall_prob = as_double(value, key);
    else if (key == "negative_delay_prob") p.negative_delay_prob = as_double(value, key);
    else if (key == "abandon_prob") p.abandon_prob = as_double(value, key);
    else if (key == "repeat_scramble_prob") p.repeat_scramble_prob = as_double(value, key);
    else if (key == "golden_offset") p.golden_offset = as_double(value, key);
    else if (key == "lens_noncompliance_prob") p.lens_noncompliance_prob = as_double(value, key);
    else unknown();
  } else {
    fail(Errc::config_error, "unknown section [" + section + "]");
  }
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

}  // namespace

void apply_config_text(PipelineConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(Errc::config_error, "line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::config_error, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      fail(Errc::config_error, "line " + std::to_string(lineno) + ": key before any [section]");
    apply_key(cfg, section, key, value);
  }
  // the simulated study inherits its per-session shape from screening
  cfg.world.design = {cfg.screening.n_training, cfg.screening.n_test,
                      cfg.screening.n_repeat, cfg.screening.n_golden};
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

void print_config(std::ostream& os, const PipelineConfig& cfg) {
  os << "[features]\n";
  os << "lm_scales = " << join_doubles(cfg.features.lm_scales) << "\n";
  os << "lm_elongation = " << format_double(cfg.features.lm_elongation) << "\n";
  os << "temporal_scales = " << join_doubles(cfg.features.temporal_scales) << "\n";
  os << "\n[sampler]\n";
  os << "bins_per_feature = " << cfg.sampler.bins_per_feature << "\n";
  os << "target_size = " << cfg.sampler.target_size << "\n";
  os << "mode = " << cfg.sampler.mode << "\n";
  os << "swap_cap_factor = " << cfg.sampler.swap_cap_factor << "\n";
  for (const auto& [g, mm] : cfg.sampler.quotas)
    os << "quota." << g << " = " << mm.first << "," << mm.second << "\n";
  os << "\n[patchgen]\n";
  os << "spatial_fraction = " << format_double(cfg.patchgen.spatial_fraction) << "\n";
  os << "temporal_fraction = " << format_double(cfg.patchgen.temporal_fraction) << "\n";
  os << "max_overlap = " << format_double(cfg.patchgen.max_overlap) << "\n";
  os << "max_attempts = " << cfg.patchgen.max_attempts << "\n";
  os << "\n[screening]\n";
  const auto& s = cfg.screening;
  os << "min_short_side_mobile = " << s.min_short_side_mobile << "\n";
  os << "min_short_side_other = " << s.min_short_side_other << "\n";
  os << "required_zoom = " << s.required_zoom << "\n";
  os << "browser_allowlist = " << join_strings(s.browser_allowlist) << "\n";
  os << "max_total_load = " << format_double(s.max_total_load) << "\n";
  os << "quiz_pass = " << s.quiz_pass << "\n";
  os << "per_video_delay_max = " << format_double(s.per_video_delay_max) << "\n";
  os << "training_delay_total_max = " << format_double(s.training_delay_total_max) << "\n";
  os << "mid_stall_fraction = " << format_double(s.mid_stall_fraction) << "\n";
  os << "flat_score_min_std = " << format_double(s.flat_score_min_std) << "\n";
  os << "min_slider_travel = " << format_double(s.min_slider_travel) << "\n";
  os << "repeat_mad_max = " << format_double(s.repeat_mad_max) << "\n";
  os << "golden_mad_max = " << format_double(s.golden_mad_max) << "\n";
  os << "n_training = " << s.n_training << "\n";
  os << "n_test = " << s.n_test << "\n";
  os << "n_repeat = " << s.n_repeat << "\n";
  os << "n_golden = " << s.n_golden << "\n";
  os << "\n[cleaning]\n";
  const auto& c = cfg.cleaning;
  os << "stall_fraction_max = " << format_double(c.stall_fraction_max) << "\n";
  os << "kurtosis_lo = " << format_double(c.kurtosis_lo) << "\n";
  os << "kurtosis_hi = " << format_double(c.kurtosis_hi) << "\n";
  os << "bt500_outlier_fraction = " << format_double(c.bt500_outlier_fraction) << "\n";
  os << "bt500_balance = " << format_double(c.bt500_balance) << "\n";
  os << "modified_z_cut = " << format_double(c.modified_z_cut) << "\n";
  os << "tukey_k = " << format_double(c.tukey_k) << "\n";
  os << "min_scores_for_outlier = " << c.min_scores_for_outlier << "\n";
  os << "\n[analysis]\n";
  os << "n_splits = " << cfg.analysis.n_splits << "\n";
  os << "histogram_bins = " << cfg.analysis.histogram_bins << "\n";
  os << "\n[simulate]\n";
  const auto& p = cfg.population;
  os << "subjects = " << p.subjects << "\n";
  os << "n_videos = " << cfg.world.n_videos << "\n";
  os << "quality_lo = " << format_double(cfg.world.quality_lo) << "\n";
  os << "quality_hi = " << format_double(cfg.world.quality_hi) << "\n";
  os << "sigma_e = " << format_double(p.sigma_e) << "\n";
  os << "sigma_b = " << format_double(p.sigma_b) << "\n";
  os << "sigma_repeat_factor = " << format_double(p.sigma_repeat_factor) << "\n";
  os << "stall_prob = " << format_double(p.stall_prob) << "\n";
  os << "frac_uniform = " << format_double(p.frac_uniform) << "\n";
  os << "frac_constant = " << format_double(p.frac_constant) << "\n";
  os << "frac_nudge = " << format_double(p.frac_nudge) << "\n";
  os << "env_fail_prob = " << format_double(p.env_fail_prob) << "\n";
  os << "quiz_fail_prob = " << format_double(p.quiz_fail_prob) << "\n";
  os << "training_stall_prob = " << format_double(p.training_stall_prob) << "\n";
  os << "negative_delay_prob = " << format_double(p.negative_delay_prob) << "\n";
  os << "abandon_prob = " << format_double(p.abandon_prob) << "\n";
  os << "repeat_scramble_prob = " << format_double(p.repeat_scramble_prob) << "\n";
  os << "golden_offset = " << format_double(p.golden_offset) << "\n";
  os << "lens_noncompliance_prob = " << format_double(p.lens_noncompliance_prob) << "\n";
}

}  // namespace vqforge
