#include "msd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace msd::cli {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"dataset.target_rate_hz", "16000"},
      {"dataset.resample_rolloff", "0.945"},
      {"dataset.resample_kaiser_beta", "8.6"},
      {"dataset.resample_zero_crossings", "32"},
      {"dsp.window_ms", "32"},
      {"dsp.hop_ms", "10"},
      {"dsp.nfft", "512"},
      {"dsp.voicing_autocorr_threshold", "0.45"},
      {"dsp.voicing_energy_gate", "0.02"},
      {"dsp.f0_min_hz", "50"},
      {"dsp.f0_max_hz", "500"},
      {"dsp.formant_preemphasis", "0.97"},
      {"dsp.formant_lpc_order", "18"},
      {"dsp.formant_max_bandwidth_hz", "400"},
      {"dsp.formant_min_freq_hz", "90"},
      {"dsp.formant_max_freq_hz", "5500"},
      {"dsp.loudness_smooth_ms", "100"},
      {"dsp.loudness_peak_prominence_db", "1.2"},
      {"dsp.loudness_floor_db", "-80"},
      {"dsp.ltas_active_gate_db", "-60"},
      {"dsp.ltas_floor_db", "-100"},
      {"dsp.chi_bracket_lo", "0.05"},
      {"dsp.chi_bracket_hi", "100"},
      {"dsp.chi_tolerance", "1e-6"},
      {"dsp.chi_max_iter", "50"},
      {"features.voiced_gap_merge_frames", "2"},
      {"features.voiced_min_region_frames", "3"},
      {"svm.kkt_tolerance", "1e-3"},
      {"svm.max_stall_epochs", "200"},
      {"svm.class_weighting", "true"},
      {"classifier.stage1_tie", "patient"},
      {"eval.repetitions", "10"},
      {"eval.outer_folds", "5"},
      {"eval.inner_folds", "5"},
      {"eval.seed", "42"},
      {"grid.interpretation", "range"},
      {"grid.c_min", "1e-2"},
      {"grid.c_max", "1e4"},
      {"grid.c_points", "7"},
      {"grid.gamma_min", "1e-4"},
      {"grid.gamma_max", "1e2"},
      {"grid.gamma_points", "7"},
      {"grid.c_values", ""},
      {"grid.gamma_values", ""},
      {"grid.nf_values", "5,10,15,20"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const std::string t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw Error(ErrorKind::Usage, "config " + key + ": \"" + text + "\" is not a number");
  return v;
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

void RunConfig::apply_override(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw Error(ErrorKind::Usage, "unknown config key \"" + key + "\"");
  it->second = trim(value);
}

void RunConfig::apply_assignment(const std::string& key_equals_value) {
  const auto eq = key_equals_value.find('=');
  if (eq == std::string::npos)
    throw Error(ErrorKind::Usage,
                "expected key=value, got \"" + key_equals_value + "\"");
  apply_override(trim(key_equals_value.substr(0, eq)), key_equals_value.substr(eq + 1));
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Usage, "cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Usage,
                  path + " line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_override(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::Usage, path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

double RunConfig::get_double(const std::string& key) const {
  return parse_double(key, values_.at(key));
}

int RunConfig::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = static_cast<int>(std::llround(v));
  if (static_cast<double>(i) != v)
    throw Error(ErrorKind::Usage, "config " + key + ": expected an integer");
  return i;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = values_.at(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorKind::Usage, "config " + key + ": expected true or false");
}

const std::string& RunConfig::get_string(const std::string& key) const {
  return values_.at(key);
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  const std::string& text = values_.at(key);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string piece =
        trim(comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos));
    if (!piece.empty()) out.push_back(parse_double(key, piece));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (double v : get_double_list(key)) {
    const int i = static_cast<int>(std::llround(v));
    if (static_cast<double>(i) != v)
      throw Error(ErrorKind::Usage, "config " + key + ": expected integers");
    out.push_back(i);
  }
  return out;
}

features::FeatureConfig RunConfig::feature_config() const {
  features::FeatureConfig cfg;
  cfg.stft.window_ms = get_double("dsp.window_ms");
  cfg.stft.hop_ms = get_double("dsp.hop_ms");
  cfg.stft.nfft = get_int("dsp.nfft");
  cfg.voicing.autocorr_threshold = get_double("dsp.voicing_autocorr_threshold");
  cfg.voicing.energy_gate = get_double("dsp.voicing_energy_gate");
  cfg.voicing.f0_min_hz = get_double("dsp.f0_min_hz");
  cfg.voicing.f0_max_hz = get_double("dsp.f0_max_hz");
  cfg.formant.preemphasis = get_double("dsp.formant_preemphasis");
  cfg.formant.lpc_order = get_int("dsp.formant_lpc_order");
  cfg.formant.max_bandwidth_hz = get_double("dsp.formant_max_bandwidth_hz");
  cfg.formant.min_freq_hz = get_double("dsp.formant_min_freq_hz");
  cfg.formant.max_freq_hz = get_double("dsp.formant_max_freq_hz");
  cfg.loudness.smooth_ms = get_double("dsp.loudness_smooth_ms");
  cfg.loudness.peak_prominence_db = get_double("dsp.loudness_peak_prominence_db");
  cfg.loudness.floor_db = get_double("dsp.loudness_floor_db");
  cfg.ltas.active_gate_db = get_double("dsp.ltas_active_gate_db");
  cfg.ltas.floor_db = get_double("dsp.ltas_floor_db");
  cfg.chi.bracket_lo = get_double("dsp.chi_bracket_lo");
  cfg.chi.bracket_hi = get_double("dsp.chi_bracket_hi");
  cfg.chi.tolerance = get_double("dsp.chi_tolerance");
  cfg.chi.max_iter = get_int("dsp.chi_max_iter");
  cfg.voiced_gap_merge_frames = get_int("features.voiced_gap_merge_frames");
  cfg.voiced_min_region_frames = get_int("features.voiced_min_region_frames");
  return cfg;
}

dataset::PreprocessConfig RunConfig::preprocess_config() const {
  dataset::PreprocessConfig cfg;
  cfg.target_rate = get_double("dataset.target_rate_hz");
  cfg.resample.rolloff = get_double("dataset.resample_rolloff");
  cfg.resample.kaiser_beta = get_double("dataset.resample_kaiser_beta");
  cfg.resample.zero_crossings = get_int("dataset.resample_zero_crossings");
  return cfg;
}

svm::SvmConfig RunConfig::svm_config() const {
  svm::SvmConfig cfg;
  cfg.kkt_tolerance = get_double("svm.kkt_tolerance");
  cfg.max_stall_epochs = get_int("svm.max_stall_epochs");
  cfg.class_weighting = get_bool("svm.class_weighting");
  return cfg;
}

evaluation::CvPlan RunConfig::cv_plan() const {
  evaluation::CvPlan plan;
  plan.repetitions = get_int("eval.repetitions");
  plan.outer_folds = get_int("eval.outer_folds");
  plan.inner_folds = get_int("eval.inner_folds");
  plan.seed = static_cast<std::uint64_t>(get_int("eval.seed"));
  return plan;
}

evaluation::GridSpec RunConfig::grid_spec() const {
  evaluation::GridSpec grid;
  const std::string& mode = get_string("grid.interpretation");
  if (mode != "range" && mode != "endpoints")
    throw Error(ErrorKind::Usage, "config grid.interpretation: expected range or endpoints");

  grid.c_values = get_double_list("grid.c_values");
  if (grid.c_values.empty()) {
    if (mode == "endpoints") {
      grid.c_values = {get_double("grid.c_min"), get_double("grid.c_max")};
    } else {
      const int points = get_int("grid.c_points");
      const double lo = get_double("grid.c_min"), hi = get_double("grid.c_max");
      for (int i = 0; i < points; ++i)
        grid.c_values.push_back(std::pow(
            10.0, std::log10(lo) + (points > 1 ? (std::log10(hi) - std::log10(lo)) * i / (points - 1)
                                               : 0.0)));
    }
  }
  grid.gamma_values = get_double_list("grid.gamma_values");
  if (grid.gamma_values.empty()) {
    if (mode == "endpoints") {
      grid.gamma_values = {get_double("grid.gamma_min"), get_double("grid.gamma_max")};
    } else {
      const int points = get_int("grid.gamma_points");
      const double lo = get_double("grid.gamma_min"), hi = get_double("grid.gamma_max");
      for (int i = 0; i < points; ++i)
        grid.gamma_values.push_back(std::pow(
            10.0, std::log10(lo) + (points > 1 ? (std::log10(hi) - std::log10(lo)) * i / (points - 1)
                                               : 0.0)));
    }
  }
  grid.nf_values = get_int_list("grid.nf_values");
  if (grid.nf_values.empty())
    throw Error(ErrorKind::Usage, "config grid.nf_values: list must not be empty");
  for (double c : grid.c_values)
    if (c <= 0) throw Error(ErrorKind::Usage, "config grid.c_values: C must be positive");
  for (double g : grid.gamma_values)
    if (g <= 0) throw Error(ErrorKind::Usage, "config grid.gamma_values: gamma must be positive");
  return grid;
}

bool RunConfig::stage1_tie_to_patient() const {
  const std::string& v = get_string("classifier.stage1_tie");
  if (v == "patient") return true;
  if (v == "neurotypical") return false;
  throw Error(ErrorKind::Usage,
              "config classifier.stage1_tie: expected patient or neurotypical");
}

}  // namespace msd::cli
