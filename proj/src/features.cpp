#include "msd/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace msd::features {

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {
        "spec_sparsity_mean", "spec_sparsity_std", "spec_sparsity_kurt", "spec_sparsity_skew",
        "formant1_mean_hz",   "formant1_std_hz",   "formant1_kurt",      "formant1_skew",
        "formant2_mean_hz",   "formant2_std_hz",   "formant2_kurt",      "formant2_skew",
        "voiced_dur_mean_s",  "voiced_dur_std_s",  "loudness_peaks_per_s",
    };
    for (int k = 1; k <= 9; ++k) n.push_back("ltas_band" + std::to_string(k) + "_db");
    n.insert(n.end(), {"temp_sparsity_mean", "temp_sparsity_std", "temp_sparsity_kurt",
                       "temp_sparsity_skew"});
    return n;
  }();
  return names;
}

dsp::ShapeSeries shape_series(const dsp::Spectrogram& s, dsp::ShapeAxis axis,
                              const dsp::ChiFitConfig& chi) {
  dsp::ShapeSeries out;
  out.axis = axis;
  std::vector<double> buf;
  if (axis == dsp::ShapeAxis::PerTimeFrame) {
    buf.resize(s.bins);
    for (std::size_t t = 0; t < s.frames; ++t) {
      for (std::size_t b = 0; b < s.bins; ++b) buf[b] = s.mag(t, b);
      if (std::all_of(buf.begin(), buf.end(), [](double v) { return v <= 0.0; })) continue;
      out.values.push_back(dsp::fit_chi_shape(buf, chi));
    }
  } else {
    buf.resize(s.frames);
    for (std::size_t b = 0; b < s.bins; ++b) {
      for (std::size_t t = 0; t < s.frames; ++t) buf[t] = s.mag(t, b);
      if (std::all_of(buf.begin(), buf.end(), [](double v) { return v <= 0.0; })) continue;
      out.values.push_back(dsp::fit_chi_shape(buf, chi));
    }
  }
  return out;
}

namespace {

std::array<double, 4> stats_array(std::span<const double> x) {
  const dsp::StatsQuad q = dsp::descriptive_stats(x);
  return {q.mean, q.std, q.kurtosis, q.skewness};
}

}  // namespace

std::array<double, 4> spectral_sparsity_features(const dsp::Spectrogram& s,
                                                 const dsp::ChiFitConfig& chi) {
  const dsp::ShapeSeries series = shape_series(s, dsp::ShapeAxis::PerTimeFrame, chi);
  if (series.values.size() < 8)
    throw Error(ErrorKind::Data, "spectral sparsity: fewer than 8 non-degenerate frames");
  return stats_array(series.values);
}

std::array<double, 4> temporal_sparsity_features(const dsp::Spectrogram& s,
                                                 const dsp::ChiFitConfig& chi) {
  const dsp::ShapeSeries series = shape_series(s, dsp::ShapeAxis::PerFrequencyBin, chi);
  if (series.values.size() < 8)
    throw Error(ErrorKind::Data, "temporal sparsity: fewer than 8 bins with nonzero energy");
  return stats_array(series.values);
}

std::vector<std::pair<std::size_t, std::size_t>> voiced_regions(
    const std::vector<std::uint8_t>& voiced, int gap_merge, int min_len) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  const std::size_t n = voiced.size();
  std::size_t i = 0;
  while (i < n) {
    if (!voiced[i]) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < n) {
      if (voiced[end]) {
        ++end;
        continue;
      }
      // Close a short unvoiced gap if more voicing follows.
      std::size_t gap_end = end;
      while (gap_end < n && !voiced[gap_end]) ++gap_end;
      if (gap_end < n && gap_end - end <= static_cast<std::size_t>(gap_merge))
        end = gap_end;
      else
        break;
    }
    if (end - i >= static_cast<std::size_t>(min_len)) runs.emplace_back(i, end);
    i = end;
  }
  return runs;
}

std::array<double, 10> formant_voicing_features(const dsp::FormantTrack& ft,
                                                const dsp::VoicingTrack& v, double frame_rate,
                                                int gap_merge, int min_len) {
  std::vector<double> f1, f2;
  for (std::size_t t = 0; t < ft.frames(); ++t) {
    if (!ft.present[t]) continue;
    f1.push_back(ft.f1_hz[t]);
    f2.push_back(ft.f2_hz[t]);
  }
  if (f1.size() < 8)
    throw Error(ErrorKind::Data, "formant features: fewer than 8 voiced frames with formants");

  const auto regions = voiced_regions(v.voiced, gap_merge, min_len);
  if (regions.empty())
    throw Error(ErrorKind::Data, "formant features: no voiced region found");
  std::vector<double> durations;
  durations.reserve(regions.size());
  for (const auto& [begin, end] : regions)
    durations.push_back(static_cast<double>(end - begin) / frame_rate);
  const dsp::StatsQuad dur = dsp::descriptive_stats(durations);

  std::array<double, 10> out{};
  const auto s1 = stats_array(f1);
  const auto s2 = stats_array(f2);
  std::copy(s1.begin(), s1.end(), out.begin());
  std::copy(s2.begin(), s2.end(), out.begin() + 4);
  out[8] = dur.mean;
  out[9] = dur.std;
  return out;
}

std::array<double, 10> loudness_ltas_features(const Waveform& w, const dsp::Spectrogram& s,
                                              const dsp::LoudnessConfig& loudness,
                                              const dsp::LtasConfig& ltas) {
  const std::vector<double> contour = dsp::loudness_contour(w, s.config, loudness);
  const double rate = count_loudness_peaks(contour, s.frame_rate, w.duration_s(), loudness);
  const auto bands = dsp::octave_band_powers(s, ltas);
  std::array<double, 10> out{};
  out[0] = rate;
  std::copy(bands.begin(), bands.end(), out.begin() + 1);
  return out;
}

FeatureVector extract_features(const Waveform& w, const FeatureConfig& cfg) {
  const dsp::Spectrogram s = dsp::stft(w, cfg.stft);
  const dsp::VoicingTrack v = dsp::detect_voicing(w, cfg.stft, cfg.voicing);
  const dsp::FormantTrack ft = dsp::estimate_formants(w, v, cfg.stft, cfg.formant);

  const auto f1 = spectral_sparsity_features(s, cfg.chi);
  const auto f2 = formant_voicing_features(ft, v, s.frame_rate, cfg.voiced_gap_merge_frames,
                                           cfg.voiced_min_region_frames);
  const auto f3 = loudness_ltas_features(w, s, cfg.loudness, cfg.ltas);
  const auto f4 = temporal_sparsity_features(s, cfg.chi);

  FeatureVector out;
  std::copy(f1.begin(), f1.end(), out.values.begin());
  std::copy(f2.begin(), f2.end(), out.values.begin() + 4);
  std::copy(f3.begin(), f3.end(), out.values.begin() + 14);
  std::copy(f4.begin(), f4.end(), out.values.begin() + 24);
  for (double val : out.values)
    if (!std::isfinite(val))
      throw Error(ErrorKind::Internal, "feature extraction produced a non-finite value");
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_csv_token(const std::string& s, const char* what) {
  if (s.find_first_of(",\"\n\r") != std::string::npos)
    throw Error(ErrorKind::Data, std::string(what) + " contains CSV delimiter characters: " + s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string feature_csv_string(const FeatureMatrix& m) {
  std::string out;
  for (const auto& name : m.feature_names) {
    check_csv_token(name, "feature name");
    out += name;
    out += ',';
  }
  out += "id,label\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out += format_double(m.at(r, c));
      out += ',';
    }
    check_csv_token(m.ids[r], "recording id");
    out += m.ids[r];
    out += ',';
    out += to_string(m.labels[r]);
    out += '\n';
  }
  return out;
}

void write_feature_csv(const std::string& path, const FeatureMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Data, "cannot write " + path);
  const std::string s = feature_csv_string(m);
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

FeatureMatrix read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Data, "cannot open feature CSV: " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Data, path + ": empty feature CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "id" || header.back() != "label")
    throw Error(ErrorKind::Data, path + ": header must end with id,label columns");

  FeatureMatrix m;
  m.feature_names.assign(header.begin(), header.end() - 2);
  const std::size_t d = m.feature_names.size();

  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != d + 2)
      throw Error(ErrorKind::Data, path + " line " + std::to_string(line_no) +
                                       ": expected " + std::to_string(d + 2) + " fields");
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      const auto& f = fields[c];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw Error(ErrorKind::Data, path + " line " + std::to_string(line_no) +
                                         ": bad numeric value \"" + f + "\"");
      m.values.push_back(v);
    }
    const std::string& id = fields[d];
    if (!seen.insert(id).second)
      throw Error(ErrorKind::Data,
                  path + " line " + std::to_string(line_no) + ": duplicate recording id " + id);
    m.ids.push_back(id);
    m.labels.push_back(parse_class_label(fields[d + 1]));
  }
  return m;
}

}  // namespace msd::features
