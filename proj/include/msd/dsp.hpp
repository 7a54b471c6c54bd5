#ifndef MSD_DSP_HPP
#define MSD_DSP_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "msd/types.hpp"

namespace msd::dsp {

/// Short-time analysis parameters. Window and hop are converted to samples
/// at the waveform rate; nfft must be a power of two >= window length.
struct StftConfig {
  double window_ms = 32.0;
  double hop_ms = 10.0;
  int nfft = 512;

  int window_samples(double sample_rate) const;
  int hop_samples(double sample_rate) const;
  void validate(double sample_rate) const;
};

struct Spectrogram {
  std::vector<double> magnitudes;  // frames x bins, row-major
  std::size_t frames = 0;
  std::size_t bins = 0;
  double frame_rate = 0.0;          // frames per second
  std::vector<double> bin_freqs;    // Hz per bin
  StftConfig config;
  double sample_rate = 0.0;
  int window_length = 0;
  double window_energy = 0.0;       // sum of squared window samples

  double mag(std::size_t frame, std::size_t bin) const {
    return magnitudes[frame * bins + bin];
  }
};

struct VoicingConfig {
  double autocorr_threshold = 0.45;
  double energy_gate = 0.02;  // fraction of utterance median-active RMS
  double f0_min_hz = 50.0;
  double f0_max_hz = 500.0;
};

struct VoicingTrack {
  std::vector<std::uint8_t> voiced;  // one flag per frame
  std::vector<double> f0_hz;         // valid where voiced, 0 elsewhere

  std::size_t frames() const { return voiced.size(); }
};

struct FormantConfig {
  double preemphasis = 0.97;
  int lpc_order = 18;
  double max_bandwidth_hz = 400.0;
  double min_freq_hz = 90.0;
  double max_freq_hz = 5500.0;
};

/// F1/F2 per frame; entries are meaningful only where present is set.
struct FormantTrack {
  std::vector<std::uint8_t> present;
  std::vector<double> f1_hz;
  std::vector<double> f2_hz;

  std::size_t frames() const { return present.size(); }
};

struct LoudnessConfig {
  double smooth_ms = 100.0;            // centered moving-average width
  double peak_prominence_db = 1.2;
  double floor_db = -80.0;
};

struct LtasConfig {
  double active_gate_db = -60.0;  // frame RMS gate for speech activity
  double floor_db = -100.0;
};

struct ChiFitConfig {
  double bracket_lo = 0.05;
  double bracket_hi = 100.0;
  double tolerance = 1e-6;  // output resolution of the shape estimate
  int max_iter = 50;
};

/// Population moments; constant input yields std = skewness = kurtosis = 0.
/// Kurtosis is excess kurtosis (m4/m2^2 - 3).
struct StatsQuad {
  double mean = 0.0;
  double std = 0.0;
  double kurtosis = 0.0;
  double skewness = 0.0;
};

enum class ShapeAxis { PerTimeFrame, PerFrequencyBin };

struct ShapeSeries {
  std::vector<double> values;
  ShapeAxis axis = ShapeAxis::PerTimeFrame;
};

Spectrogram stft(const Waveform& w, const StftConfig& cfg);

/// Maximum-likelihood shape parameter of a Chi(k, scale) distribution with
/// the scale profiled out analytically. Samples are floored at 1e-12 before
/// the log step; the estimate is clamped to [bracket_lo, bracket_hi] and
/// reported at the configured tolerance resolution, which makes it exactly
/// invariant to positive rescaling of the input.
double fit_chi_shape(std::span<const double> samples, const ChiFitConfig& cfg = {});

VoicingTrack detect_voicing(const Waveform& w, const StftConfig& cfg,
                            const VoicingConfig& vcfg = {});

/// LPC-based F1/F2 estimates on voiced frames (autocorrelation method,
/// roots with bandwidth below the configured limit). Frames without two
/// qualifying roots are marked absent.
FormantTrack estimate_formants(const Waveform& w, const VoicingTrack& v,
                               const StftConfig& cfg, const FormantConfig& fcfg = {});

/// Smoothed per-frame RMS in dB, floored at floor_db.
std::vector<double> loudness_contour(const Waveform& w, const StftConfig& cfg,
                                     const LoudnessConfig& lcfg = {});

/// Local maxima with prominence >= peak_prominence_db, per second.
double count_loudness_peaks(std::span<const double> contour, double frame_rate,
                            double duration_s, const LoudnessConfig& lcfg = {});

/// Mean power over speech-active frames in nine octave bands centered at
/// 31.25 * 2^k Hz, k = 0..8, in dB. The top band is truncated at Nyquist.
std::array<double, 9> octave_band_powers(const Spectrogram& s, const LtasConfig& lcfg = {});

/// Band boundaries as a 10-entry ladder: band k covers (edges[k], edges[k+1]].
std::array<double, 10> octave_band_edges(double nyquist_hz);

StatsQuad descriptive_stats(std::span<const double> x);

}  // namespace msd::dsp

#endif  // MSD_DSP_HPP
