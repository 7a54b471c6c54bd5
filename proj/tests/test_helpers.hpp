#ifndef MSD_TEST_HELPERS_HPP
#define MSD_TEST_HELPERS_HPP

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "msd/types.hpp"

namespace msd::test {

// Deterministic uniform/gaussian streams (explicit arithmetic, no
// distribution objects, so sequences are identical across platforms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Chi(k) sample for integer k: norm of k iid standard normals.
  double chi(int k) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      const double z = gaussian();
      acc += z * z;
    }
    return std::sqrt(acc);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline Waveform tone(double freq_hz, double duration_s, double fs, double amplitude = 0.5) {
  Waveform w;
  w.sample_rate = fs;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / fs);
  return w;
}

inline Waveform am_tone(double carrier_hz, double mod_hz, double depth, double duration_s,
                        double fs, double amplitude = 0.4) {
  Waveform w = tone(carrier_hz, duration_s, fs, amplitude);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] *= 1.0 + depth * std::sin(2.0 * std::numbers::pi * mod_hz * i / fs);
  return w;
}

inline Waveform sawtooth(double freq_hz, double duration_s, double fs, double amplitude = 0.5) {
  Waveform w;
  w.sample_rate = fs;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = std::fmod(freq_hz * i / fs, 1.0);
    w.samples[i] = amplitude * (2.0 * phase - 1.0);
  }
  return w;
}

inline Waveform silence(double duration_s, double fs) {
  Waveform w;
  w.sample_rate = fs;
  w.samples.assign(static_cast<std::size_t>(std::llround(duration_s * fs)), 0.0);
  return w;
}

inline Waveform white_noise(double duration_s, double fs, std::uint64_t seed,
                            double amplitude = 0.3) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = fs;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amplitude * rng.gaussian();
  return w;
}

// Two-pole resonator: r = exp(-pi*bw/fs), pole angle from the center frequency.
inline void resonate(std::vector<double>& x, double center_hz, double bw_hz, double fs) {
  const double r = std::exp(-std::numbers::pi * bw_hz / fs);
  const double theta = 2.0 * std::numbers::pi * center_hz / fs;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = v + 2.0 * r * std::cos(theta) * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

/// 100 Hz pulse train driven through resonators at the requested formant
/// frequencies: a crude synthetic vowel.
inline Waveform synthetic_vowel(double f1_hz, double f2_hz, double duration_s, double fs,
                                double pitch_hz = 100.0) {
  Waveform w;
  w.sample_rate = fs;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  w.samples.assign(n, 0.0);
  const std::size_t period = static_cast<std::size_t>(std::llround(fs / pitch_hz));
  for (std::size_t i = 0; i < n; i += period) w.samples[i] = 1.0;
  resonate(w.samples, f1_hz, 80.0, fs);
  resonate(w.samples, f2_hz, 90.0, fs);
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0)
    for (double& v : w.samples) v *= 0.5 / peak;
  return w;
}

/// Naive O(n^2) DFT magnitude oracle, independent of the FFT under test.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x, std::size_t nfft) {
  std::vector<double> mags(nfft / 2 + 1);
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * n) /
                         static_cast<double>(nfft);
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    mags[k] = std::abs(acc);
  }
  return mags;
}

/// Brute-force solver for the SVM dual: projected gradient ascent with exact
/// projection onto { 0 <= a <= box, y'a = 0 } (bisection on the shift).
/// Returns the maximized dual objective.
inline double qp_oracle_objective(const std::vector<double>& kernel, const std::vector<int>& y,
                                  const std::vector<double>& box, int iterations = 200000) {
  const std::size_t n = y.size();
  std::vector<double> a(n, 0.0), grad(n), trial(n);

  const auto project = [&](std::vector<double>& v) {
    // Find lambda such that sum_i y_i * clip(v_i - lambda*y_i) = 0.
    double lo = -1e12, hi = 1e12;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double bal = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double c = std::clamp(v[i] - mid * y[i], 0.0, box[i]);
        bal += c * y[i];
      }
      if (bal > 0)
        lo = mid;
      else
        hi = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lambda * y[i], 0.0, box[i]);
  };

  double step = 0.1;
  const auto objective = [&](const std::vector<double>& v) {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += v[i];
      for (std::size_t j = 0; j < n; ++j)
        obj -= 0.5 * v[i] * v[j] * y[i] * y[j] * kernel[i * n + j];
    }
    return obj;
  };

  double best = objective(a);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = 1.0;
      for (std::size_t j = 0; j < n; ++j) g -= y[i] * y[j] * kernel[i * n + j] * a[j];
      grad[i] = g;
    }
    trial = a;
    for (std::size_t i = 0; i < n; ++i) trial[i] += step * grad[i];
    project(trial);
    const double obj = objective(trial);
    if (obj >= best) {
      best = obj;
      a = trial;
      step *= 1.05;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  return best;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::string tmpl = (std::filesystem::temp_directory_path() / (tag + ".XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace msd::test

#endif  // MSD_TEST_HELPERS_HPP
