#include "msd/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace msd::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT, in place. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  return w;
}

std::size_t frame_count(std::size_t n, int win, int hop) {
  if (n < static_cast<std::size_t>(win)) return 0;
  return (n - static_cast<std::size_t>(win)) / static_cast<std::size_t>(hop) + 1;
}

double frame_rms(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

// Asymptotic series after shifting the argument above 6.
double digamma(double x) {
  double r = 0.0;
  while (x < 6.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return r + std::log(x) - 0.5 / x -
         f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f * (1.0 / 132)))));
}

double trigamma(double x) {
  double r = 0.0;
  while (x < 6.0) {
    r += 1.0 / (x * x);
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return r + 1.0 / x + f / 2.0 +
         (f / x) * (1.0 / 6 - f * (1.0 / 30 - f * (1.0 / 42 - f * (1.0 / 30))));
}

}  // namespace

int StftConfig::window_samples(double sample_rate) const {
  return static_cast<int>(std::llround(window_ms * sample_rate / 1000.0));
}

int StftConfig::hop_samples(double sample_rate) const {
  return static_cast<int>(std::llround(hop_ms * sample_rate / 1000.0));
}

void StftConfig::validate(double sample_rate) const {
  if (sample_rate <= 0) throw Error(ErrorKind::Data, "stft: sample rate must be positive");
  const int win = window_samples(sample_rate);
  const int hop = hop_samples(sample_rate);
  if (win < 2) throw Error(ErrorKind::Data, "stft: window shorter than 2 samples");
  if (hop < 1) throw Error(ErrorKind::Data, "stft: hop shorter than 1 sample");
  if (hop > win) throw Error(ErrorKind::Data, "stft: hop exceeds window length");
  if (win > nfft) throw Error(ErrorKind::Data, "stft: window length exceeds nfft");
  if (!is_power_of_two(nfft)) throw Error(ErrorKind::Data, "stft: nfft must be a power of two");
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate(w.sample_rate);
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const std::size_t n_frames = frame_count(w.samples.size(), win, hop);
  if (n_frames == 0)
    throw Error(ErrorKind::Data, "stft: waveform shorter than one analysis window");

  const std::vector<double> window = hann_window(win);
  double wss = 0.0;
  for (double v : window) wss += v * v;

  Spectrogram s;
  s.config = cfg;
  s.sample_rate = w.sample_rate;
  s.frames = n_frames;
  s.bins = static_cast<std::size_t>(cfg.nfft / 2 + 1);
  s.frame_rate = w.sample_rate / hop;
  s.window_length = win;
  s.window_energy = wss;
  s.bin_freqs.resize(s.bins);
  for (std::size_t b = 0; b < s.bins; ++b)
    s.bin_freqs[b] = static_cast<double>(b) * w.sample_rate / cfg.nfft;
  s.magnitudes.assign(n_frames * s.bins, 0.0);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.nfft));
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t off = t * static_cast<std::size_t>(hop);
    for (int i = 0; i < win; ++i)
      buf[static_cast<std::size_t>(i)] = w.samples[off + static_cast<std::size_t>(i)] *
                                         window[static_cast<std::size_t>(i)];
    std::fill(buf.begin() + win, buf.end(), std::complex<double>(0.0, 0.0));
    fft_inplace(buf);
    for (std::size_t b = 0; b < s.bins; ++b) s.magnitudes[t * s.bins + b] = std::abs(buf[b]);
  }
  return s;
}

double fit_chi_shape(std::span<const double> samples, const ChiFitConfig& cfg) {
  if (samples.size() < 8)
    throw Error(ErrorKind::Data, "fit_chi_shape: need at least 8 samples");
  bool any_positive = false;
  for (double v : samples)
    if (v > 0.0) { any_positive = true; break; }
  if (!any_positive) throw Error(ErrorKind::Data, "fit_chi_shape: all-zero input");

  const double n = static_cast<double>(samples.size());
  double log_sum = 0.0;
  double sq_sum = 0.0;
  for (double v : samples) {
    const double x = std::max(v, 1e-12);
    log_sum += std::log(x);
    sq_sum += x * x;
  }
  const double mean_log = log_sum / n;
  const double mean_sq = sq_sum / n;
  if (!std::isfinite(mean_log) || !std::isfinite(mean_sq))
    throw Error(ErrorKind::Data, "fit_chi_shape: non-finite input");

  // Profiled score: the MLE solves psi(k/2) - log k = 2 E[log x] - log(2 E[x^2]).
  // The left side is strictly increasing in k, so the root is unique.
  const double target = 2.0 * mean_log - std::log(2.0 * mean_sq);
  const auto score = [&](double k) { return digamma(0.5 * k) - std::log(k) - target; };

  double lo = cfg.bracket_lo;
  double hi = cfg.bracket_hi;
  if (score(lo) >= 0.0) return lo;
  if (score(hi) <= 0.0) return hi;

  // 2 E[log x] - log E[x^2] <= 0 by Jensen; its magnitude behaves like 1/k.
  const double spread = std::log(mean_sq) - 2.0 * mean_log;
  double k = std::clamp(spread > 0 ? 1.0 / spread : hi, lo * 1.0001, hi * 0.9999);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const double f = score(k);
    if (f == 0.0) break;
    if (f < 0.0)
      lo = k;
    else
      hi = k;
    const double deriv = 0.5 * trigamma(0.5 * k) - 1.0 / k;
    double next = k - f / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - k);
    k = next;
    if (step <= 1e-11 * std::max(1.0, k)) break;
  }

  // Report at tolerance resolution so equal-up-to-scale inputs, whose
  // sufficient statistics differ only in the last bits, give identical output.
  const double q = cfg.tolerance;
  k = std::nearbyint(k / q) * q;
  return std::clamp(k, cfg.bracket_lo, cfg.bracket_hi);
}

VoicingTrack detect_voicing(const Waveform& w, const StftConfig& cfg,
                            const VoicingConfig& vcfg) {
  cfg.validate(w.sample_rate);
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const std::size_t n_frames = frame_count(w.samples.size(), win, hop);

  VoicingTrack track;
  track.voiced.assign(n_frames, 0);
  track.f0_hz.assign(n_frames, 0.0);
  if (n_frames == 0) return track;

  const int lag_min = std::max(1, static_cast<int>(std::ceil(w.sample_rate / vcfg.f0_max_hz)));
  const int lag_max =
      std::min(win - 1, static_cast<int>(std::floor(w.sample_rate / vcfg.f0_min_hz)));

  std::vector<double> rms(n_frames, 0.0);
  std::vector<double> best_corr(n_frames, 0.0);
  std::vector<int> best_lag(n_frames, 0);
  std::vector<double> sqprefix(static_cast<std::size_t>(win) + 1);

  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = w.samples.data() + t * static_cast<std::size_t>(hop);
    rms[t] = frame_rms(std::span<const double>(x, static_cast<std::size_t>(win)));
    if (rms[t] <= 0.0 || lag_max <= lag_min) continue;

    sqprefix[0] = 0.0;
    for (int i = 0; i < win; ++i) sqprefix[i + 1] = sqprefix[i] + x[i] * x[i];

    double best = 0.0;
    int arg = 0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0;
      const int m = win - lag;
      for (int i = 0; i < m; ++i) num += x[i] * x[i + lag];
      const double e1 = sqprefix[m];
      const double e2 = sqprefix[win] - sqprefix[lag];
      if (e1 <= 0.0 || e2 <= 0.0) continue;
      const double r = num / std::sqrt(e1 * e2);
      if (r > best) {
        best = r;
        arg = lag;
      }
    }
    best_corr[t] = best;
    best_lag[t] = arg;
  }

  // Energy gate relative to the median RMS of non-silent frames.
  std::vector<double> active;
  for (double v : rms)
    if (v > 1e-8) active.push_back(v);
  if (active.empty()) return track;
  const std::size_t mid = active.size() / 2;
  std::nth_element(active.begin(), active.begin() + static_cast<std::ptrdiff_t>(mid),
                   active.end());
  const double gate = vcfg.energy_gate * active[mid];

  for (std::size_t t = 0; t < n_frames; ++t) {
    if (best_corr[t] > vcfg.autocorr_threshold && rms[t] > gate && best_lag[t] > 0) {
      track.voiced[t] = 1;
      track.f0_hz[t] = w.sample_rate / best_lag[t];
    }
  }
  return track;
}

namespace {

// Levinson-Durbin on autocorrelation r[0..p]; returns LPC coefficients a[1..p]
// of A(z) = 1 + sum a_j z^-j, or empty on numerical failure.
std::vector<double> levinson(const std::vector<double>& r, int p) {
  std::vector<double> a(static_cast<std::size_t>(p) + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  if (err <= 0.0) return {};
  for (int i = 1; i <= p; ++i) {
    double acc = r[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j) acc += a[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(i - j)];
    const double k = -acc / err;
    for (int j = 1; j <= i / 2; ++j) {
      const double tmp = a[static_cast<std::size_t>(j)] + k * a[static_cast<std::size_t>(i - j)];
      a[static_cast<std::size_t>(i - j)] += k * a[static_cast<std::size_t>(j)];
      a[static_cast<std::size_t>(j)] = tmp;
    }
    a[static_cast<std::size_t>(i)] = k;
    err *= (1.0 - k * k);
    if (err <= 0.0) return {};
  }
  return a;
}

// Durand-Kerner root finder for a monic real polynomial
// z^d + c[1] z^(d-1) + ... + c[d].
std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& coeffs) {
  const int d = static_cast<int>(coeffs.size()) - 1;
  std::vector<std::complex<double>> roots(static_cast<std::size_t>(d));
  const std::complex<double> seed(0.4, 0.9);
  std::complex<double> acc(1.0, 0.0);
  for (int i = 0; i < d; ++i) {
    acc *= seed;
    roots[static_cast<std::size_t>(i)] = acc;
  }
  const auto eval = [&](std::complex<double> z) {
    std::complex<double> v(1.0, 0.0);
    for (int i = 1; i <= d; ++i) v = v * z + coeffs[static_cast<std::size_t>(i)];
    return v;
  };
  for (int iter = 0; iter < 300; ++iter) {
    double max_step = 0.0;
    for (int i = 0; i < d; ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (int j = 0; j < d; ++j)
        if (j != i) denom *= roots[static_cast<std::size_t>(i)] - roots[static_cast<std::size_t>(j)];
      if (std::abs(denom) < 1e-30) {
        roots[static_cast<std::size_t>(i)] += std::complex<double>(1e-6, 1e-6);
        continue;
      }
      const std::complex<double> delta = eval(roots[static_cast<std::size_t>(i)]) / denom;
      roots[static_cast<std::size_t>(i)] -= delta;
      max_step = std::max(max_step, std::abs(delta));
    }
    if (max_step < 1e-12) break;
  }
  return roots;
}

}  // namespace

FormantTrack estimate_formants(const Waveform& w, const VoicingTrack& v,
                               const StftConfig& cfg, const FormantConfig& fcfg) {
  cfg.validate(w.sample_rate);
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const std::size_t n_frames = frame_count(w.samples.size(), win, hop);
  if (n_frames != v.frames())
    throw Error(ErrorKind::Data, "estimate_formants: voicing track framing mismatch");

  FormantTrack track;
  track.present.assign(n_frames, 0);
  track.f1_hz.assign(n_frames, 0.0);
  track.f2_hz.assign(n_frames, 0.0);

  std::vector<double> pre(w.samples.size());
  if (!w.samples.empty()) {
    pre[0] = w.samples[0];
    for (std::size_t i = 1; i < w.samples.size(); ++i)
      pre[i] = w.samples[i] - fcfg.preemphasis * w.samples[i - 1];
  }

  std::vector<double> hamming(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i)
    hamming[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (win - 1));

  const int p = fcfg.lpc_order;
  std::vector<double> frame(static_cast<std::size_t>(win));
  std::vector<double> r(static_cast<std::size_t>(p) + 1);

  for (std::size_t t = 0; t < n_frames; ++t) {
    if (!v.voiced[t]) continue;
    const double* x = pre.data() + t * static_cast<std::size_t>(hop);
    for (int i = 0; i < win; ++i)
      frame[static_cast<std::size_t>(i)] = x[i] * hamming[static_cast<std::size_t>(i)];

    for (int lag = 0; lag <= p; ++lag) {
      double acc = 0.0;
      for (int i = 0; i < win - lag; ++i)
        acc += frame[static_cast<std::size_t>(i)] * frame[static_cast<std::size_t>(i + lag)];
      r[static_cast<std::size_t>(lag)] = acc;
    }
    if (r[0] <= 0.0) continue;
    r[0] *= 1.0 + 1e-9;

    const std::vector<double> a = levinson(r, p);
    if (a.empty()) continue;

    const auto roots = polynomial_roots(a);
    std::vector<double> freqs;
    for (const auto& z : roots) {
      if (z.imag() <= 0.0) continue;
      const double mag = std::abs(z);
      if (mag >= 1.0 || mag <= 0.0) continue;
      const double bw = -std::log(mag) * w.sample_rate / kPi;
      if (bw >= fcfg.max_bandwidth_hz) continue;
      const double freq = std::atan2(z.imag(), z.real()) * w.sample_rate / (2.0 * kPi);
      if (freq < fcfg.min_freq_hz || freq > fcfg.max_freq_hz) continue;
      freqs.push_back(freq);
    }
    if (freqs.size() < 2) continue;
    std::sort(freqs.begin(), freqs.end());
    std::size_t second = 1;
    while (second < freqs.size() && freqs[second] <= freqs[0]) ++second;
    if (second == freqs.size()) continue;
    track.present[t] = 1;
    track.f1_hz[t] = freqs[0];
    track.f2_hz[t] = freqs[second];
  }
  return track;
}

std::vector<double> loudness_contour(const Waveform& w, const StftConfig& cfg,
                                     const LoudnessConfig& lcfg) {
  cfg.validate(w.sample_rate);
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const std::size_t n_frames = frame_count(w.samples.size(), win, hop);
  const double frame_rate = w.sample_rate / hop;

  std::vector<double> db(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = w.samples.data() + t * static_cast<std::size_t>(hop);
    const double rms = frame_rms(std::span<const double>(x, static_cast<std::size_t>(win)));
    db[t] = rms > 0.0 ? std::max(20.0 * std::log10(rms), lcfg.floor_db) : lcfg.floor_db;
  }

  const int radius = static_cast<int>(std::llround(0.5 * lcfg.smooth_ms / 1000.0 * frame_rate));
  if (radius <= 0 || n_frames == 0) return db;
  std::vector<double> smooth(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t a = t >= static_cast<std::size_t>(radius) ? t - static_cast<std::size_t>(radius) : 0;
    const std::size_t b = std::min(n_frames - 1, t + static_cast<std::size_t>(radius));
    double acc = 0.0;
    for (std::size_t i = a; i <= b; ++i) acc += db[i];
    smooth[t] = acc / static_cast<double>(b - a + 1);
  }
  return smooth;
}

double count_loudness_peaks(std::span<const double> contour, double frame_rate,
                            double duration_s, const LoudnessConfig& lcfg) {
  (void)frame_rate;
  if (duration_s <= 0.0)
    throw Error(ErrorKind::Data, "count_loudness_peaks: duration must be positive");
  const std::size_t n = contour.size();
  int count = 0;
  std::size_t i = 1;
  while (n >= 3 && i + 1 < n) {
    if (!(contour[i] > contour[i - 1])) {
      ++i;
      continue;
    }
    // Walk over a possible plateau.
    std::size_t j = i;
    while (j + 1 < n && contour[j + 1] == contour[i]) ++j;
    if (j + 1 >= n || contour[j + 1] > contour[i]) {
      i = j + 1;
      continue;
    }
    // Peak at [i..j]; prominence against the higher of the two valley floors.
    const double h = contour[i];
    double left_min = h;
    for (std::size_t k = i; k-- > 0;) {
      if (contour[k] > h) break;
      left_min = std::min(left_min, contour[k]);
    }
    double right_min = h;
    for (std::size_t k = j + 1; k < n; ++k) {
      if (contour[k] > h) break;
      right_min = std::min(right_min, contour[k]);
    }
    if (h - std::max(left_min, right_min) >= lcfg.peak_prominence_db) ++count;
    i = j + 1;
  }
  return count / duration_s;
}

std::array<double, 10> octave_band_edges(double nyquist_hz) {
  std::array<double, 10> edges{};
  edges[0] = 0.0;
  for (int k = 1; k <= 8; ++k) edges[static_cast<std::size_t>(k)] = 31.25 * std::exp2(k - 0.5);
  edges[9] = nyquist_hz;
  return edges;
}

std::array<double, 9> octave_band_powers(const Spectrogram& s, const LtasConfig& lcfg) {
  const double nyquist = s.sample_rate / 2.0;
  const auto edges = octave_band_edges(nyquist);

  std::vector<int> band_of(s.bins, -1);
  for (std::size_t b = 0; b < s.bins; ++b) {
    const double f = s.bin_freqs[b];
    for (int k = 0; k < 9; ++k) {
      if (f > edges[static_cast<std::size_t>(k)] && f <= edges[static_cast<std::size_t>(k) + 1]) {
        band_of[b] = k;
        break;
      }
    }
  }

  // Frame activity from a Parseval-based RMS estimate of the windowed frame.
  const double norm = static_cast<double>(s.config.nfft) * s.window_energy;
  std::array<double, 9> sums{};
  std::size_t n_active = 0;
  for (std::size_t t = 0; t < s.frames; ++t) {
    double total = 0.0;
    std::array<double, 9> frame_band{};
    for (std::size_t b = 0; b < s.bins; ++b) {
      const double pw = s.mag(t, b) * s.mag(t, b);
      const bool unique = (b == 0) || (b == s.bins - 1 && s.config.nfft % 2 == 0);
      total += (unique ? 1.0 : 2.0) * pw;
      if (band_of[b] >= 0) frame_band[static_cast<std::size_t>(band_of[b])] += pw;
    }
    const double mean_square = total / norm;
    if (mean_square <= 0.0 || 10.0 * std::log10(mean_square) <= lcfg.active_gate_db) continue;
    ++n_active;
    for (int k = 0; k < 9; ++k) sums[static_cast<std::size_t>(k)] += frame_band[static_cast<std::size_t>(k)];
  }

  std::array<double, 9> out{};
  for (int k = 0; k < 9; ++k) {
    if (n_active == 0 || sums[static_cast<std::size_t>(k)] <= 0.0) {
      out[static_cast<std::size_t>(k)] = lcfg.floor_db;
      continue;
    }
    const double mean_power = sums[static_cast<std::size_t>(k)] / static_cast<double>(n_active);
    out[static_cast<std::size_t>(k)] = std::max(10.0 * std::log10(mean_power), lcfg.floor_db);
  }
  return out;
}

StatsQuad descriptive_stats(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorKind::Data, "descriptive_stats: empty input");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  StatsQuad q;
  q.mean = mean;
  if (m2 <= 0.0) return q;  // constant input: std = skew = kurt = 0 by convention
  q.std = std::sqrt(m2);
  q.skewness = m3 / (m2 * q.std);
  q.kurtosis = m4 / (m2 * m2) - 3.0;
  return q;
}

}  // namespace msd::dsp
