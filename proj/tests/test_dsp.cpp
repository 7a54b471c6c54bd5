#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "msd/dsp.hpp"
#include "test_helpers.hpp"

using namespace msd;
using msd::test::Rng;

namespace {

// Profiled per-sample log-likelihood of a Chi(k, scale) fit, scale at its MLE.
double chi_profile_loglik(double k, std::span<const double> samples) {
  double log_sum = 0.0, sq_sum = 0.0;
  for (double v : samples) {
    const double x = std::max(v, 1e-12);
    log_sum += std::log(x);
    sq_sum += x * x;
  }
  const double n = static_cast<double>(samples.size());
  const double mean_log = log_sum / n;
  const double mean_sq = sq_sum / n;
  return (k - 1.0) * mean_log - k / 2.0 - (k / 2.0 - 1.0) * std::log(2.0) -
         (k / 2.0) * std::log(mean_sq / k) - std::lgamma(k / 2.0);
}

}  // namespace

TEST_SUITE_BEGIN("dsp");

TEST_CASE("stft frame count and zero input") {
  dsp::StftConfig cfg;
  const auto w = test::silence(1.0, 16000.0);
  const auto s = dsp::stft(w, cfg);
  CHECK(s.frames == 97);  // floor((16000 - 512) / 160) + 1
  CHECK(s.bins == 257);
  CHECK(s.frame_rate == doctest::Approx(100.0));
  CHECK(std::all_of(s.magnitudes.begin(), s.magnitudes.end(),
                    [](double v) { return v == 0.0; }));

  SUBCASE("frame count formula holds across lengths") {
    for (std::size_t n : {512u, 513u, 671u, 672u, 16000u}) {
      Waveform v;
      v.sample_rate = 16000.0;
      v.samples.assign(n, 0.0);
      CHECK(dsp::stft(v, cfg).frames == (n - 512) / 160 + 1);
    }
  }

  SUBCASE("shorter than one window errors") {
    Waveform v;
    v.sample_rate = 16000.0;
    v.samples.assign(511, 0.0);
    CHECK_THROWS_AS((void)dsp::stft(v, cfg), Error);
  }
}

TEST_CASE("stft of a 1 kHz tone matches the DFT oracle") {
  dsp::StftConfig cfg;
  const auto w = test::tone(1000.0, 0.5, 16000.0, 1.0);
  const auto s = dsp::stft(w, cfg);

  // Every interior frame peaks at the bin nearest 1000 Hz (bin 32).
  for (std::size_t t = 1; t + 1 < s.frames; ++t) {
    std::size_t argmax = 0;
    for (std::size_t b = 1; b < s.bins; ++b)
      if (s.mag(t, b) > s.mag(t, argmax)) argmax = b;
    CHECK(argmax == 32);
  }

  // One frame checked against a naive DFT of the same windowed samples.
  const std::size_t frame = 3;
  std::vector<double> windowed(512);
  for (std::size_t i = 0; i < 512; ++i) {
    const double hann = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / 512.0));
    windowed[i] = w.samples[frame * 160 + i] * hann;
  }
  const auto oracle = test::dft_magnitudes(windowed, 512);
  for (std::size_t b = 0; b < s.bins; ++b)
    CHECK(s.mag(frame, b) == doctest::Approx(oracle[b]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("chi shape fit recovers known families") {
  Rng rng(2024);
  for (int k : {1, 2}) {
    std::vector<double> samples(10000);
    for (double& v : samples) v = rng.chi(k);
    const double est = dsp::fit_chi_shape(samples);
    CHECK(est == doctest::Approx(static_cast<double>(k)).epsilon(0.1));
  }
}

TEST_CASE("chi shape fit is exactly scale invariant") {
  Rng rng(7);
  std::vector<double> samples(5000);
  for (double& v : samples) v = rng.chi(2);
  const double base = dsp::fit_chi_shape(samples);
  for (double c : {10.0, 0.003, 123.456}) {
    std::vector<double> scaled(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) scaled[i] = c * samples[i];
    CHECK(dsp::fit_chi_shape(scaled) == base);  // bit-identical
  }
}

TEST_CASE("chi shape fit is a local likelihood maximum") {
  Rng rng(99);
  for (int k : {1, 4}) {
    std::vector<double> samples(4000);
    for (double& v : samples) v = rng.chi(k);
    const double est = dsp::fit_chi_shape(samples);
    CHECK(chi_profile_loglik(est, samples) >= chi_profile_loglik(est * 1.01, samples));
    CHECK(chi_profile_loglik(est, samples) >= chi_profile_loglik(est * 0.99, samples));
  }
}

TEST_CASE("chi shape fit edge cases") {
  CHECK_THROWS_AS((void)dsp::fit_chi_shape(std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS((void)dsp::fit_chi_shape(std::vector<double>(20, 0.0)), Error);

  // Constant positive input: maximal concentration, clamped at the bracket top.
  CHECK(dsp::fit_chi_shape(std::vector<double>(100, 3.5)) == doctest::Approx(100.0));

  // Zeros are floored, not fatal, as long as one sample is positive.
  std::vector<double> mixed(100, 0.0);
  Rng rng(5);
  for (std::size_t i = 0; i < 50; ++i) mixed[i] = rng.chi(2);
  CHECK(dsp::fit_chi_shape(mixed) > 0.0);
}

TEST_CASE("voicing detection") {
  dsp::StftConfig cfg;

  SUBCASE("sawtooth at 120 Hz is voiced with correct f0") {
    const auto w = test::sawtooth(120.0, 1.0, 16000.0);
    const auto v = dsp::detect_voicing(w, cfg);
    std::size_t voiced = 0;
    std::vector<double> f0s;
    for (std::size_t t = 0; t < v.frames(); ++t) {
      if (v.voiced[t]) {
        ++voiced;
        f0s.push_back(v.f0_hz[t]);
        CHECK(v.f0_hz[t] >= 50.0);
        CHECK(v.f0_hz[t] <= 500.0);
      }
    }
    CHECK(voiced >= v.frames() * 9 / 10);
    std::sort(f0s.begin(), f0s.end());
    CHECK(f0s[f0s.size() / 2] == doctest::Approx(120.0).epsilon(0.05));
  }

  SUBCASE("white noise is mostly unvoiced") {
    const auto w = test::white_noise(1.0, 16000.0, 11);
    const auto v = dsp::detect_voicing(w, cfg);
    std::size_t voiced = 0;
    for (auto flag : v.voiced) voiced += flag;
    CHECK(voiced <= v.frames() / 5);
  }

  SUBCASE("silence has no voiced frames") {
    const auto v = dsp::detect_voicing(test::silence(1.0, 16000.0), cfg);
    CHECK(std::none_of(v.voiced.begin(), v.voiced.end(), [](auto f) { return f != 0; }));
  }
}

TEST_CASE("formant estimation on a synthetic vowel") {
  dsp::StftConfig cfg;
  const auto w = test::synthetic_vowel(700.0, 1200.0, 1.0, 16000.0);
  const auto v = dsp::detect_voicing(w, cfg);
  const auto ft = dsp::estimate_formants(w, v, cfg);

  std::vector<double> f1, f2;
  for (std::size_t t = 0; t < ft.frames(); ++t) {
    CHECK(ft.frames() == v.frames());
    if (!v.voiced[t]) CHECK(!ft.present[t]);  // only voiced frames carry formants
    if (ft.present[t]) {
      CHECK(ft.f1_hz[t] < ft.f2_hz[t]);
      CHECK(ft.f1_hz[t] >= 90.0);
      CHECK(ft.f2_hz[t] <= 5500.0);
      f1.push_back(ft.f1_hz[t]);
      f2.push_back(ft.f2_hz[t]);
    }
  }
  REQUIRE(f1.size() >= 8);
  std::sort(f1.begin(), f1.end());
  std::sort(f2.begin(), f2.end());
  CHECK(f1[f1.size() / 2] == doctest::Approx(700.0).epsilon(50.0 / 700.0));
  CHECK(f2[f2.size() / 2] == doctest::Approx(1200.0).epsilon(75.0 / 1200.0));
}

TEST_CASE("formant estimation degrades gracefully on a single resonator") {
  dsp::StftConfig cfg;
  Waveform w;
  w.sample_rate = 16000.0;
  w.samples.assign(16000, 0.0);
  for (std::size_t i = 0; i < w.samples.size(); i += 160) w.samples[i] = 1.0;
  test::resonate(w.samples, 500.0, 80.0, 16000.0);
  const auto v = dsp::detect_voicing(w, cfg);
  const auto ft = dsp::estimate_formants(w, v, cfg);  // must not crash
  for (std::size_t t = 0; t < ft.frames(); ++t)
    if (ft.present[t]) CHECK(ft.f1_hz[t] < ft.f2_hz[t]);
}

TEST_CASE("loudness contour") {
  dsp::StftConfig cfg;

  SUBCASE("constant tone is flat in the interior") {
    const auto w = test::tone(500.0, 1.0, 16000.0, 0.3);
    const auto c = dsp::loudness_contour(w, cfg);
    REQUIRE(c.size() == 97);
    const auto lo = std::minmax_element(c.begin() + 10, c.end() - 10);
    CHECK(*lo.second - *lo.first < 0.5);
  }

  SUBCASE("silence sits at the floor") {
    const auto c = dsp::loudness_contour(test::silence(1.0, 16000.0), cfg);
    CHECK(std::all_of(c.begin(), c.end(), [](double v) { return v == -80.0; }));
  }

  SUBCASE("4 Hz AM tone oscillates at the modulation rate") {
    const auto w = test::am_tone(1000.0, 4.0, 0.5, 5.0, 16000.0);
    const auto c = dsp::loudness_contour(w, cfg);
    const double rate = dsp::count_loudness_peaks(c, 100.0, w.duration_s());
    CHECK(rate == doctest::Approx(4.0).epsilon(0.1));
  }
}

TEST_CASE("loudness peak counting rules") {
  SUBCASE("flat contour has no peaks") {
    std::vector<double> flat(200, -30.0);
    CHECK(dsp::count_loudness_peaks(flat, 100.0, 2.0) == 0.0);
  }

  SUBCASE("a single bump is one peak") {
    std::vector<double> c(200, -80.0);
    for (std::size_t i = 90; i < 110; ++i)
      c[i] = -80.0 + 40.0 * std::sin(std::numbers::pi * (i - 90) / 20.0);
    CHECK(dsp::count_loudness_peaks(c, 100.0, 2.0) == doctest::Approx(0.5));  // 1 over 2 s
  }

  SUBCASE("prominence below the threshold does not count") {
    std::vector<double> c(100, -30.0);
    c[50] = -29.0;  // 1.0 dB bump < 1.2 dB prominence
    CHECK(dsp::count_loudness_peaks(c, 100.0, 1.0) == 0.0);
    c[50] = -28.0;  // 2.0 dB bump
    CHECK(dsp::count_loudness_peaks(c, 100.0, 1.0) == 1.0);
  }

  SUBCASE("non-positive duration is rejected") {
    std::vector<double> c(10, 0.0);
    CHECK_THROWS_AS((void)dsp::count_loudness_peaks(c, 100.0, 0.0), Error);
  }
}

TEST_CASE("octave band powers") {
  dsp::StftConfig cfg;

  SUBCASE("a 1 kHz tone dominates its band by 20 dB") {
    const auto s = dsp::stft(test::tone(1000.0, 1.0, 16000.0, 0.5), cfg);
    const auto bands = dsp::octave_band_powers(s);
    for (std::size_t k = 0; k < 9; ++k) {
      if (k == 5) continue;
      CHECK(bands[5] >= bands[k] + 20.0);
    }
  }

  SUBCASE("white noise gains about 3 dB per octave") {
    const auto s = dsp::stft(test::white_noise(4.0, 16000.0, 3), cfg);
    const auto bands = dsp::octave_band_powers(s);
    for (std::size_t k = 5; k <= 7; ++k)
      CHECK(bands[k] - bands[k - 1] == doctest::Approx(3.0).epsilon(0.5));
  }

  SUBCASE("silence sits at the band floor") {
    const auto s = dsp::stft(test::silence(1.0, 16000.0), cfg);
    const auto bands = dsp::octave_band_powers(s);
    CHECK(std::all_of(bands.begin(), bands.end(), [](double v) { return v == -100.0; }));
  }

  SUBCASE("band edges partition (0, Nyquist] without gap or overlap") {
    const auto edges = dsp::octave_band_edges(8000.0);
    CHECK(edges.front() == 0.0);
    CHECK(edges.back() == 8000.0);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) CHECK(edges[k] < edges[k + 1]);
    // Every strictly positive bin frequency lands in exactly one band.
    for (int b = 1; b <= 256; ++b) {
      const double f = 31.25 * b;
      int hits = 0;
      for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        if (f > edges[k] && f <= edges[k + 1]) ++hits;
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("descriptive stats") {
  SUBCASE("hand-computed moments of {1,2,3,4}") {
    const auto q = dsp::descriptive_stats(std::vector<double>{1, 2, 3, 4});
    CHECK(q.mean == doctest::Approx(2.5));
    CHECK(q.std == doctest::Approx(std::sqrt(1.25)));
    CHECK(q.skewness == doctest::Approx(0.0));
    CHECK(q.kurtosis == doctest::Approx(2.5625 / (1.25 * 1.25) - 3.0));
  }

  SUBCASE("constant input uses the degenerate convention") {
    const auto q = dsp::descriptive_stats(std::vector<double>{5, 5, 5});
    CHECK(q.mean == 5.0);
    CHECK(q.std == 0.0);
    CHECK(q.skewness == 0.0);
    CHECK(q.kurtosis == 0.0);
  }

  SUBCASE("symmetric input has zero skewness") {
    const auto q = dsp::descriptive_stats(std::vector<double>{-3, -1, 1, 3});
    CHECK(q.skewness == doctest::Approx(0.0));
  }

  SUBCASE("permutation invariance") {
    Rng rng(13);
    std::vector<double> x(64);
    for (double& v : x) v = rng.gaussian();
    const auto a = dsp::descriptive_stats(x);
    std::vector<double> shuffled = x;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[0], shuffled[31]);
    const auto b = dsp::descriptive_stats(shuffled);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(a.std == doctest::Approx(b.std).epsilon(1e-12));
    CHECK(a.kurtosis == doctest::Approx(b.kurtosis).epsilon(1e-12));
    CHECK(a.skewness == doctest::Approx(b.skewness).epsilon(1e-10).scale(1.0));
  }

  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS((void)dsp::descriptive_stats(std::vector<double>{}), Error);
  }
}

TEST_SUITE_END();
