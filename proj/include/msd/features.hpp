#ifndef MSD_FEATURES_HPP
#define MSD_FEATURES_HPP

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msd/dsp.hpp"
#include "msd/types.hpp"

namespace msd::features {

inline constexpr int kFeatureCount = 28;

/// Stable names and positions of the 28 features, in concatenation order:
/// spectral sparsity (4), formants and voiced-region durations (10),
/// loudness peaks and nine octave-band powers (10), temporal sparsity (4).
const std::vector<std::string>& feature_names();

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
};

struct FeatureConfig {
  dsp::StftConfig stft;
  dsp::VoicingConfig voicing;
  dsp::FormantConfig formant;
  dsp::LoudnessConfig loudness;
  dsp::LtasConfig ltas;
  dsp::ChiFitConfig chi;
  int voiced_gap_merge_frames = 2;
  int voiced_min_region_frames = 3;
};

/// Chi shape parameter per time frame or per frequency bin, skipping
/// all-zero frames/bins.
dsp::ShapeSeries shape_series(const dsp::Spectrogram& s, dsp::ShapeAxis axis,
                              const dsp::ChiFitConfig& chi = {});

std::array<double, 4> spectral_sparsity_features(const dsp::Spectrogram& s,
                                                 const dsp::ChiFitConfig& chi = {});

/// Maximal voiced runs after closing gaps of at most gap_merge frames;
/// runs shorter than min_len frames are discarded. Returns [begin, end) pairs.
std::vector<std::pair<std::size_t, std::size_t>> voiced_regions(
    const std::vector<std::uint8_t>& voiced, int gap_merge, int min_len);

std::array<double, 10> formant_voicing_features(const dsp::FormantTrack& ft,
                                                const dsp::VoicingTrack& v, double frame_rate,
                                                int gap_merge = 2, int min_len = 3);

std::array<double, 10> loudness_ltas_features(const Waveform& w, const dsp::Spectrogram& s,
                                              const dsp::LoudnessConfig& loudness = {},
                                              const dsp::LtasConfig& ltas = {});

std::array<double, 4> temporal_sparsity_features(const dsp::Spectrogram& s,
                                                 const dsp::ChiFitConfig& chi = {});

/// Full 28-dimensional vector for a preprocessed 16 kHz waveform.
FeatureVector extract_features(const Waveform& w, const FeatureConfig& cfg = {});

/// Feature rows with ids and labels; column count is not fixed to 28 so that
/// externally computed feature sets can be evaluated through the same path.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::string> ids;
  std::vector<ClassLabel> labels;
  std::vector<double> values;  // rows x cols, row-major

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values.data() + r * cols(), cols());
  }
};

std::string feature_csv_string(const FeatureMatrix& m);
void write_feature_csv(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(const std::string& path);

}  // namespace msd::features

#endif  // MSD_FEATURES_HPP
