#ifndef MSD_DATASET_HPP
#define MSD_DATASET_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "msd/types.hpp"

namespace msd::dataset {

/// One recording: a list of sentence files concatenated after resampling,
/// with optional per-file lead/trail trims in seconds.
struct ManifestEntry {
  std::string recording_id;
  std::vector<std::string> audio_paths;
  ClassLabel label = ClassLabel::Neurotypical;
  std::map<std::string, std::string> speaker_meta;
  std::vector<std::pair<double, double>> trim_spans;  // empty, or one per path
};

/// Parse a JSON Lines manifest. Entries come back in file order; duplicate
/// ids, unknown labels, and malformed lines raise Error with the line number.
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// Decode a PCM WAV file (16-bit integer or 32-bit float). Multichannel
/// input is averaged to mono; integer samples are scaled by 1/32768.
Waveform decode_audio(const std::string& path);

enum class WavFormat { Pcm16, Float32 };

/// Test-fixture and interchange writer; channels must have equal lengths.
void write_wav(const std::string& path, const std::vector<std::vector<double>>& channels,
               double sample_rate, WavFormat format = WavFormat::Pcm16);

/// Windowed-sinc resampler parameters (Kaiser window). Defaults give a
/// stopband comfortably beyond 60 dB.
struct ResampleConfig {
  double rolloff = 0.945;
  double kaiser_beta = 8.6;
  int zero_crossings = 32;
};

Waveform resample(const Waveform& w, double target_rate, const ResampleConfig& cfg = {});

struct PreprocessConfig {
  double target_rate = 16000.0;
  ResampleConfig resample;
};

/// Decode, resample to the target rate, trim, and concatenate all files of
/// an entry, in manifest order.
Waveform preprocess(const ManifestEntry& entry, const PreprocessConfig& cfg = {});

}  // namespace msd::dataset

#endif  // MSD_DATASET_HPP
