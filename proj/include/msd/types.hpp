#ifndef MSD_TYPES_HPP
#define MSD_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace msd {

/// Error categories, mapped to distinct CLI exit codes.
enum class ErrorKind {
  Usage,        // bad arguments, unknown config keys
  Data,         // malformed files, invariant violations in inputs
  Convergence,  // an iterative solver failed to converge
  Internal,     // should-not-happen conditions
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

enum class ClassLabel { Neurotypical, Dysarthria, AoS };

inline bool is_patient(ClassLabel label) { return label != ClassLabel::Neurotypical; }

inline const char* to_string(ClassLabel label) {
  switch (label) {
    case ClassLabel::Neurotypical: return "neurotypical";
    case ClassLabel::Dysarthria: return "dysarthria";
    case ClassLabel::AoS: return "aos";
  }
  return "?";
}

inline ClassLabel parse_class_label(const std::string& text) {
  if (text == "neurotypical") return ClassLabel::Neurotypical;
  if (text == "dysarthria") return ClassLabel::Dysarthria;
  if (text == "aos") return ClassLabel::AoS;
  throw Error(ErrorKind::Data, "unknown class label: \"" + text + "\"");
}

/// Mono waveform, amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Deterministic stream mixer for deriving independent sub-seeds
/// (repetition / fold / stage) from one experiment seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t z = seed;
  for (std::uint64_t v : {a + 1, b + 1, c + 1}) {
    z += 0x9e3779b97f4a7c15ULL * v;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
  }
  return z;
}

}  // namespace msd

#endif  // MSD_TYPES_HPP
