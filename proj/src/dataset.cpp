#include "msd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace msd::dataset {

namespace {

using nlohmann::json;

[[noreturn]] void manifest_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::Data,
              "manifest line " + std::to_string(line_no) + ": " + what);
}

ManifestEntry parse_manifest_line(const json& j, std::size_t line_no) {
  if (!j.is_object()) manifest_error(line_no, "expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "paths" && key != "label" && key != "trim" && key != "meta")
      manifest_error(line_no, "unknown key \"" + key + "\"");
  }
  ManifestEntry e;
  if (!j.contains("id") || !j["id"].is_string())
    manifest_error(line_no, "missing string field \"id\"");
  e.recording_id = j["id"].get<std::string>();

  if (!j.contains("paths") || !j["paths"].is_array() || j["paths"].empty())
    manifest_error(line_no, "\"paths\" must be a non-empty array");
  for (const auto& p : j["paths"]) {
    if (!p.is_string()) manifest_error(line_no, "\"paths\" entries must be strings");
    e.audio_paths.push_back(p.get<std::string>());
  }

  if (!j.contains("label") || !j["label"].is_string())
    manifest_error(line_no, "missing string field \"label\"");
  try {
    e.label = parse_class_label(j["label"].get<std::string>());
  } catch (const Error& err) {
    manifest_error(line_no, err.what());
  }

  if (j.contains("trim")) {
    if (!j["trim"].is_array() || j["trim"].size() != e.audio_paths.size())
      manifest_error(line_no, "\"trim\" must list one [lead_s, trail_s] pair per path");
    for (const auto& t : j["trim"]) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
        manifest_error(line_no, "\"trim\" entries must be [lead_s, trail_s] numbers");
      const double lead = t[0].get<double>();
      const double trail = t[1].get<double>();
      if (lead < 0.0 || trail < 0.0) manifest_error(line_no, "trim spans must be non-negative");
      e.trim_spans.emplace_back(lead, trail);
    }
  }

  if (j.contains("meta")) {
    if (!j["meta"].is_object()) manifest_error(line_no, "\"meta\" must be an object");
    for (const auto& [key, value] : j["meta"].items()) {
      if (!value.is_string()) manifest_error(line_no, "\"meta\" values must be strings");
      e.speaker_meta[key] = value.get<std::string>();
    }
  }
  return e;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Data, "cannot open manifest: " + path);

  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      manifest_error(line_no, std::string("parse error: ") + ex.what());
    }
    ManifestEntry e = parse_manifest_line(j, line_no);
    if (std::find(seen_ids.begin(), seen_ids.end(), e.recording_id) != seen_ids.end())
      manifest_error(line_no, "duplicate recording id \"" + e.recording_id + "\"");
    seen_ids.push_back(e.recording_id);
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform decode_audio(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Data, "cannot open audio file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::Data, path + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      if (std::memcmp(tag, "data", 4) == 0)
        throw Error(ErrorKind::Data, path + ": truncated data chunk");
      throw Error(ErrorKind::Data, path + ": truncated chunk");
    }
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorKind::Data, path + ": malformed fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorKind::Data, path + ": malformed extensible fmt chunk");
        format = read_u16(bytes.data() + body + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size % 2);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr)
    throw Error(ErrorKind::Data, path + ": missing fmt or data chunk");
  if (channels == 0 || rate == 0)
    throw Error(ErrorKind::Data, path + ": malformed fmt chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw Error(ErrorKind::Data,
                path + ": unsupported codec (only 16-bit PCM and 32-bit float WAV)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t block = bytes_per_sample * channels;
  if (data_size % block != 0)
    throw Error(ErrorKind::Data, path + ": truncated file (partial sample block)");
  const std::size_t n_frames = data_size / block;

  Waveform w;
  w.sample_rate = static_cast<double>(rate);
  w.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * block + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        if (!std::isfinite(v))
          throw Error(ErrorKind::Data, path + ": non-finite sample value");
        acc += static_cast<double>(v);
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

namespace {

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

void write_wav(const std::string& path, const std::vector<std::vector<double>>& channels,
               double sample_rate, WavFormat format) {
  if (channels.empty()) throw Error(ErrorKind::Data, "write_wav: no channels");
  const std::size_t n = channels[0].size();
  for (const auto& c : channels)
    if (c.size() != n) throw Error(ErrorKind::Data, "write_wav: channel length mismatch");

  const std::uint16_t n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(n_ch * bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(n * block);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  append_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  append_u32(out, 16);
  append_u16(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  append_u16(out, n_ch);
  append_u32(out, static_cast<std::uint32_t>(sample_rate));
  append_u32(out, static_cast<std::uint32_t>(sample_rate) * block);
  append_u16(out, block);
  append_u16(out, bits);
  out += "data";
  append_u32(out, data_size);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint16_t c = 0; c < n_ch; ++c) {
      const double v = channels[c][i];
      if (format == WavFormat::Pcm16) {
        const double scaled = std::clamp(v, -1.0, 1.0) * 32767.0;
        const std::int16_t q = static_cast<std::int16_t>(std::llround(scaled));
        out.push_back(static_cast<char>(q & 0xFF));
        out.push_back(static_cast<char>((q >> 8) & 0xFF));
      } else {
        const float f = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &f, 4);
        out.append(buf, 4);
      }
    }
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Data, "cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

namespace {

double bessel_i0(double x) {
  double term = 1.0, sum = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (k * k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Waveform resample(const Waveform& w, double target_rate, const ResampleConfig& cfg) {
  if (target_rate <= 0) throw Error(ErrorKind::Data, "resample: target rate must be positive");
  if (w.sample_rate <= 0) throw Error(ErrorKind::Data, "resample: source rate must be positive");
  if (w.sample_rate == target_rate) return w;

  const double step = w.sample_rate / target_rate;  // input samples per output sample
  const double cutoff = 0.5 * std::min(1.0, target_rate / w.sample_rate) * cfg.rolloff;
  const double half_width = cfg.zero_crossings / (2.0 * cutoff);

  // Kernel table, linearly interpolated at 256 steps per input sample.
  constexpr int kSteps = 256;
  const std::size_t table_size = static_cast<std::size_t>(half_width * kSteps) + 2;
  std::vector<double> table(table_size);
  const double i0_beta = bessel_i0(cfg.kaiser_beta);
  for (std::size_t i = 0; i < table_size; ++i) {
    const double u = static_cast<double>(i) / kSteps;
    const double t = u / half_width;
    if (t >= 1.0) {
      table[i] = 0.0;
      continue;
    }
    const double window = bessel_i0(cfg.kaiser_beta * std::sqrt(1.0 - t * t)) / i0_beta;
    table[i] = sinc(2.0 * cutoff * u) * window;
  }
  const auto kernel = [&](double u) {
    const double a = std::abs(u) * kSteps;
    const std::size_t idx = static_cast<std::size_t>(a);
    if (idx + 1 >= table_size) return 0.0;
    const double frac = a - static_cast<double>(idx);
    return table[idx] + frac * (table[idx + 1] - table[idx]);
  };

  const std::size_t n_in = w.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate / w.sample_rate));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t n = 0; n < n_out; ++n) {
    const double center = static_cast<double>(n) * step;
    const long first = std::max<long>(0, static_cast<long>(std::ceil(center - half_width)));
    const long last =
        std::min<long>(static_cast<long>(n_in) - 1, static_cast<long>(std::floor(center + half_width)));
    double acc = 0.0, wsum = 0.0;
    for (long k = first; k <= last; ++k) {
      const double weight = kernel(center - static_cast<double>(k));
      acc += weight * w.samples[static_cast<std::size_t>(k)];
      wsum += weight;
    }
    out.samples[n] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  return out;
}

Waveform preprocess(const ManifestEntry& entry, const PreprocessConfig& cfg) {
  if (!entry.trim_spans.empty() && entry.trim_spans.size() != entry.audio_paths.size())
    throw Error(ErrorKind::Data,
                entry.recording_id + ": trim spans do not match the number of audio paths");

  Waveform out;
  out.sample_rate = cfg.target_rate;
  for (std::size_t i = 0; i < entry.audio_paths.size(); ++i) {
    Waveform part = decode_audio(entry.audio_paths[i]);
    if (part.sample_rate != cfg.target_rate) part = resample(part, cfg.target_rate, cfg.resample);

    std::size_t lead = 0, trail = 0;
    if (!entry.trim_spans.empty()) {
      lead = static_cast<std::size_t>(std::llround(entry.trim_spans[i].first * cfg.target_rate));
      trail = static_cast<std::size_t>(std::llround(entry.trim_spans[i].second * cfg.target_rate));
    }
    if (lead + trail >= part.samples.size())
      throw Error(ErrorKind::Data, entry.recording_id + ": trim spans exceed file length for " +
                                       entry.audio_paths[i]);
    out.samples.insert(out.samples.end(), part.samples.begin() + static_cast<std::ptrdiff_t>(lead),
                       part.samples.end() - static_cast<std::ptrdiff_t>(trail));
  }
  return out;
}

}  // namespace msd::dataset
