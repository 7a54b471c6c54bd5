#include "msd/artifact.hpp"

#include "msd/types.hpp"

namespace msd::artifact {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

int major_version(const std::string& version) {
  const auto dot = version.find('.');
  try {
    return std::stoi(dot == std::string::npos ? version : version.substr(0, dot));
  } catch (const std::exception&) {
    throw Error(ErrorKind::Data, "artifact: malformed schema version \"" + version + "\"");
  }
}

}  // namespace

std::string seal(nlohmann::json j) {
  j["schema_version"] = kSchemaVersion;
  j.erase("checksum");
  j["checksum"] = "fnv1a:" + hex64(fnv1a(j.dump()));
  return j.dump(2) + "\n";
}

nlohmann::json unseal(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Data, std::string("artifact: parse error: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_string())
    throw Error(ErrorKind::Data, "artifact: missing schema_version");
  const std::string version = j["schema_version"].get<std::string>();
  if (major_version(version) != major_version(kSchemaVersion))
    throw Error(ErrorKind::Data, "artifact: unsupported schema version " + version +
                                     " (this build reads " + kSchemaVersion + ")");
  if (!j.contains("checksum") || !j["checksum"].is_string())
    throw Error(ErrorKind::Data, "artifact: missing checksum");
  const std::string stored = j["checksum"].get<std::string>();
  j.erase("checksum");
  const std::string expected = "fnv1a:" + hex64(fnv1a(j.dump()));
  if (stored != expected)
    throw Error(ErrorKind::Data, "artifact: checksum mismatch (corrupted file?)");
  return j;
}

}  // namespace msd::artifact
