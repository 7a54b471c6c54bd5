#ifndef MSD_ARTIFACT_HPP
#define MSD_ARTIFACT_HPP

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace msd::artifact {

inline constexpr const char* kSchemaVersion = "1.0";

std::uint64_t fnv1a(std::string_view bytes);

/// Stamp the schema version and a content checksum onto the object and
/// serialize it.
std::string seal(nlohmann::json j);

/// Parse, reject artifacts from a newer major schema version, verify the
/// checksum, and return the payload with the checksum field removed.
nlohmann::json unseal(const std::string& bytes);

}  // namespace msd::artifact

#endif  // MSD_ARTIFACT_HPP
