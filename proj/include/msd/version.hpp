#ifndef MSD_VERSION_HPP
#define MSD_VERSION_HPP

namespace msd {

inline constexpr const char* kToolName = "msdkit";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace msd

#endif  // MSD_VERSION_HPP
