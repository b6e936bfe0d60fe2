#pragma once

#ifndef SHRINKLAB_VERSION
#define SHRINKLAB_VERSION "0.1.0"
#endif

#ifndef SHRINKLAB_GIT_HASH
#define SHRINKLAB_GIT_HASH "unknown"
#endif

namespace shrinklab {

inline constexpr const char* version() { return SHRINKLAB_VERSION; }
inline constexpr const char* git_hash() { return SHRINKLAB_GIT_HASH; }

}  // namespace shrinklab
