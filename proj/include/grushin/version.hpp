#pragma once

namespace grushin {

#ifdef GRUSHIN_VERSION
inline constexpr const char* version = GRUSHIN_VERSION;
#else
inline constexpr const char* version = "0.1.0";
#endif

} // namespace grushin
