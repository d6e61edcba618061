#ifndef BFK_VERSION_HPP
#define BFK_VERSION_HPP

namespace bfk {

inline constexpr const char* kVersion = "0.1.0";

}

#endif
