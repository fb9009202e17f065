#ifndef SEQCURVE_VERSION_HPP
#define SEQCURVE_VERSION_HPP

namespace seqcurve {
inline constexpr const char* kVersion = "1.0.0";
}

#endif
