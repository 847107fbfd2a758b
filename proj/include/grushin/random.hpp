#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace grushin {

/// SplitMix64 finaliser, used to derive independent per-sample seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0)
{
    return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

using Rng = std::mt19937_64;

/// Standard complex Gaussian, E|z|^2 = 1.
inline std::complex<double> complex_gaussian(Rng& rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

} // namespace grushin
