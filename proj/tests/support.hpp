#pragma once

#include <random>

#include "ddisac/ddchan.hpp"
#include "ddisac/types.hpp"

namespace ddisac::test {

inline CVector random_cvector(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CVector v(n);
    for (int i = 0; i < n; ++i) v[i] = {g(rng), g(rng)};
    return v;
}

inline double rel_err(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

inline double max_abs(const CMatrix& A) { return A.cwiseAbs().maxCoeff(); }

// Paths with the given taps and Dopplers, unit-variance gains.
inline ChannelRealization make_realization(const SystemConfig& c, const std::vector<int>& taps,
                                           const std::vector<double>& dopplers, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    ChannelRealization r;
    r.config = c;
    for (std::size_t p = 0; p < taps.size(); ++p) r.paths.push_back({{g(rng), g(rng)}, taps[p], dopplers[p]});
    return r;
}

inline SystemConfig small_system(int N, int ell_max = 4, double f_max = 0.25)
{
    SystemConfig c;
    c.N = N;
    c.ell_max = ell_max;
    c.f_max = f_max;
    c.cp_len = ell_max;
    return c;
}

}  // namespace ddisac::test
