#include "ddisac/ddchan.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ddisac/errors.hpp"

namespace ddisac {

void SystemConfig::validate() const
{
    if (N <= 0) throw ConfigError("N must be positive");
    if (ell_max < 0 || ell_max >= N)
        throw ConfigError("ell_max must lie in [0, N), got " + std::to_string(ell_max));
    if (!(f_max >= 0.0) || f_max >= N / 2.0) throw ConfigError("f_max must lie in [0, N/2)");
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(carrier_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
    if (cp_len < ell_max) throw ConfigError("prefix shorter than the maximum delay");
}

double PrefixRule::phase(int N, int n) const
{
    if (c1 == 0.0) return 0.0;
    const double Nd = N;
    return c1 * Nd * (Nd - 2.0 * n);
}

ChannelRealization sample_paths(const SystemConfig& config, int num_paths, double sigma_h2,
                                std::mt19937_64& rng, TapDraw draw)
{
    config.validate();
    if (num_paths < 1) throw ConfigError("need at least one scattered path");
    if (!(sigma_h2 > 0.0)) throw ConfigError("path variance must be positive");
    if (draw == TapDraw::distinct && num_paths > config.ell_max)
        throw ConfigError("not enough delay taps for distinct scattered paths");

    std::uniform_int_distribution<int> tap(0, config.ell_max);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma_h2 / 2.0));

    // Partial Fisher-Yates over 1..ell_max.
    std::vector<int> pool;
    if (draw == TapDraw::distinct) {
        pool.resize(config.ell_max);
        std::iota(pool.begin(), pool.end(), 1);
    }

    ChannelRealization real;
    real.config = config;
    real.paths.resize(num_paths + 1);
    for (int p = 0; p <= num_paths; ++p) {
        ChannelPath& path = real.paths[p];
        if (p == 0) {
            path.delay_tap = 0;
        } else if (draw == TapDraw::independent) {
            path.delay_tap = tap(rng);
        } else {
            const int j = p - 1;
            std::uniform_int_distribution<int> pick(j, config.ell_max - 1);
            std::swap(pool[j], pool[pick(rng)]);
            path.delay_tap = pool[j];
        }
        path.doppler = config.f_max * std::cos(angle(rng));
        const double re = gauss(rng);
        const double im = gauss(rng);
        path.gain = {re, im};
    }
    return real;
}

CMatrix cyclic_shift(int N, int ell)
{
    if (ell < 0 || ell >= N) throw DomainError("shift must lie in [0, N)");
    CMatrix P = CMatrix::Zero(N, N);
    for (int j = 0; j < N; ++j) P((j + ell) % N, j) = 1.0;
    return P;
}

CDiagonal doppler_diag(int N, double f)
{
    CDiagonal D(N);
    for (int n = 0; n < N; ++n) D.diagonal()[n] = unit_phasor(f * n / N);
    return D;
}

CDiagonal cp_phase_diag(int N, int ell, const PrefixRule& rule)
{
    if (ell < 0 || ell >= N) throw DomainError("delay tap must lie in [0, N)");
    CDiagonal D(N);
    D.diagonal().setOnes();
    for (int i = 0; i < ell; ++i) D.diagonal()[i] = unit_phasor(rule.phase(N, ell - i));
    return D;
}

CVector PathFactor::apply(const CVector& x) const
{
    const int N = size();
    CVector out(N);
    for (int n = 0; n < N; ++n) {
        int src = n - shift;
        if (src < 0) src += N;
        out[n] = diag[n] * x[src];
    }
    return out;
}

CMatrix PathFactor::dense() const
{
    const int N = size();
    CMatrix A = CMatrix::Zero(N, N);
    for (int n = 0; n < N; ++n) A(n, (n - shift + N) % N) = diag[n];
    return A;
}

PathFactor path_factor(int N, int ell, double f, const PrefixRule& rule)
{
    PathFactor pf;
    pf.shift = ell;
    pf.diag = cp_phase_diag(N, ell, rule).diagonal().cwiseProduct(doppler_diag(N, f).diagonal());
    return pf;
}

CMatrix build_td_channel(const ChannelRealization& real, const PrefixRule& rule)
{
    const int N = real.config.N;
    CMatrix H = CMatrix::Zero(N, N);
    for (const ChannelPath& path : real.paths) {
        const PathFactor pf = path_factor(N, path.delay_tap, path.doppler, rule);
        for (int n = 0; n < N; ++n) H(n, (n - pf.shift + N) % N) += path.gain * pf.diag[n];
    }
    return H;
}

}  // namespace ddisac
