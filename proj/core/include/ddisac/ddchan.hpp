#pragma once

#include <random>
#include <vector>

#include "ddisac/types.hpp"

namespace ddisac {

struct SystemConfig {
    int N = 128;
    double carrier_hz = 70e9;
    double bandwidth_hz = 20e6;  // also the sampling rate
    int ell_max = 20;
    double f_max = 0.25;
    int cp_len = 20;

    // Throws ConfigError.
    void validate() const;
    double sample_period() const { return 1.0 / bandwidth_hz; }
};

struct ChannelPath {
    cplx gain{1.0, 0.0};
    int delay_tap = 0;
    double doppler = 0.0;
};

struct ChannelRealization {
    SystemConfig config;
    std::vector<ChannelPath> paths;  // paths[0] is line of sight
};

// Phase left by prefix removal on the first ell samples.
// c1 == 0 is a plain cyclic prefix; c1 > 0 is the chirp-periodic prefix of a chirp waveform,
// whose phase at lag n is c1 (N^2 - 2 N n).
struct PrefixRule {
    double c1 = 0.0;

    static PrefixRule cyclic() { return {}; }
    static PrefixRule chirp_periodic(double c1) { return {c1}; }
    double phase(int N, int n) const;
};

enum class TapDraw {
    independent,  // each scattered tap uniform on 0..ell_max
    distinct      // scattered taps drawn without replacement from 1..ell_max
};

// One LoS path at tap 0 plus num_paths scattered paths.
ChannelRealization sample_paths(const SystemConfig& config, int num_paths, double sigma_h2,
                                std::mt19937_64& rng, TapDraw draw = TapDraw::independent);

// Forward cyclic shift raised to ell: (shift * s)[n] = s[(n - ell) mod N].
CMatrix cyclic_shift(int N, int ell);

CDiagonal doppler_diag(int N, double f);

CDiagonal cp_phase_diag(int N, int ell, const PrefixRule& rule);

// Phi * Omega^f * Pi^ell stored as a diagonal and a shift.
struct PathFactor {
    CVector diag;
    int shift = 0;

    int size() const { return static_cast<int>(diag.size()); }
    CVector apply(const CVector& x) const;
    CMatrix dense() const;
};

PathFactor path_factor(int N, int ell, double f, const PrefixRule& rule);

CMatrix build_td_channel(const ChannelRealization& real, const PrefixRule& rule);

}  // namespace ddisac
