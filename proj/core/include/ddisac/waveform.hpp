#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ddisac/ddchan.hpp"
#include "ddisac/types.hpp"

namespace ddisac {

enum class WaveformKind { ofdm, otfs, afdm };

std::string to_string(WaveformKind kind);
WaveformKind waveform_kind_from_string(const std::string& name);  // throws ConfigError

struct AfdmChirp {
    double c1 = 0.0;
    double c2 = 0.0;
};

// c1 = (2 ceil(f_max) + 1) / (2N), c2 = 1 / (2 pi N^2).
AfdmChirp afdm_tuning(int N, double f_max);

// Holds the dense demodulation transform T (modulation is T^H). Copies share the matrix.
class WaveformSpec {
public:
    static WaveformSpec ofdm(int N);
    static WaveformSpec otfs(int K, int M);  // K delay bins, M Doppler bins, N = K*M
    static WaveformSpec afdm(int N, double c1, double c2);

    WaveformKind kind() const { return kind_; }
    std::string name() const { return to_string(kind_); }
    int size() const { return N_; }
    int otfs_k() const { return K_; }
    int otfs_m() const { return M_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    PrefixRule prefix_rule() const;

    const CMatrix& transform() const { return *T_; }
    CVector modulate(const CVector& x) const;
    CVector demodulate(const CVector& r) const;

private:
    WaveformSpec() = default;

    WaveformKind kind_ = WaveformKind::ofdm;
    int N_ = 0;
    int K_ = 0;
    int M_ = 0;
    double c1_ = 0.0;
    double c2_ = 0.0;
    std::shared_ptr<const CMatrix> T_;
};

// Unitary DFT, F[k,n] = e^{-j 2 pi k n / N} / sqrt(N).
CMatrix dft_matrix(int N);

// Gamma = T * (Phi * Omega^f * Pi^ell) * T^H.
CMatrix build_path_operator(const WaveformSpec& spec, int ell, double f);

// Gamma * x in O(N^2) without forming Gamma.
CVector apply_path_operator(const WaveformSpec& spec, int ell, double f, const CVector& x);

CMatrix build_effective_channel(const WaveformSpec& spec, const ChannelRealization& real);

struct Constellation {
    double E_s = 1.0;

    double c_x() const { return std::sqrt(E_s / 2.0); }
};

// Two bits per symbol: bit 2k drives the real axis, bit 2k+1 the imaginary one; 0 maps to +c_x.
CVector qpsk_map(const std::vector<std::uint8_t>& bits, const Constellation& constellation);
std::vector<std::uint8_t> qpsk_demap(const CVector& symbols);

// Root-1 Zadoff-Chu column of length B.
CVector zadoff_chu(int B);

enum class LayoutKind { block_pilots, comb_pilots, single_pilot_guard, all_pilots };

struct FrameLayout {
    LayoutKind kind = LayoutKind::block_pilots;
    int N = 0;
    int block_len = 0;  // B: pilot block, or pilot plus guard
    std::vector<int> pilot_indices;
    std::vector<int> null_indices;
    std::vector<int> payload_indices;
    CVector pilot_values;  // unboosted
    double pilot_power_boost = 1.0;

    static FrameLayout block_pilots(int N, int B, double boost = 1.0);
    // B pilots spread evenly, every floor(N/B)-th index from 0.
    static FrameLayout comb_pilots(int N, int B, double boost = 1.0);
    static FrameLayout single_pilot_guard(int N, int B, double boost = 1.0);
    static FrameLayout all_pilots(int N);

    // Throws ConfigError when the index sets do not partition 0..N-1.
    void validate() const;
    int payload_count() const { return static_cast<int>(payload_indices.size()); }
    // Pilot values times sqrt(boost).
    CVector transmitted_pilots() const;
    // Pilot and null positions, i.e. everything the receiver knows.
    std::vector<int> known_indices() const;
};

CVector build_frame(const FrameLayout& layout, const CVector& data_symbols);

}  // namespace ddisac
