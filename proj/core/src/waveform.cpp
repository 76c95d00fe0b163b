#include "ddisac/waveform.hpp"

#include <algorithm>
#include <cmath>

#include "ddisac/errors.hpp"

namespace ddisac {

std::string to_string(WaveformKind kind)
{
    switch (kind) {
    case WaveformKind::ofdm: return "ofdm";
    case WaveformKind::otfs: return "otfs";
    case WaveformKind::afdm: return "afdm";
    }
    return "unknown";
}

WaveformKind waveform_kind_from_string(const std::string& name)
{
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "ofdm") return WaveformKind::ofdm;
    if (s == "otfs") return WaveformKind::otfs;
    if (s == "afdm") return WaveformKind::afdm;
    throw ConfigError("unknown waveform '" + name + "'");
}

AfdmChirp afdm_tuning(int N, double f_max)
{
    if (N <= 0) throw ConfigError("N must be positive");
    if (!(f_max >= 0.0)) throw ConfigError("f_max must be nonnegative");
    AfdmChirp c;
    c.c1 = (2.0 * std::ceil(f_max) + 1.0) / (2.0 * N);
    c.c2 = 1.0 / (2.0 * kPi * static_cast<double>(N) * N);
    return c;
}

CMatrix dft_matrix(int N)
{
    CMatrix F(N, N);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (int k = 0; k < N; ++k)
        for (int n = 0; n < N; ++n)
            F(k, n) = scale * unit_phasor(static_cast<double>((static_cast<long long>(k) * n) % N) / N);
    return F;
}

namespace {

CVector chirp_diag(int N, double c)
{
    CVector d(N);
    for (int n = 0; n < N; ++n) d[n] = unit_phasor(c * static_cast<double>(n) * n);
    return d;
}

}  // namespace

WaveformSpec WaveformSpec::ofdm(int N)
{
    if (N <= 0) throw ConfigError("N must be positive");
    WaveformSpec s;
    s.kind_ = WaveformKind::ofdm;
    s.N_ = N;
    s.T_ = std::make_shared<const CMatrix>(dft_matrix(N));
    return s;
}

WaveformSpec WaveformSpec::otfs(int K, int M)
{
    if (K <= 0 || M <= 0) throw ConfigError("OTFS grid dimensions must be positive");
    WaveformSpec s;
    s.kind_ = WaveformKind::otfs;
    s.K_ = K;
    s.M_ = M;
    s.N_ = K * M;
    // F_M kron I_K: block (a, b) is F_M(a, b) * I_K.
    const CMatrix FM = dft_matrix(M);
    CMatrix T = CMatrix::Zero(s.N_, s.N_);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            for (int k = 0; k < K; ++k) T(a * K + k, b * K + k) = FM(a, b);
    s.T_ = std::make_shared<const CMatrix>(std::move(T));
    return s;
}

WaveformSpec WaveformSpec::afdm(int N, double c1, double c2)
{
    if (N <= 0) throw ConfigError("N must be positive");
    if (!(c1 > 0.0)) throw ConfigError("AFDM c1 must be positive");
    WaveformSpec s;
    s.kind_ = WaveformKind::afdm;
    s.N_ = N;
    s.c1_ = c1;
    s.c2_ = c2;
    const CVector l1 = chirp_diag(N, c1);
    const CVector l2 = chirp_diag(N, c2);
    CMatrix T = l2.asDiagonal() * dft_matrix(N) * l1.asDiagonal();
    s.T_ = std::make_shared<const CMatrix>(std::move(T));
    return s;
}

PrefixRule WaveformSpec::prefix_rule() const
{
    return kind_ == WaveformKind::afdm ? PrefixRule::chirp_periodic(c1_) : PrefixRule::cyclic();
}

CVector WaveformSpec::modulate(const CVector& x) const
{
    if (x.size() != N_) throw ShapeError("modulate: expected " + std::to_string(N_) + " symbols");
    return T_->adjoint() * x;
}

CVector WaveformSpec::demodulate(const CVector& r) const
{
    if (r.size() != N_) throw ShapeError("demodulate: expected " + std::to_string(N_) + " samples");
    return (*T_) * r;
}

CMatrix build_path_operator(const WaveformSpec& spec, int ell, double f)
{
    const int N = spec.size();
    if (ell < 0 || ell >= N) throw DomainError("delay tap must lie in [0, N)");
    const PathFactor pf = path_factor(N, ell, f, spec.prefix_rule());
    const CMatrix& T = spec.transform();
    // Rows of T^H, shifted and scaled.
    CMatrix B(N, N);
    for (int n = 0; n < N; ++n) {
        const int src = (n - ell + N) % N;
        B.row(n) = pf.diag[n] * T.col(src).adjoint();
    }
    CMatrix G(N, N);
    G.noalias() = T * B;
    return G;
}

CVector apply_path_operator(const WaveformSpec& spec, int ell, double f, const CVector& x)
{
    const int N = spec.size();
    if (x.size() != N) throw ShapeError("path operator input length mismatch");
    if (ell < 0 || ell >= N) throw DomainError("delay tap must lie in [0, N)");
    const PathFactor pf = path_factor(N, ell, f, spec.prefix_rule());
    return spec.demodulate(pf.apply(spec.modulate(x)));
}

CMatrix build_effective_channel(const WaveformSpec& spec, const ChannelRealization& real)
{
    if (real.config.N != spec.size()) throw ShapeError("realization and waveform sizes differ");
    const int N = spec.size();
    // Sum the time-domain factors first, then conjugate once.
    const CMatrix H = build_td_channel(real, spec.prefix_rule());
    const CMatrix& T = spec.transform();
    CMatrix tmp(N, N);
    tmp.noalias() = H * T.adjoint();
    CMatrix G(N, N);
    G.noalias() = T * tmp;
    return G;
}

CVector qpsk_map(const std::vector<std::uint8_t>& bits, const Constellation& constellation)
{
    if (bits.size() % 2 != 0) throw ShapeError("QPSK needs an even bit count");
    const double a = constellation.c_x();
    CVector s(static_cast<Eigen::Index>(bits.size() / 2));
    for (Eigen::Index k = 0; k < s.size(); ++k)
        s[k] = {bits[2 * k] ? -a : a, bits[2 * k + 1] ? -a : a};
    return s;
}

std::vector<std::uint8_t> qpsk_demap(const CVector& symbols)
{
    std::vector<std::uint8_t> bits(2 * symbols.size());
    for (Eigen::Index k = 0; k < symbols.size(); ++k) {
        bits[2 * k] = symbols[k].real() < 0.0;
        bits[2 * k + 1] = symbols[k].imag() < 0.0;
    }
    return bits;
}

CVector zadoff_chu(int B)
{
    if (B <= 0) throw ConfigError("pilot length must be positive");
    CVector z(B);
    for (int n = 0; n < B; ++n) {
        const long long k = (B % 2 == 1) ? static_cast<long long>(n) * (n + 1) : static_cast<long long>(n) * n;
        // e^{-j pi k / B}, with k reduced mod 2B
        z[n] = unit_phasor(static_cast<double>(k % (2LL * B)) / (2.0 * B));
    }
    return z;
}

FrameLayout FrameLayout::block_pilots(int N, int B, double boost)
{
    if (B <= 0 || B > N) throw ConfigError("pilot block must lie in [1, N]");
    FrameLayout l;
    l.kind = LayoutKind::block_pilots;
    l.N = N;
    l.block_len = B;
    l.pilot_power_boost = boost;
    for (int i = 0; i < B; ++i) l.pilot_indices.push_back(i);
    for (int i = B; i < N; ++i) l.payload_indices.push_back(i);
    l.pilot_values = zadoff_chu(B);
    l.validate();
    return l;
}

FrameLayout FrameLayout::comb_pilots(int N, int B, double boost)
{
    if (B <= 0 || B > N) throw ConfigError("pilot count must lie in [1, N]");
    FrameLayout l;
    l.kind = LayoutKind::comb_pilots;
    l.N = N;
    l.block_len = B;
    l.pilot_power_boost = boost;
    const int stride = N / B;
    for (int i = 0; i < N; ++i) {
        if (i % stride == 0 && i / stride < B)
            l.pilot_indices.push_back(i);
        else
            l.payload_indices.push_back(i);
    }
    l.pilot_values = zadoff_chu(B);
    l.validate();
    return l;
}

FrameLayout FrameLayout::single_pilot_guard(int N, int B, double boost)
{
    if (B <= 0 || B > N) throw ConfigError("guard block must lie in [1, N]");
    FrameLayout l;
    l.kind = LayoutKind::single_pilot_guard;
    l.N = N;
    l.block_len = B;
    l.pilot_power_boost = boost;
    l.pilot_indices.push_back(0);
    for (int i = 1; i < B; ++i) l.null_indices.push_back(i);
    for (int i = B; i < N; ++i) l.payload_indices.push_back(i);
    l.pilot_values = CVector::Ones(1);
    l.validate();
    return l;
}

FrameLayout FrameLayout::all_pilots(int N)
{
    FrameLayout l = block_pilots(N, N, 1.0);
    l.kind = LayoutKind::all_pilots;
    return l;
}

void FrameLayout::validate() const
{
    if (N <= 0) throw ConfigError("layout size must be positive");
    if (!(pilot_power_boost > 0.0)) throw ConfigError("pilot power boost must be positive");
    if (static_cast<Eigen::Index>(pilot_indices.size()) != pilot_values.size())
        throw ConfigError("pilot values and indices differ in length");
    std::vector<int> seen(N, 0);
    auto mark = [&](const std::vector<int>& idx) {
        for (int i : idx) {
            if (i < 0 || i >= N) throw ConfigError("layout index out of range");
            ++seen[i];
        }
    };
    mark(pilot_indices);
    mark(null_indices);
    mark(payload_indices);
    for (int c : seen)
        if (c != 1) throw ConfigError("pilot, null and payload indices must partition the frame");
    for (Eigen::Index i = 0; i < pilot_values.size(); ++i)
        if (pilot_values[i] == cplx(0.0, 0.0)) throw ConfigError("pilot values must be nonzero");
}

CVector FrameLayout::transmitted_pilots() const
{
    return pilot_values * std::sqrt(pilot_power_boost);
}

std::vector<int> FrameLayout::known_indices() const
{
    std::vector<int> k = pilot_indices;
    k.insert(k.end(), null_indices.begin(), null_indices.end());
    std::sort(k.begin(), k.end());
    return k;
}

CVector build_frame(const FrameLayout& layout, const CVector& data_symbols)
{
    if (data_symbols.size() != layout.payload_count())
        throw ShapeError("expected " + std::to_string(layout.payload_count()) + " data symbols, got " +
                         std::to_string(data_symbols.size()));
    CVector x = CVector::Zero(layout.N);
    const CVector pilots = layout.transmitted_pilots();
    for (std::size_t i = 0; i < layout.pilot_indices.size(); ++i) x[layout.pilot_indices[i]] = pilots[i];
    for (std::size_t i = 0; i < layout.payload_indices.size(); ++i)
        x[layout.payload_indices[i]] = data_symbols[static_cast<Eigen::Index>(i)];
    return x;
}

}  // namespace ddisac
