#pragma once

#include <cstdint>
#include <vector>

#include "ddisac/types.hpp"
#include "ddisac/waveform.hpp"

namespace ddisac {

struct JcdeConfig {
    double beta_x = 0.3;
    double beta_h = 0.3;
    int i_max = 40;
    double E_s = 1.0;
    double N0 = 0.1;
    double sigma_h2 = 1.0;
    int num_paths = 5;  // including line of sight

    void validate() const;  // throws ConfigError
};

struct SoftValue {
    cplx mean;
    double var = 0.0;
};

// Both denoisers throw DomainError on a nonpositive variance.
SoftValue denoise_qpsk(cplx belief_mean, double belief_var, double c_x);
SoftValue denoise_channel_gaussian(cplx belief_mean, double belief_var, double sigma_h2);
SoftValue damp(const SoftValue& fresh, const SoftValue& old, double beta);

struct JcdeTracePoint {
    double nmse = 0.0;
    double ber = 0.0;
};

struct JcdeOutput {
    CVector symbols;  // hard decisions at layout.payload_indices
    std::vector<std::uint8_t> bits;
    CVector gains;
    RVector gain_vars;
    std::vector<JcdeTracePoint> trace;  // filled only when a truth is supplied
    int iterations = 0;
};

// Optional ground truth for per-iteration tracing.
struct JcdeTruth {
    const CVector* gains = nullptr;
    const std::vector<std::uint8_t>* bits = nullptr;
};

// Message-passing state over the observation x symbol and observation x path edges.
// Arrays are row-major with one row per observation.
class PbigabpEngine {
public:
    PbigabpEngine(const CVector& y, const std::vector<CMatrix>& operators,
                  const FrameLayout& layout, const JcdeConfig& cfg);

    // Data side fixed to the given vector on every edge (all symbols known).
    void fix_data(const CVector& x);
    // Data edges pinned at the prior (mean 0, var E_s) and never refined.
    void freeze_data_at_prior();
    // Channel side fixed to these means and variances and never refined.
    void fix_channel(const CVector& gains, const RVector& vars);
    // Initial channel messages on every edge.
    void init_channel(const CVector& gains, const RVector& vars);

    void step();
    int iteration() const { return iter_; }

    // Consensus over all observations, from the beliefs of the last step.
    CVector consensus_symbols() const;  // payload only, hard decisions
    void consensus_channel(CVector& gains, RVector& vars) const;

    // Edge views for property tests.
    cplx x_edge(int n, int m) const { return {xr_[idx(n, m)], xi_[idx(n, m)]}; }
    double x_edge_var(int n, int m) const { return xv_[idx(n, m)]; }
    cplx h_edge(int n, int p) const { return {hr_[n * P_ + p], hi_[n * P_ + p]}; }
    double h_edge_var(int n, int p) const { return hv_[n * P_ + p]; }

private:
    std::size_t idx(int n, int m) const { return static_cast<std::size_t>(n) * N_ + m; }
    void channel_step();
    void data_step();

    int N_;
    int P_;
    JcdeConfig cfg_;
    double c_x_;
    std::vector<double> yr_, yi_;
    std::vector<double> gr_, gi_;        // P x N x N
    std::vector<double> teff_r_, teff_i_;  // N x N, filled once the channel side is frozen
    std::vector<double> xr_, xi_, xv_;   // N x N
    std::vector<double> hr_, hi_, hv_;   // N x P
    std::vector<double> yhr_, yhi_, s_;  // N x P, channel-side replicas
    std::vector<char> known_;            // per symbol
    std::vector<int> payload_;
    // Last consensus beliefs (natural parameters).
    std::vector<double> xnum_r_, xnum_i_, xden_;
    std::vector<double> hnum_r_, hnum_i_, hden_;
    bool update_data_ = true;
    bool update_channel_ = true;
    bool data_fully_known_ = false;
    bool replicas_cached_ = false;
    int iter_ = 0;
};

JcdeOutput run_pbigabp(const CVector& y, const std::vector<CMatrix>& operators,
                       const FrameLayout& layout, const JcdeConfig& cfg,
                       const JcdeTruth& truth = {});

// Channel by message passing with the full true frame known (LMMSE start), then data
// by message passing with the true gains.
JcdeOutput genie_linear_gabp(const CVector& y, const std::vector<CMatrix>& operators,
                             const CVector& true_gains, const CVector& true_frame,
                             const FrameLayout& layout, const JcdeConfig& cfg);

// Channel from pilot contributions alone, then data decoded with those estimates held fixed.
JcdeOutput pilot_only_estimate(const CVector& y, const std::vector<CMatrix>& operators,
                               const FrameLayout& layout, const JcdeConfig& cfg);

// Linear MMSE gains given a fully known frame: (A^H A + N0/sigma_h2 I)^{-1} A^H y.
void lmmse_gains(const CVector& y, const std::vector<CMatrix>& operators, const CVector& x,
                 double N0, double sigma_h2, CVector& gains, RVector& vars);

}  // namespace ddisac
