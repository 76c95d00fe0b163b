#pragma once

#include <utility>
#include <vector>

#include "ddisac/ddchan.hpp"
#include "ddisac/types.hpp"
#include "ddisac/waveform.hpp"

namespace ddisac {

struct DelayDopplerGrid {
    std::vector<int> delay_taps;
    std::vector<double> doppler_points;

    // Taps 0..ell_max and doppler_count points evenly over [-f_max, f_max].
    static DelayDopplerGrid uniform(int ell_max, double f_max, int doppler_count = 11);

    void validate() const;  // throws ConfigError
    int delay_count() const { return static_cast<int>(delay_taps.size()); }
    int doppler_count() const { return static_cast<int>(doppler_points.size()); }
    int size() const { return delay_count() * doppler_count(); }
    // Delay-major ordering: m = k * D + d.
    int index(int k, int d) const { return k * doppler_count() + d; }
    std::pair<int, int> cell(int m) const { return {m / doppler_count(), m % doppler_count()}; }
    int nearest_doppler(double f) const;
};

struct DelayDopplerDictionary {
    DelayDopplerGrid grid;
    CMatrix E;  // column m = Gamma(k, d) * x
};

DelayDopplerDictionary build_dictionary(const WaveformSpec& spec, const CVector& x,
                                        const DelayDopplerGrid& grid);

struct PilotBlock {
    std::vector<int> rows;
    CMatrix E;
    CVector y;
};

// Keeps the rows of the pilot and its null guard. Needs a single-pilot layout.
PilotBlock restrict_to_pilot_block(const CMatrix& E, const CVector& y, const FrameLayout& layout);

struct BgParams {
    double rho = 0.5;
    cplx h_bar{0.0, 0.0};
    double sigma_bar = 1.0;
};

struct BgPosterior {
    double rho_hat = 0.0;
    cplx mean;   // slab posterior mean
    double var = 0.0;
};

BgPosterior bg_denoise(cplx h_tilde, double sigma_tilde2, const BgParams& params);

struct SparseChannelEstimate {
    CVector h_hat;
    RVector rho_hat;  // empty for SBL
    RVector var;
    int iterations = 0;
    // Sorted top-P support after each iteration, when tracking was requested.
    std::vector<std::vector<int>> support_trace;
};

struct SblConfig {
    double epsilon = 1e-6;
    int i_max = 80;
};

// Sparse Bayesian learning by EM with a per-cell Gaussian prior of variance xi_m.
class SblEm {
public:
    SblEm(const CVector& y, const CMatrix& E, const CMatrix& Rw);

    void step();  // one E step followed by one M step
    int iteration() const { return iter_; }
    double last_change() const { return change_; }
    const RVector& hyperparameters() const { return xi_; }
    const CVector& mean() const { return h_; }
    const RVector& posterior_var() const { return var_; }

private:
    void step_direct();
    void step_woodbury();

    CVector y_;
    CMatrix E_;
    CMatrix Rw_;
    CMatrix Rw_inv_E_;  // direct route only
    CMatrix EhRwinvE_;
    CVector EhRwinv_y_;
    bool woodbury_;
    RVector xi_;
    CVector h_;
    RVector var_;
    double change_ = 0.0;
    int iter_ = 0;
};

SparseChannelEstimate sbl_em(const CVector& y, const CMatrix& E, const CMatrix& Rw,
                             const SblConfig& cfg, int track_top = 0);

struct PdaConfig {
    double beta = 0.5;
    int i_max = 40;
    bool update_mean = false;  // refresh h_bar by EM as well
};

// Bernoulli-Gaussian message passing with a shared whitened covariance and EM prior updates.
class PdaEm {
public:
    PdaEm(const CVector& y, const CMatrix& E, double N0, int num_targets, const PdaConfig& cfg);

    void step();
    int iteration() const { return iter_; }
    const CVector& mean() const { return h_; }
    const RVector& var() const { return v_; }
    const RVector& rho_hat() const { return rho_hat_; }
    const BgParams& params() const { return params_; }
    // Smallest eigenvalue of the covariance formed in the last step.
    double last_covariance_min_eig() const;

private:
    CVector y_;
    CMatrix E_;
    double N0_;
    PdaConfig cfg_;
    BgParams params_;
    CVector h_;
    RVector v_;
    RVector rho_hat_;
    CMatrix last_sigma_;
    int iter_ = 0;
};

SparseChannelEstimate pda_em(const CVector& y, const CMatrix& E, double N0, int num_targets,
                             const PdaConfig& cfg, int track_top = 0);

// Indices of the P largest |h|, ties to the lower index, in descending magnitude order.
std::vector<int> top_support(const CVector& h, int P);

// First iteration (1-based) after which the support never changes; 0 for an empty trace.
int iterations_to_plateau(const std::vector<std::vector<int>>& trace);

struct RadarTarget {
    int grid_index = 0;
    int delay_tap = 0;
    double doppler = 0.0;
    double range_m = 0.0;
    double velocity_mps = 0.0;
    cplx gain;
};

double tap_to_range(int tap, const SystemConfig& config);
double doppler_to_velocity(double f, const SystemConfig& config);
double range_to_tap(double range_m, const SystemConfig& config);
double velocity_to_doppler(double velocity_mps, const SystemConfig& config);

std::vector<RadarTarget> extract_targets(const SparseChannelEstimate& est, const DelayDopplerGrid& grid,
                                         const SystemConfig& config, int P);

double normalized_rmse(const std::vector<double>& estimates, const std::vector<double>& truths);

}  // namespace ddisac
