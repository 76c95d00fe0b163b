#include "ddisac/rpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ddisac/errors.hpp"

namespace ddisac {

namespace {

constexpr double kXiFloor = 1e-200;
constexpr double kVarFloor = 1e-15;
constexpr double kRhoFloor = 1e-12;

void record_support(std::vector<std::vector<int>>& trace, const CVector& h, int top)
{
    if (top <= 0) return;
    std::vector<int> s = top_support(h, top);
    std::sort(s.begin(), s.end());
    trace.push_back(std::move(s));
}

}  // namespace

DelayDopplerGrid DelayDopplerGrid::uniform(int ell_max, double f_max, int doppler_count)
{
    if (ell_max < 0) throw ConfigError("ell_max must be nonnegative");
    if (doppler_count < 1) throw ConfigError("need at least one Doppler point");
    DelayDopplerGrid g;
    for (int k = 0; k <= ell_max; ++k) g.delay_taps.push_back(k);
    if (doppler_count == 1) {
        g.doppler_points.push_back(0.0);
    } else {
        for (int d = 0; d < doppler_count; ++d)
            g.doppler_points.push_back(-f_max + 2.0 * f_max * d / (doppler_count - 1));
    }
    g.validate();
    return g;
}

void DelayDopplerGrid::validate() const
{
    if (delay_taps.empty() || doppler_points.empty()) throw ConfigError("delay-Doppler grid is empty");
    for (std::size_t i = 1; i < delay_taps.size(); ++i)
        if (delay_taps[i] <= delay_taps[i - 1]) throw ConfigError("delay taps must increase strictly");
    for (std::size_t i = 1; i < doppler_points.size(); ++i)
        if (!(doppler_points[i] > doppler_points[i - 1]))
            throw ConfigError("Doppler points must increase strictly");
    if (delay_taps.front() < 0) throw ConfigError("delay taps must be nonnegative");
}

int DelayDopplerGrid::nearest_doppler(double f) const
{
    int best = 0;
    for (int d = 1; d < doppler_count(); ++d)
        if (std::abs(doppler_points[d] - f) < std::abs(doppler_points[best] - f)) best = d;
    return best;
}

DelayDopplerDictionary build_dictionary(const WaveformSpec& spec, const CVector& x, const DelayDopplerGrid& grid)
{
    grid.validate();
    const int N = spec.size();
    if (x.size() != N) throw ShapeError("dictionary probe length mismatch");
    if (x.squaredNorm() == 0.0) throw ConfigError("dictionary probe must be nonzero");
    if (grid.delay_taps.back() >= N) throw ConfigError("grid delay exceeds the frame");

    const CVector s = spec.modulate(x);
    const PrefixRule rule = spec.prefix_rule();
    CMatrix B(N, grid.size());
    for (int k = 0; k < grid.delay_count(); ++k)
        for (int d = 0; d < grid.doppler_count(); ++d)
            B.col(grid.index(k, d)) = path_factor(N, grid.delay_taps[k], grid.doppler_points[d], rule).apply(s);

    DelayDopplerDictionary dict;
    dict.grid = grid;
    dict.E.resize(N, grid.size());
    dict.E.noalias() = spec.transform() * B;
    return dict;
}

PilotBlock restrict_to_pilot_block(const CMatrix& E, const CVector& y, const FrameLayout& layout)
{
    if (layout.kind != LayoutKind::single_pilot_guard)
        throw ConfigError("pilot-block restriction needs a single-pilot guard layout");
    if (E.rows() != layout.N || y.size() != layout.N) throw ShapeError("dictionary rows and layout differ");
    PilotBlock pb;
    pb.rows = layout.known_indices();
    const int B = static_cast<int>(pb.rows.size());
    pb.E.resize(B, E.cols());
    pb.y.resize(B);
    for (int i = 0; i < B; ++i) {
        pb.E.row(i) = E.row(pb.rows[i]);
        pb.y[i] = y[pb.rows[i]];
    }
    return pb;
}

BgPosterior bg_denoise(cplx h_tilde, double sigma_tilde2, const BgParams& params)
{
    if (!(sigma_tilde2 > 0.0)) throw DomainError("belief variance must be positive");
    if (!(params.sigma_bar > 0.0)) throw DomainError("slab variance must be positive");
    if (!(params.rho >= 0.0 && params.rho <= 1.0)) throw DomainError("sparsity rate must lie in [0, 1]");

    const double s2 = sigma_tilde2;
    const double sb = params.sigma_bar;
    BgPosterior out;
    if (params.rho >= 1.0) {
        out.rho_hat = 1.0;
    } else if (params.rho <= 0.0) {
        out.rho_hat = 0.0;
    } else {
        // Log of the spike-to-slab evidence ratio.
        const double L = std::log((1.0 - params.rho) / params.rho) + std::log((s2 + sb) / s2) -
                         std::norm(h_tilde) / s2 + std::norm(h_tilde - params.h_bar) / (s2 + sb);
        out.rho_hat = L > 0.0 ? std::exp(-L) / (1.0 + std::exp(-L)) : 1.0 / (1.0 + std::exp(L));
    }
    out.mean = (sb * h_tilde + s2 * params.h_bar) / (s2 + sb);
    out.var = sb * s2 / (s2 + sb);
    return out;
}

SblEm::SblEm(const CVector& y, const CMatrix& E, const CMatrix& Rw) : y_(y), E_(E), Rw_(Rw)
{
    const Eigen::Index rows = E.rows();
    const Eigen::Index M = E.cols();
    if (M == 0) throw ConfigError("empty dictionary");
    if (y.size() != rows) throw ShapeError("observation and dictionary rows differ");
    if (Rw.rows() != rows || Rw.cols() != rows) throw ShapeError("noise covariance has the wrong shape");

    woodbury_ = M > rows;
    if (!woodbury_) {
        Eigen::LLT<CMatrix> llt(Rw_);
        if (llt.info() != Eigen::Success) throw NumericalError("noise covariance is not positive definite", 0);
        Rw_inv_E_ = llt.solve(E_);
        EhRwinvE_ = E_.adjoint() * Rw_inv_E_;
        EhRwinv_y_ = Rw_inv_E_.adjoint() * y_;
    }
    xi_ = RVector::Ones(M);
    h_ = CVector::Zero(M);
    var_ = RVector::Ones(M);
}

void SblEm::step_direct()
{
    CMatrix A = EhRwinvE_;
    A.diagonal().array() += xi_.array().inverse();
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("SBL posterior precision is singular", iter_);
    const CMatrix Sigma = llt.solve(CMatrix::Identity(A.rows(), A.cols()));
    h_ = Sigma * EhRwinv_y_;
    var_ = Sigma.diagonal().real().cwiseMax(0.0);
}

void SblEm::step_woodbury()
{
    // Sigma = Xi - Xi E^H C^{-1} E Xi with C = Rw + E Xi E^H.
    const CMatrix EXi = E_ * xi_.asDiagonal();
    CMatrix C = Rw_;
    C.noalias() += EXi * E_.adjoint();
    Eigen::LLT<CMatrix> llt(C);
    if (llt.info() != Eigen::Success) throw NumericalError("SBL marginal covariance is singular", iter_);
    const CMatrix CinvE = llt.solve(E_);
    const CVector Cinv_y = llt.solve(y_);
    h_ = EXi.adjoint() * Cinv_y;
    const RVector q = (E_.conjugate().cwiseProduct(CinvE)).colwise().sum().real().transpose();
    var_ = (xi_.array() - xi_.array().square() * q.array()).max(0.0).matrix();
}

void SblEm::step()
{
    ++iter_;
    if (woodbury_)
        step_woodbury();
    else
        step_direct();
    if (!h_.allFinite() || !var_.allFinite()) throw NumericalError("SBL produced non-finite estimates", iter_);
    const RVector next = (var_.array() + h_.array().abs2()).max(kXiFloor).matrix();
    change_ = (next - xi_).squaredNorm();
    xi_ = next;
}

SparseChannelEstimate sbl_em(const CVector& y, const CMatrix& E, const CMatrix& Rw, const SblConfig& cfg,
                             int track_top)
{
    if (cfg.i_max < 1) throw ConfigError("SBL i_max must be at least 1");
    SblEm solver(y, E, Rw);
    SparseChannelEstimate est;
    do {
        solver.step();
        record_support(est.support_trace, solver.mean(), track_top);
    } while (solver.last_change() > cfg.epsilon && solver.iteration() < cfg.i_max);
    est.h_hat = solver.mean();
    est.var = solver.posterior_var();
    est.iterations = solver.iteration();
    return est;
}

PdaEm::PdaEm(const CVector& y, const CMatrix& E, double N0, int num_targets, const PdaConfig& cfg)
    : y_(y), E_(E), N0_(N0), cfg_(cfg)
{
    const Eigen::Index M = E.cols();
    if (M == 0) throw ConfigError("empty dictionary");
    if (y.size() != E.rows()) throw ShapeError("observation and dictionary rows differ");
    if (num_targets < 1) throw ConfigError("need at least one target");
    if (!(N0 >= 0.0)) throw ConfigError("noise power must be nonnegative");
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw ConfigError("PDA damping must lie in (0, 1]");
    params_.rho = std::min(1.0, static_cast<double>(num_targets) / static_cast<double>(M));
    params_.sigma_bar = 1.0 / num_targets;
    params_.h_bar = 0.0;
    h_ = CVector::Zero(M);
    v_ = RVector::Constant(M, 1.0 / static_cast<double>(M));
    rho_hat_ = RVector::Constant(M, params_.rho);
}

void PdaEm::step()
{
    ++iter_;
    const Eigen::Index rows = E_.rows();
    const Eigen::Index M = E_.cols();

    last_sigma_ = CMatrix::Identity(rows, rows) * N0_;
    last_sigma_.noalias() += E_ * v_.asDiagonal() * E_.adjoint();
    Eigen::LLT<CMatrix> llt(last_sigma_);
    if (llt.info() != Eigen::Success) throw NumericalError("PDA covariance is not positive definite", iter_);
    const CMatrix W = llt.solve(E_);
    const RVector eta = (E_.conjugate().cwiseProduct(W)).colwise().sum().real().transpose();
    const CVector r = y_ - E_ * h_;
    const CVector u = W.adjoint() * r;

    RVector mu_var(M);
    CVector mu(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        const double e = std::max(eta[m], std::numeric_limits<double>::min());
        const cplx ht = u[m] / e + h_[m];
        const double s2 = std::max((1.0 - e * v_[m]) / e, kVarFloor);
        const BgPosterior post = bg_denoise(ht, s2, params_);
        if (std::isnan(post.rho_hat)) throw NumericalError("sparsity posterior is NaN", iter_);
        rho_hat_[m] = post.rho_hat;
        mu[m] = post.mean;
        mu_var[m] = post.var;
    }

    const double b = cfg_.beta;
    for (Eigen::Index m = 0; m < M; ++m) {
        const double rh = rho_hat_[m];
        h_[m] = b * rh * mu[m] + (1.0 - b) * h_[m];
        v_[m] = b * ((1.0 - rh) * rh * std::norm(mu[m]) + rh * mu_var[m]) + (1.0 - b) * v_[m];
    }
    if (!h_.allFinite() || !v_.allFinite()) throw NumericalError("PDA produced non-finite estimates", iter_);

    const double rho_sum = rho_hat_.sum();
    params_.rho = std::clamp(rho_sum / static_cast<double>(M), kRhoFloor, 1.0);
    if (rho_sum > 0.0) {
        if (cfg_.update_mean) {
            cplx acc = 0.0;
            for (Eigen::Index m = 0; m < M; ++m) acc += rho_hat_[m] * mu[m];
            params_.h_bar = acc / rho_sum;
        }
        double acc = 0.0;
        for (Eigen::Index m = 0; m < M; ++m) acc += rho_hat_[m] * (std::norm(mu[m] - params_.h_bar) + mu_var[m]);
        params_.sigma_bar = std::max(acc / rho_sum, kVarFloor);
    }
}

double PdaEm::last_covariance_min_eig() const
{
    if (last_sigma_.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(last_sigma_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

SparseChannelEstimate pda_em(const CVector& y, const CMatrix& E, double N0, int num_targets, const PdaConfig& cfg,
                             int track_top)
{
    if (cfg.i_max < 1) throw ConfigError("PDA i_max must be at least 1");
    PdaEm solver(y, E, N0, num_targets, cfg);
    SparseChannelEstimate est;
    for (int i = 0; i < cfg.i_max; ++i) {
        solver.step();
        record_support(est.support_trace, solver.mean(), track_top);
    }
    est.h_hat = solver.mean();
    est.var = solver.var();
    est.rho_hat = solver.rho_hat();
    est.iterations = solver.iteration();
    return est;
}

std::vector<int> top_support(const CVector& h, int P)
{
    if (P < 0 || P > h.size()) throw ConfigError("support size exceeds the grid");
    std::vector<int> order(static_cast<std::size_t>(h.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(h[a]) > std::abs(h[b]); });
    order.resize(static_cast<std::size_t>(P));
    return order;
}

int iterations_to_plateau(const std::vector<std::vector<int>>& trace)
{
    if (trace.empty()) return 0;
    std::size_t i = trace.size() - 1;
    while (i > 0 && trace[i - 1] == trace.back()) --i;
    return static_cast<int>(i) + 1;
}

double tap_to_range(int tap, const SystemConfig& config)
{
    return kSpeedOfLight * tap * config.sample_period() / 2.0;
}

double doppler_to_velocity(double f, const SystemConfig& config)
{
    const double nu = f * config.bandwidth_hz / config.N;
    return nu * kSpeedOfLight / (2.0 * config.carrier_hz);
}

double range_to_tap(double range_m, const SystemConfig& config)
{
    return 2.0 * range_m / kSpeedOfLight * config.bandwidth_hz;
}

double velocity_to_doppler(double velocity_mps, const SystemConfig& config)
{
    const double nu = 2.0 * velocity_mps * config.carrier_hz / kSpeedOfLight;
    return nu * config.N / config.bandwidth_hz;
}

std::vector<RadarTarget> extract_targets(const SparseChannelEstimate& est, const DelayDopplerGrid& grid,
                                         const SystemConfig& config, int P)
{
    if (est.h_hat.size() != grid.size()) throw ShapeError("estimate and grid sizes differ");
    if (P < 1 || P > grid.size()) throw ConfigError("target count exceeds the grid");
    std::vector<RadarTarget> out;
    for (int m : top_support(est.h_hat, P)) {
        const auto [k, d] = grid.cell(m);
        RadarTarget t;
        t.grid_index = m;
        t.delay_tap = grid.delay_taps[k];
        t.doppler = grid.doppler_points[d];
        t.range_m = tap_to_range(t.delay_tap, config);
        t.velocity_mps = doppler_to_velocity(t.doppler, config);
        t.gain = est.h_hat[m];
        out.push_back(t);
    }
    return out;
}

double normalized_rmse(const std::vector<double>& estimates, const std::vector<double>& truths)
{
    if (estimates.size() != truths.size()) throw ShapeError("estimate and truth counts differ");
    if (truths.empty()) throw ShapeError("no targets");
    double acc = 0.0;
    for (std::size_t p = 0; p < truths.size(); ++p) {
        if (truths[p] == 0.0) throw DomainError("normalized error undefined for a zero truth");
        const double e = estimates[p] - truths[p];
        acc += e * e / std::abs(truths[p]);
    }
    return acc / static_cast<double>(truths.size());
}

}  // namespace ddisac
