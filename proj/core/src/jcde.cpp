#include "ddisac/jcde.hpp"

#include <algorithm>
#include <cmath>

#include "ddisac/errors.hpp"

namespace ddisac {

namespace {

constexpr double kVarFloor = 1e-15;


}  // namespace

void JcdeConfig::validate() const
{
    if (!(beta_x > 0.0 && beta_x <= 1.0)) throw ConfigError("beta_x must lie in (0, 1]");
    if (!(beta_h > 0.0 && beta_h <= 1.0)) throw ConfigError("beta_h must lie in (0, 1]");
    if (i_max < 1) throw ConfigError("i_max must be at least 1");
    if (!(E_s > 0.0)) throw ConfigError("E_s must be positive");
    if (!(N0 >= 0.0)) throw ConfigError("N0 must be nonnegative");
    if (!(sigma_h2 > 0.0)) throw ConfigError("sigma_h2 must be positive");
    if (num_paths < 1) throw ConfigError("num_paths must be at least 1");
}

SoftValue denoise_qpsk(cplx belief_mean, double belief_var, double c_x)
{
    if (!(belief_var > 0.0)) throw DomainError("QPSK denoiser needs a positive belief variance");
    const double k = 2.0 * c_x / belief_var;
    SoftValue out;
    out.mean = {c_x * std::tanh(k * belief_mean.real()), c_x * std::tanh(k * belief_mean.imag())};
    out.var = std::max(2.0 * c_x * c_x - std::norm(out.mean), 0.0);
    return out;
}

SoftValue denoise_channel_gaussian(cplx belief_mean, double belief_var, double sigma_h2)
{
    if (!(belief_var > 0.0)) throw DomainError("channel denoiser needs a positive belief variance");
    if (!(sigma_h2 > 0.0)) throw DomainError("channel denoiser needs a positive prior variance");
    const double w = sigma_h2 / (belief_var + sigma_h2);
    return {w * belief_mean, w * belief_var};
}

SoftValue damp(const SoftValue& fresh, const SoftValue& old, double beta)
{
    return {beta * fresh.mean + (1.0 - beta) * old.mean, beta * fresh.var + (1.0 - beta) * old.var};
}

PbigabpEngine::PbigabpEngine(const CVector& y, const std::vector<CMatrix>& operators,
                             const FrameLayout& layout, const JcdeConfig& cfg)
    : N_(static_cast<int>(y.size())), P_(static_cast<int>(operators.size())), cfg_(cfg)
{
    cfg_.validate();
    layout.validate();
    if (P_ < 1) throw ShapeError("need at least one path operator");
    if (layout.N != N_) throw ShapeError("layout and observation sizes differ");
    for (const CMatrix& G : operators)
        if (G.rows() != N_ || G.cols() != N_) throw ShapeError("path operator must be N x N");

    c_x_ = std::sqrt(cfg_.E_s / 2.0);
    const std::size_t NN = static_cast<std::size_t>(N_) * N_;
    const std::size_t NP = static_cast<std::size_t>(N_) * P_;

    yr_.resize(N_);
    yi_.resize(N_);
    for (int n = 0; n < N_; ++n) {
        yr_[n] = y[n].real();
        yi_[n] = y[n].imag();
    }

    gr_.resize(NN * P_);
    gi_.resize(NN * P_);
    for (int p = 0; p < P_; ++p) {
        const CMatrix& G = operators[p];
        for (int n = 0; n < N_; ++n) {
            const std::size_t base = p * NN + static_cast<std::size_t>(n) * N_;
            for (int m = 0; m < N_; ++m) {
                const cplx g = G(n, m);
                gr_[base + m] = g.real();
                gi_[base + m] = g.imag();
            }
        }
    }

    known_.assign(N_, 0);
    CVector x0 = CVector::Zero(N_);
    RVector v0 = RVector::Constant(N_, cfg_.E_s);
    const CVector pilots = layout.transmitted_pilots();
    for (std::size_t i = 0; i < layout.pilot_indices.size(); ++i) {
        const int m = layout.pilot_indices[i];
        known_[m] = 1;
        x0[m] = pilots[static_cast<Eigen::Index>(i)];
        v0[m] = 0.0;
    }
    for (int m : layout.null_indices) {
        known_[m] = 1;
        v0[m] = 0.0;
    }
    payload_ = layout.payload_indices;

    xr_.resize(NN);
    xi_.resize(NN);
    xv_.resize(NN);
    for (int n = 0; n < N_; ++n)
        for (int m = 0; m < N_; ++m) {
            xr_[idx(n, m)] = x0[m].real();
            xi_[idx(n, m)] = x0[m].imag();
            xv_[idx(n, m)] = v0[m];
        }

    hr_.assign(NP, 0.0);
    hi_.assign(NP, 0.0);
    hv_.assign(NP, cfg_.sigma_h2);
    yhr_.assign(NP, 0.0);
    yhi_.assign(NP, 0.0);
    s_.assign(NP, 0.0);

    xnum_r_.assign(N_, 0.0);
    xnum_i_.assign(N_, 0.0);
    xden_.assign(N_, 0.0);
    hnum_r_.assign(P_, 0.0);
    hnum_i_.assign(P_, 0.0);
    hden_.assign(P_, 0.0);
}

void PbigabpEngine::fix_data(const CVector& x)
{
    if (x.size() != N_) throw ShapeError("fixed frame length mismatch");
    for (int n = 0; n < N_; ++n)
        for (int m = 0; m < N_; ++m) {
            xr_[idx(n, m)] = x[m].real();
            xi_[idx(n, m)] = x[m].imag();
            xv_[idx(n, m)] = 0.0;
        }
    std::fill(known_.begin(), known_.end(), 1);
    update_data_ = false;
    data_fully_known_ = true;
    replicas_cached_ = false;
}

void PbigabpEngine::freeze_data_at_prior()
{
    update_data_ = false;
}

void PbigabpEngine::init_channel(const CVector& gains, const RVector& vars)
{
    if (gains.size() != P_ || vars.size() != P_) throw ShapeError("channel init length mismatch");
    for (int n = 0; n < N_; ++n)
        for (int p = 0; p < P_; ++p) {
            hr_[n * P_ + p] = gains[p].real();
            hi_[n * P_ + p] = gains[p].imag();
            hv_[n * P_ + p] = std::max(vars[p], 0.0);
        }
    for (int p = 0; p < P_; ++p) {
        // Consensus stand-in until a channel step runs.
        const double v = std::max(vars[p], kVarFloor);
        hnum_r_[p] = gains[p].real() / v;
        hnum_i_[p] = gains[p].imag() / v;
        hden_[p] = 1.0 / v;
    }
}

void PbigabpEngine::fix_channel(const CVector& gains, const RVector& vars)
{
    init_channel(gains, vars);
    update_channel_ = false;
}

void PbigabpEngine::step()
{
    ++iter_;
    if (update_channel_) channel_step();
    if (update_data_) data_step();
}

void PbigabpEngine::channel_step()
{
    const int N = N_;
    const int P = P_;
    const std::size_t NN = static_cast<std::size_t>(N) * N;
    const double N0 = cfg_.N0;
    const double sh2 = cfg_.sigma_h2;

    std::vector<double> Tr(N), Ti(N), ar(N), ai(N);
    std::vector<double> num_r(static_cast<std::size_t>(N) * P), num_i(num_r.size()), den(num_r.size());
    std::vector<double> U(P);

    // Replicas depend on the symbol edges only.
    const bool reuse = !update_data_ && replicas_cached_;

    for (int n = 0; n < N; ++n) {
        const std::size_t row = static_cast<std::size_t>(n) * N;
        const double* __restrict xr = &xr_[row];
        const double* __restrict xi = &xi_[row];
        const double* __restrict xv = &xv_[row];
        const double* hr = &hr_[n * P];
        const double* hi = &hi_[n * P];
        const double* hv = &hv_[n * P];
        double* yhr = &yhr_[n * P];
        double* yhi = &yhi_[n * P];
        double* S = &s_[n * P];
        double* __restrict tr_ = Tr.data();
        double* __restrict ti_ = Ti.data();

        const bool interference = !data_fully_known_;
        if (interference) {
            std::fill(Tr.begin(), Tr.end(), 0.0);
            std::fill(Ti.begin(), Ti.end(), 0.0);
        }
        for (int p = 0; p < P; ++p) {
            const double* __restrict gR = &gr_[p * NN + row];
            const double* __restrict gI = &gi_[p * NN + row];
            const double h_r = hr[p], h_i = hi[p];
            if (!reuse) {
                double a = 0.0, b = 0.0, c = 0.0;
#pragma omp simd reduction(+ : a, b, c)
                for (int m = 0; m < N; ++m) {
                    a += gR[m] * xr[m] - gI[m] * xi[m];
                    b += gR[m] * xi[m] + gI[m] * xr[m];
                    c += xv[m] * (gR[m] * gR[m] + gI[m] * gI[m]);
                }
                yhr[p] = a;
                yhi[p] = b;
                S[p] = c;
            }
            if (interference) {
#pragma omp simd
                for (int m = 0; m < N; ++m) {
                    tr_[m] += h_r * gR[m] - h_i * gI[m];
                    ti_[m] += h_r * gI[m] + h_i * gR[m];
                }
            }
        }

        if (!interference) {
            std::fill(U.begin(), U.end(), 0.0);
        } else {
            // Data-uncertainty interference seen by path p through the other paths.
            double V = 0.0;
            double* __restrict a_r = ar.data();
            double* __restrict a_i = ai.data();
#pragma omp simd reduction(+ : V)
            for (int m = 0; m < N; ++m) {
                a_r[m] = xv[m] * tr_[m];
                a_i[m] = -xv[m] * ti_[m];
                V += a_r[m] * tr_[m] - a_i[m] * ti_[m];
            }
            for (int p = 0; p < P; ++p) {
                const double* __restrict gR = &gr_[p * NN + row];
                const double* __restrict gI = &gi_[p * NN + row];
                double Wr = 0.0, Wi = 0.0;
#pragma omp simd reduction(+ : Wr, Wi)
                for (int m = 0; m < N; ++m) {
                    Wr += a_r[m] * gR[m] - a_i[m] * gI[m];
                    Wi += a_r[m] * gI[m] + a_i[m] * gR[m];
                }
                const double hw = hr[p] * Wr - hi[p] * Wi;
                U[p] = std::max(V - 2.0 * hw + (hr[p] * hr[p] + hi[p] * hi[p]) * S[p], 0.0);
            }
        }

        double Zr = 0.0, Zi = 0.0, A = 0.0, Bs = 0.0;
        for (int p = 0; p < P; ++p) {
            Zr += hr[p] * yhr[p] - hi[p] * yhi[p];
            Zi += hr[p] * yhi[p] + hi[p] * yhr[p];
            A += hv[p] * (yhr[p] * yhr[p] + yhi[p] * yhi[p]);
            Bs += hv[p] * S[p];
        }
        for (int p = 0; p < P; ++p) {
            const double a2 = yhr[p] * yhr[p] + yhi[p] * yhi[p];
            const double tr = yr_[n] - Zr + (hr[p] * yhr[p] - hi[p] * yhi[p]);
            const double ti = yi_[n] - Zi + (hr[p] * yhi[p] + hi[p] * yhr[p]);
            double var = std::max(A - hv[p] * a2, 0.0) + U[p] + N0 + std::max(Bs - hv[p] * S[p], 0.0) +
                         sh2 * S[p];
            var = std::max(var, kVarFloor);
            const std::size_t e = static_cast<std::size_t>(n) * P + p;
            num_r[e] = (yhr[p] * tr + yhi[p] * ti) / var;
            num_i[e] = (yhr[p] * ti - yhi[p] * tr) / var;
            den[e] = a2 / var;
        }
    }
    replicas_cached_ = !update_data_;

    std::fill(hnum_r_.begin(), hnum_r_.end(), 0.0);
    std::fill(hnum_i_.begin(), hnum_i_.end(), 0.0);
    std::fill(hden_.begin(), hden_.end(), 0.0);
    for (int n = 0; n < N; ++n)
        for (int p = 0; p < P; ++p) {
            const std::size_t e = static_cast<std::size_t>(n) * P + p;
            hnum_r_[p] += num_r[e];
            hnum_i_[p] += num_i[e];
            hden_[p] += den[e];
        }
    for (int p = 0; p < P; ++p)
        if (!std::isfinite(hnum_r_[p]) || !std::isfinite(hnum_i_[p]) || !std::isfinite(hden_[p]))
            throw NumericalError("non-finite channel belief", iter_);

    const double bh = cfg_.beta_h;
    for (int n = 0; n < N; ++n)
        for (int p = 0; p < P; ++p) {
            const std::size_t e = static_cast<std::size_t>(n) * P + p;
            const double nr = hnum_r_[p] - num_r[e];
            const double ni = hnum_i_[p] - num_i[e];
            const double d = std::max(hden_[p] - den[e], 0.0);
            const double w = 1.0 / (1.0 + sh2 * d);
            hr_[e] = bh * (sh2 * nr * w) + (1.0 - bh) * hr_[e];
            hi_[e] = bh * (sh2 * ni * w) + (1.0 - bh) * hi_[e];
            hv_[e] = bh * (sh2 * w) + (1.0 - bh) * hv_[e];
        }
}

void PbigabpEngine::data_step()
{
    const int N = N_;
    const int P = P_;
    const std::size_t NN = static_cast<std::size_t>(N) * N;
    const double N0 = cfg_.N0;
    const double Es = cfg_.E_s;

    // With the channel side frozen, the soft effective rows never change.
    const bool cache_rows = !update_channel_;
    if (cache_rows && teff_r_.empty()) {
        teff_r_.assign(NN, 0.0);
        teff_i_.assign(NN, 0.0);
        for (int n = 0; n < N; ++n) {
            const std::size_t row = static_cast<std::size_t>(n) * N;
            for (int p = 0; p < P; ++p) {
                const double h_r = hr_[n * P + p], h_i = hi_[n * P + p];
                const double* gR = &gr_[p * NN + row];
                const double* gI = &gi_[p * NN + row];
                for (int m = 0; m < N; ++m) {
                    teff_r_[row + m] += h_r * gR[m] - h_i * gI[m];
                    teff_i_[row + m] += h_r * gI[m] + h_i * gR[m];
                }
            }
        }
    }

    std::vector<double> Tbuf_r(N), Tbuf_i(N), cR(N), cI(N), q(N);
    std::vector<double> num_r(NN), num_i(NN), den(NN);

    for (int n = 0; n < N; ++n) {
        const std::size_t row = static_cast<std::size_t>(n) * N;
        const double* __restrict xr = &xr_[row];
        const double* __restrict xi = &xi_[row];
        const double* __restrict xv = &xv_[row];
        const double* hr = &hr_[n * P];
        const double* hi = &hi_[n * P];
        const double* hv = &hv_[n * P];
        double* yhr = &yhr_[n * P];
        double* yhi = &yhi_[n * P];
        double* S = &s_[n * P];

        bool any_hv = false;
        for (int p = 0; p < P; ++p) any_hv = any_hv || hv[p] > 0.0;

        if (any_hv && !update_channel_) {
            // Replicas were not refreshed by a channel step.
            for (int p = 0; p < P; ++p) {
                const double* __restrict gR = &gr_[p * NN + row];
                const double* __restrict gI = &gi_[p * NN + row];
                double a = 0.0, b = 0.0, c = 0.0;
#pragma omp simd reduction(+ : a, b, c)
                for (int m = 0; m < N; ++m) {
                    a += gR[m] * xr[m] - gI[m] * xi[m];
                    b += gR[m] * xi[m] + gI[m] * xr[m];
                    c += xv[m] * (gR[m] * gR[m] + gI[m] * gI[m]);
                }
                yhr[p] = a;
                yhi[p] = b;
                S[p] = c;
            }
        }

        const double* __restrict Tr;
        const double* __restrict Ti;
        double* __restrict c_r = cR.data();
        double* __restrict c_i = cI.data();
        double* __restrict qq = q.data();
        if (cache_rows) {
            Tr = &teff_r_[row];
            Ti = &teff_i_[row];
        } else {
            std::fill(Tbuf_r.begin(), Tbuf_r.end(), 0.0);
            std::fill(Tbuf_i.begin(), Tbuf_i.end(), 0.0);
            Tr = Tbuf_r.data();
            Ti = Tbuf_i.data();
        }
        double A = 0.0, Bs = 0.0;
        if (any_hv) {
            std::fill(cR.begin(), cR.end(), 0.0);
            std::fill(cI.begin(), cI.end(), 0.0);
            std::fill(q.begin(), q.end(), 0.0);
        }
        for (int p = 0; p < P; ++p) {
            const double* __restrict gR = &gr_[p * NN + row];
            const double* __restrict gI = &gi_[p * NN + row];
            const double h_r = hr[p], h_i = hi[p];
            if (!cache_rows) {
                double* __restrict tr_ = Tbuf_r.data();
                double* __restrict ti_ = Tbuf_i.data();
#pragma omp simd
                for (int m = 0; m < N; ++m) {
                    tr_[m] += h_r * gR[m] - h_i * gI[m];
                    ti_[m] += h_r * gI[m] + h_i * gR[m];
                }
            }
            if (any_hv && hv[p] > 0.0) {
                // hv * conj(yh) * gamma, and hv * |gamma|^2
                const double a_r = hv[p] * yhr[p];
                const double a_i = hv[p] * yhi[p];
                const double v = hv[p];
#pragma omp simd
                for (int m = 0; m < N; ++m) {
                    c_r[m] += a_r * gR[m] + a_i * gI[m];
                    c_i[m] += a_r * gI[m] - a_i * gR[m];
                    qq[m] += v * (gR[m] * gR[m] + gI[m] * gI[m]);
                }
                A += hv[p] * (yhr[p] * yhr[p] + yhi[p] * yhi[p]);
                Bs += hv[p] * S[p];
            }
        }

        double Rr = 0.0, Ri = 0.0, V = 0.0;
#pragma omp simd reduction(+ : Rr, Ri, V)
        for (int m = 0; m < N; ++m) {
            Rr += Tr[m] * xr[m] - Ti[m] * xi[m];
            Ri += Tr[m] * xi[m] + Ti[m] * xr[m];
            V += xv[m] * (Tr[m] * Tr[m] + Ti[m] * Ti[m]);
        }

        double* __restrict nr = &num_r[row];
        double* __restrict ni = &num_i[row];
        double* __restrict dn = &den[row];
        const double br = yr_[n] - Rr;
        const double bi = yi_[n] - Ri;
        if (any_hv) {
#pragma omp simd
            for (int m = 0; m < N; ++m) {
                const double t2 = Tr[m] * Tr[m] + Ti[m] * Ti[m];
                const double tr = br + (Tr[m] * xr[m] - Ti[m] * xi[m]);
                const double ti = bi + (Tr[m] * xi[m] + Ti[m] * xr[m]);
                const double vh = A - 2.0 * (xr[m] * c_r[m] - xi[m] * c_i[m]) + (xr[m] * xr[m] + xi[m] * xi[m]) * qq[m];
                double var = std::max(V - xv[m] * t2, 0.0) + N0 + std::max(vh, 0.0) +
                             std::max(Bs - xv[m] * qq[m], 0.0) + Es * qq[m];
                var = std::max(var, kVarFloor);
                const double inv = 1.0 / var;
                nr[m] = (Tr[m] * tr + Ti[m] * ti) * inv;
                ni[m] = (Tr[m] * ti - Ti[m] * tr) * inv;
                dn[m] = t2 * inv;
            }
        } else {
#pragma omp simd
            for (int m = 0; m < N; ++m) {
                const double t2 = Tr[m] * Tr[m] + Ti[m] * Ti[m];
                const double tr = br + (Tr[m] * xr[m] - Ti[m] * xi[m]);
                const double ti = bi + (Tr[m] * xi[m] + Ti[m] * xr[m]);
                const double var = std::max(std::max(V - xv[m] * t2, 0.0) + N0, kVarFloor);
                const double inv = 1.0 / var;
                nr[m] = (Tr[m] * tr + Ti[m] * ti) * inv;
                ni[m] = (Tr[m] * ti - Ti[m] * tr) * inv;
                dn[m] = t2 * inv;
            }
        }
    }

    std::fill(xnum_r_.begin(), xnum_r_.end(), 0.0);
    std::fill(xnum_i_.begin(), xnum_i_.end(), 0.0);
    std::fill(xden_.begin(), xden_.end(), 0.0);
    for (int n = 0; n < N; ++n) {
        const std::size_t row = static_cast<std::size_t>(n) * N;
        for (int m = 0; m < N; ++m) {
            xnum_r_[m] += num_r[row + m];
            xnum_i_[m] += num_i[row + m];
            xden_[m] += den[row + m];
        }
    }
    for (int m = 0; m < N; ++m)
        if (!std::isfinite(xnum_r_[m]) || !std::isfinite(xnum_i_[m]) || !std::isfinite(xden_[m]))
            throw NumericalError("non-finite symbol belief", iter_);

    const double bx = cfg_.beta_x;
    const double k = 2.0 * c_x_;
    // Leave-one-out arguments for every payload edge, then a vectorised tanh.
    const std::size_t L = payload_.size();
    Eigen::ArrayXd zr(N * L), zi(N * L);
    for (int n = 0; n < N; ++n) {
        const std::size_t row = static_cast<std::size_t>(n) * N;
        for (std::size_t j = 0; j < L; ++j) {
            const int m = payload_[j];
            zr[n * L + j] = k * (xnum_r_[m] - num_r[row + m]);
            zi[n * L + j] = k * (xnum_i_[m] - num_i[row + m]);
        }
    }
    // tanh saturates to 1 well before |z| = 20; clamping keeps exp out of subnormals.
    const Eigen::ArrayXd er = (-2.0 * zr.abs().min(20.0)).exp();
    const Eigen::ArrayXd ei = (-2.0 * zi.abs().min(20.0)).exp();
    const Eigen::ArrayXd mr_all = c_x_ * zr.sign() * (1.0 - er) / (1.0 + er);
    const Eigen::ArrayXd mi_all = c_x_ * zi.sign() * (1.0 - ei) / (1.0 + ei);
    for (int n = 0; n < N; ++n) {
        const std::size_t row = static_cast<std::size_t>(n) * N;
        for (std::size_t j = 0; j < L; ++j) {
            const std::size_t e = row + payload_[j];
            const double mr = mr_all[n * L + j];
            const double mi = mi_all[n * L + j];
            const double v = std::max(Es - (mr * mr + mi * mi), 0.0);
            xr_[e] = bx * mr + (1.0 - bx) * xr_[e];
            xi_[e] = bx * mi + (1.0 - bx) * xi_[e];
            xv_[e] = bx * v + (1.0 - bx) * xv_[e];
        }
    }
}

CVector PbigabpEngine::consensus_symbols() const
{
    CVector out(static_cast<Eigen::Index>(payload_.size()));
    for (std::size_t i = 0; i < payload_.size(); ++i) {
        const int m = payload_[i];
        out[static_cast<Eigen::Index>(i)] = {xnum_r_[m] < 0.0 ? -c_x_ : c_x_, xnum_i_[m] < 0.0 ? -c_x_ : c_x_};
    }
    return out;
}

void PbigabpEngine::consensus_channel(CVector& gains, RVector& vars) const
{
    gains.resize(P_);
    vars.resize(P_);
    const double sh2 = cfg_.sigma_h2;
    for (int p = 0; p < P_; ++p) {
        if (!update_channel_) {
            gains[p] = {hr_[p], hi_[p]};
            vars[p] = hv_[p];
            continue;
        }
        const double w = 1.0 / (1.0 + sh2 * hden_[p]);
        gains[p] = {sh2 * hnum_r_[p] * w, sh2 * hnum_i_[p] * w};
        vars[p] = sh2 * w;
    }
}

namespace {

JcdeTracePoint trace_point(const PbigabpEngine& eng, const JcdeTruth& truth)
{
    JcdeTracePoint tp;
    if (truth.gains) {
        CVector g;
        RVector v;
        eng.consensus_channel(g, v);
        const double den = truth.gains->squaredNorm();
        tp.nmse = den > 0.0 ? (g - *truth.gains).squaredNorm() / den : 0.0;
    }
    if (truth.bits && !truth.bits->empty()) {
        const auto bits = qpsk_demap(eng.consensus_symbols());
        std::size_t errors = 0;
        for (std::size_t i = 0; i < bits.size() && i < truth.bits->size(); ++i) errors += bits[i] != (*truth.bits)[i];
        tp.ber = static_cast<double>(errors) / static_cast<double>(truth.bits->size());
    }
    return tp;
}

void fill_output(const PbigabpEngine& eng, JcdeOutput& out)
{
    out.symbols = eng.consensus_symbols();
    out.bits = qpsk_demap(out.symbols);
    eng.consensus_channel(out.gains, out.gain_vars);
    out.iterations = eng.iteration();
}

}  // namespace

JcdeOutput run_pbigabp(const CVector& y, const std::vector<CMatrix>& operators, const FrameLayout& layout,
                       const JcdeConfig& cfg, const JcdeTruth& truth)
{
    PbigabpEngine eng(y, operators, layout, cfg);
    JcdeOutput out;
    const bool tracing = truth.gains || truth.bits;
    for (int i = 0; i < cfg.i_max; ++i) {
        eng.step();
        if (tracing) out.trace.push_back(trace_point(eng, truth));
    }
    fill_output(eng, out);
    return out;
}

void lmmse_gains(const CVector& y, const std::vector<CMatrix>& operators, const CVector& x, double N0,
                 double sigma_h2, CVector& gains, RVector& vars)
{
    const int P = static_cast<int>(operators.size());
    CMatrix A(y.size(), P);
    for (int p = 0; p < P; ++p) A.col(p) = operators[p] * x;
    CMatrix M = A.adjoint() * A;
    M.diagonal().array() += N0 / sigma_h2;
    Eigen::LDLT<CMatrix> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw NumericalError("LMMSE normal matrix is singular", 0);
    gains = ldlt.solve(A.adjoint() * y);
    const CMatrix inv = ldlt.solve(CMatrix::Identity(P, P));
    vars = (N0 * inv.diagonal().real()).cwiseMax(0.0);
}

JcdeOutput genie_linear_gabp(const CVector& y, const std::vector<CMatrix>& operators, const CVector& true_gains,
                             const CVector& true_frame, const FrameLayout& layout, const JcdeConfig& cfg)
{
    if (true_gains.size() != static_cast<Eigen::Index>(operators.size()))
        throw ShapeError("true gains and operators differ in length");

    CVector g0;
    RVector v0;
    lmmse_gains(y, operators, true_frame, cfg.N0, cfg.sigma_h2, g0, v0);
    PbigabpEngine chan(y, operators, layout, cfg);
    chan.fix_data(true_frame);
    chan.init_channel(g0, v0);
    for (int i = 0; i < cfg.i_max; ++i) chan.step();

    PbigabpEngine data(y, operators, layout, cfg);
    data.fix_channel(true_gains, RVector::Zero(true_gains.size()));
    for (int i = 0; i < cfg.i_max; ++i) data.step();

    JcdeOutput out;
    out.symbols = data.consensus_symbols();
    out.bits = qpsk_demap(out.symbols);
    chan.consensus_channel(out.gains, out.gain_vars);
    out.iterations = cfg.i_max;
    return out;
}

JcdeOutput pilot_only_estimate(const CVector& y, const std::vector<CMatrix>& operators, const FrameLayout& layout,
                               const JcdeConfig& cfg)
{
    if (layout.pilot_indices.empty()) throw ConfigError("pilot-only estimation needs at least one pilot");

    PbigabpEngine chan(y, operators, layout, cfg);
    chan.freeze_data_at_prior();
    for (int i = 0; i < cfg.i_max; ++i) chan.step();
    CVector g;
    RVector v;
    chan.consensus_channel(g, v);

    JcdeOutput out;
    out.gains = g;
    out.gain_vars = v;
    if (layout.payload_count() > 0) {
        PbigabpEngine data(y, operators, layout, cfg);
        data.fix_channel(g, v);
        for (int i = 0; i < cfg.i_max; ++i) data.step();
        out.symbols = data.consensus_symbols();
    } else {
        out.symbols.resize(0);
    }
    out.bits = qpsk_demap(out.symbols);
    out.iterations = cfg.i_max;
    return out;
}

}  // namespace ddisac
