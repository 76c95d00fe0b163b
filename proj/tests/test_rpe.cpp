#include <gtest/gtest.h>

#include "ddisac/errors.hpp"
#include "ddisac/rpe.hpp"
#include "support.hpp"

using namespace ddisac;
using ddisac::test::max_abs;
using ddisac::test::random_cvector;

namespace {

CVector qpsk_probe(int N, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<std::uint8_t> bits(2 * static_cast<std::size_t>(N));
    for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
    return qpsk_map(bits, Constellation{});
}

WaveformSpec afdm_spec(int N, double f_max = 0.25)
{
    const AfdmChirp c = afdm_tuning(N, f_max);
    return WaveformSpec::afdm(N, c.c1, c.c2);
}

// Cell whose single-column least-squares fit leaves the smallest residual.
int exhaustive_best_cell(const CMatrix& E, const CVector& y)
{
    int best = 0;
    double best_r = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < E.cols(); ++m) {
        const cplx a = E.col(m).dot(y) / E.col(m).squaredNorm();
        const double r = (y - a * E.col(m)).squaredNorm();
        if (r < best_r) {
            best_r = r;
            best = static_cast<int>(m);
        }
    }
    return best;
}

}  // namespace

TEST(Grid, UniformAxesAndIndexing)
{
    const DelayDopplerGrid g = DelayDopplerGrid::uniform(20, 0.25, 11);
    EXPECT_EQ(g.delay_count(), 21);
    EXPECT_EQ(g.doppler_count(), 11);
    EXPECT_DOUBLE_EQ(g.doppler_points.front(), -0.25);
    EXPECT_DOUBLE_EQ(g.doppler_points.back(), 0.25);
    EXPECT_NEAR(g.doppler_points[8], 0.15, 1e-15);
    EXPECT_EQ(g.nearest_doppler(0.141), 8);

    DelayDopplerGrid s;
    s.delay_taps = {0, 1, 2};
    s.doppler_points = {-0.2, -0.1, 0.1, 0.2};
    for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 4; ++d) {
            const int m = s.index(k, d);
            EXPECT_EQ(m, k * 4 + d);
            EXPECT_EQ(s.cell(m), std::make_pair(k, d));
        }
    s.doppler_points = {0.1, 0.1};
    EXPECT_THROW(s.validate(), ConfigError);
    s.doppler_points.clear();
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Dictionary, SingleFlatCellIsProbe)
{
    std::mt19937_64 rng(1);
    DelayDopplerGrid g;
    g.delay_taps = {0};
    g.doppler_points = {0.0};
    const CVector x = qpsk_probe(16, rng);
    for (const WaveformSpec& s : {WaveformSpec::ofdm(16), WaveformSpec::otfs(4, 4), afdm_spec(16)}) {
        const DelayDopplerDictionary d = build_dictionary(s, x, g);
        ASSERT_EQ(d.E.cols(), 1);
        EXPECT_LT((d.E.col(0) - x).norm(), 1e-12);
    }
}

TEST(Dictionary, ColumnNormsAndOnGridIdentity)
{
    std::mt19937_64 rng(2);
    const int N = 64;
    const SystemConfig sys = ddisac::test::small_system(N, 6);
    const DelayDopplerGrid g = DelayDopplerGrid::uniform(6, 0.25, 5);
    for (const WaveformSpec& s : {WaveformSpec::ofdm(N), WaveformSpec::otfs(16, 4), afdm_spec(N)}) {
        const CVector x = qpsk_probe(N, rng);
        const DelayDopplerDictionary d = build_dictionary(s, x, g);
        ASSERT_EQ(d.E.cols(), g.size());
        for (Eigen::Index m = 0; m < d.E.cols(); ++m) EXPECT_NEAR(d.E.col(m).norm(), x.norm(), 1e-10);

        // on-grid paths: dictionary route vs effective channel route
        ChannelRealization r = ddisac::test::make_realization(sys, {0, 2, 5}, {0.0, -0.125, 0.25}, rng);
        CVector h = CVector::Zero(g.size());
        for (const ChannelPath& p : r.paths) h[g.index(p.delay_tap, g.nearest_doppler(p.doppler))] += p.gain;
        const CVector want = build_effective_channel(s, r) * x;
        EXPECT_LT((d.E * h - want).norm() / want.norm(), 1e-10) << s.name();
        // column m equals Gamma(k, d) x
        const int m = g.index(3, 1);
        EXPECT_LT((d.E.col(m) - build_path_operator(s, 3, g.doppler_points[1]) * x).norm(), 1e-10);
    }
    EXPECT_THROW(build_dictionary(WaveformSpec::ofdm(N), CVector::Zero(N), g), ConfigError);
}

TEST(PilotBlock, ShapesAndRestriction)
{
    std::mt19937_64 rng(3);
    const int N = 144;
    const FrameLayout l = FrameLayout::single_pilot_guard(N, 12);
    const CVector x = build_frame(l, qpsk_probe(l.payload_count(), rng));
    const DelayDopplerGrid g = DelayDopplerGrid::uniform(20, 0.25, 11);
    const WaveformSpec s = afdm_spec(N);
    const DelayDopplerDictionary d = build_dictionary(s, x, g);
    CVector h = CVector::Zero(g.size());
    h[g.index(2, 8)] = {0.6, 0.8};
    const CVector y = d.E * h;
    const PilotBlock pb = restrict_to_pilot_block(d.E, y, l);
    EXPECT_EQ(pb.E.rows(), 12);
    EXPECT_EQ(pb.E.cols(), 231);
    EXPECT_EQ(pb.y.size(), 12);
    EXPECT_LT((pb.E * h - pb.y).norm(), 1e-12 * (1.0 + pb.y.norm()));
    for (int i = 0; i < 12; ++i) EXPECT_EQ(pb.rows[i], i);

    const FrameLayout full = FrameLayout::single_pilot_guard(N, N);
    const PilotBlock all = restrict_to_pilot_block(d.E, y, full);
    EXPECT_EQ(max_abs(all.E - d.E), 0.0);
    EXPECT_EQ((all.y - y).norm(), 0.0);

    EXPECT_THROW(restrict_to_pilot_block(d.E, y, FrameLayout::block_pilots(N, 12)), ConfigError);
}

TEST(BgDenoise, SparsityPosteriorClosedForm)
{
    // [((1-rho)/rho) ((s2 + sb)/s2) + 1]^{-1} at h_tilde = 0
    BgParams p;
    p.rho = 0.5;
    p.sigma_bar = 1.0;
    EXPECT_NEAR(bg_denoise(0.0, 1.0, p).rho_hat, 1.0 / 3.0, 1e-15);
    p.rho = 0.2;
    p.sigma_bar = 3.0;
    EXPECT_NEAR(bg_denoise(0.0, 0.5, p).rho_hat, 1.0 / (4.0 * 7.0 + 1.0), 1e-15);
}

TEST(BgDenoise, LimitsAndSlabMoments)
{
    BgParams p;
    p.rho = 1.0;
    EXPECT_EQ(bg_denoise({0.01, 0.0}, 1.0, p).rho_hat, 1.0);
    p.rho = 1e-300;
    EXPECT_LT(bg_denoise({1.0, 1.0}, 1.0, p).rho_hat, 1e-250);
    p.rho = 0.5;
    p.sigma_bar = 1.0;
    const BgPosterior b = bg_denoise(2.0, 1.0, p);
    EXPECT_NEAR(std::abs(b.mean - cplx(1.0)), 0.0, 1e-15);
    EXPECT_NEAR(b.var, 0.5, 1e-15);
    p.h_bar = {1.0, -1.0};
    const BgPosterior c = bg_denoise(2.0, 1.0, p);
    EXPECT_NEAR(std::abs(c.mean - cplx(1.5, -0.5)), 0.0, 1e-15);
    EXPECT_THROW(bg_denoise(1.0, 0.0, BgParams{}), DomainError);
    BgParams bad;
    bad.rho = 1.5;
    EXPECT_THROW(bg_denoise(1.0, 1.0, bad), DomainError);
}

TEST(BgDenoise, MatchesDirectEvidenceRatio)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    for (int t = 0; t < 200; ++t) {
        BgParams p;
        p.rho = u(rng) / 2.5;
        p.sigma_bar = u(rng);
        const double s2 = u(rng);
        const cplx h(u(rng) - 1.0, u(rng) - 1.0);
        // CN(h; 0, s2) vs CN(h; 0, s2 + sb)
        const double spike = std::exp(-std::norm(h) / s2) / s2;
        const double slab = std::exp(-std::norm(h) / (s2 + p.sigma_bar)) / (s2 + p.sigma_bar);
        const double want = p.rho * slab / (p.rho * slab + (1.0 - p.rho) * spike);
        EXPECT_NEAR(bg_denoise(h, s2, p).rho_hat, want, 1e-12);
    }
}

TEST(Sbl, IdentityDictionaryFirstStep)
{
    std::mt19937_64 rng(5);
    const int N = 10;
    const double N0 = 0.3;
    const CVector y = random_cvector(N, rng);
    SblEm s(y, CMatrix::Identity(N, N), N0 * CMatrix::Identity(N, N));
    s.step();
    EXPECT_LT((s.mean() - y / (1.0 + N0)).norm(), 1e-12);
}

TEST(Sbl, ZeroObservationStaysZero)
{
    std::mt19937_64 rng(6);
    const CMatrix E = CMatrix::Random(12, 30);
    SblEm s(CVector::Zero(12), E, 0.1 * CMatrix::Identity(12, 12));
    for (int i = 0; i < 10; ++i) {
        s.step();
        EXPECT_EQ(s.mean().norm(), 0.0);
    }
}

TEST(Sbl, HyperparametersStayPositive)
{
    std::mt19937_64 rng(7);
    const CMatrix E = CMatrix::Random(16, 40);
    const CVector y = random_cvector(16, rng);
    SblEm s(y, E, 0.05 * CMatrix::Identity(16, 16));
    for (int i = 0; i < 60; ++i) {
        s.step();
        for (Eigen::Index m = 0; m < s.hyperparameters().size(); ++m) ASSERT_GT(s.hyperparameters()[m], 0.0);
    }
}

TEST(Sbl, DirectAndWoodburyRoutesAgree)
{
    std::mt19937_64 rng(8);
    // tall and wide dictionaries take different routes
    for (auto [rows, cols] : {std::pair{30, 12}, std::pair{12, 30}}) {
        const CMatrix E = CMatrix::Random(rows, cols);
        const CVector y = random_cvector(rows, rng);
        const double N0 = 0.2;
        SblEm s(y, E, N0 * CMatrix::Identity(rows, rows));
        // brute-force E step with Xi = I
        const CMatrix Sigma = (E.adjoint() * E / N0 + CMatrix::Identity(cols, cols)).inverse();
        const CVector h = Sigma * E.adjoint() * y / N0;
        s.step();
        EXPECT_LT((s.mean() - h).norm(), 1e-9 * h.norm());
        for (Eigen::Index m = 0; m < cols; ++m)
            EXPECT_NEAR(s.hyperparameters()[m], Sigma(m, m).real() + std::norm(h[m]), 1e-9);
    }
}

TEST(Pda, InitialisationAndEmAverage)
{
    std::mt19937_64 rng(9);
    const CMatrix E = CMatrix::Random(12, 24);
    const CVector y = random_cvector(12, rng);
    PdaEm p(y, E, 0.1, 2, PdaConfig{});
    EXPECT_DOUBLE_EQ(p.params().rho, 2.0 / 24.0);
    EXPECT_DOUBLE_EQ(p.params().sigma_bar, 0.5);
    EXPECT_EQ(p.mean().norm(), 0.0);
    EXPECT_DOUBLE_EQ(p.var()[0], 1.0 / 24.0);
    for (int i = 0; i < 5; ++i) {
        p.step();
        EXPECT_NEAR(p.params().rho, p.rho_hat().mean(), 1e-15);
    }
}

TEST(Pda, SparsityInRangeAndCovariancePositive)
{
    std::mt19937_64 rng(10);
    for (double N0 : {1e-3, 0.1, 1.0}) {
        const CMatrix E = CMatrix::Random(12, 60);
        const CVector y = random_cvector(12, rng);
        PdaEm p(y, E, N0, 1, PdaConfig{});
        for (int i = 0; i < 40; ++i) {
            p.step();
            for (Eigen::Index m = 0; m < p.rho_hat().size(); ++m) {
                ASSERT_GE(p.rho_hat()[m], 0.0);
                ASSERT_LE(p.rho_hat()[m], 1.0);
            }
            ASSERT_GE(p.last_covariance_min_eig(), N0 * (1.0 - 1e-10));
        }
    }
}

TEST(Pda, RejectsBadArguments)
{
    const CMatrix E = CMatrix::Identity(4, 4);
    EXPECT_THROW(PdaEm(CVector::Zero(3), E, 0.1, 1, PdaConfig{}), ShapeError);
    EXPECT_THROW(PdaEm(CVector::Zero(4), E, 0.1, 0, PdaConfig{}), ConfigError);
    EXPECT_THROW(PdaEm(CVector::Zero(4), E, -0.1, 1, PdaConfig{}), ConfigError);
    EXPECT_THROW(pda_em(CVector::Zero(4), E, 0.1, 1, PdaConfig{0.5, 0}), ConfigError);
}

TEST(Solvers, TinyNoiselessSingleTarget)
{
    // N=8, 4 delays x 2 Dopplers
    std::mt19937_64 rng(11);
    const int N = 8;
    DelayDopplerGrid g;
    g.delay_taps = {0, 1, 2, 3};
    g.doppler_points = {-0.25, 0.25};
    const WaveformSpec s = afdm_spec(N);
    for (int target = 0; target < g.size(); ++target) {
        const CVector x = qpsk_probe(N, rng);
        const DelayDopplerDictionary d = build_dictionary(s, x, g);
        const CVector y = d.E.col(target) * cplx(0.8, -0.6);
        ASSERT_EQ(exhaustive_best_cell(d.E, y), target);
        const SparseChannelEstimate a = pda_em(y, d.E, 1e-12, 1, PdaConfig{});
        const SparseChannelEstimate b = sbl_em(y, d.E, 1e-12 * CMatrix::Identity(N, N), SblConfig{});
        EXPECT_EQ(top_support(a.h_hat, 1)[0], target);
        EXPECT_EQ(top_support(b.h_hat, 1)[0], target);
    }
}

TEST(Solvers, SmallInstancesMatchExhaustiveSearch)
{
    std::mt19937_64 rng(12);
    const int N = 16;
    DelayDopplerGrid g;
    g.delay_taps = {0, 1, 2, 3};
    g.doppler_points = {-0.25, -0.0833, 0.0833, 0.25};
    const WaveformSpec s = afdm_spec(N);
    std::uniform_int_distribution<int> cell(0, g.size() - 1);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    for (int t = 0; t < 30; ++t) {
        const CVector x = qpsk_probe(N, rng);
        const DelayDopplerDictionary d = build_dictionary(s, x, g);
        const CVector y = d.E.col(cell(rng)) * std::polar(1.0, ph(rng));
        const int best = exhaustive_best_cell(d.E, y);
        EXPECT_EQ(top_support(pda_em(y, d.E, 1e-12, 1, PdaConfig{}).h_hat, 1)[0], best);
        EXPECT_EQ(top_support(sbl_em(y, d.E, 1e-12 * CMatrix::Identity(N, N), SblConfig{}).h_hat, 1)[0], best);
    }
}

TEST(Solvers, GlobalPhaseEquivariance)
{
    std::mt19937_64 rng(13);
    const int N = 16;
    const DelayDopplerGrid g = DelayDopplerGrid::uniform(3, 0.25, 5);
    const WaveformSpec s = afdm_spec(N);
    const CVector x = qpsk_probe(N, rng);
    const DelayDopplerDictionary d = build_dictionary(s, x, g);
    const CVector y = d.E.col(7) + 0.1 * random_cvector(N, rng);
    const cplx rot = std::polar(1.0, 1.234);
    const double N0 = 0.02;

    const SparseChannelEstimate a = pda_em(y, d.E, N0, 1, PdaConfig{});
    const SparseChannelEstimate b = pda_em(rot * y, d.E, N0, 1, PdaConfig{});
    EXPECT_LT((a.h_hat.cwiseAbs() - b.h_hat.cwiseAbs()).norm(), 1e-9 * a.h_hat.norm());
    EXPECT_LT((rot * a.h_hat - b.h_hat).norm(), 1e-9 * a.h_hat.norm());
    EXPECT_LT((a.rho_hat - b.rho_hat).norm(), 1e-9);

    const CMatrix Rw = N0 * CMatrix::Identity(N, N);
    const SparseChannelEstimate c = sbl_em(y, d.E, Rw, SblConfig{});
    const SparseChannelEstimate e = sbl_em(rot * y, d.E, Rw, SblConfig{});
    EXPECT_LT((c.h_hat.cwiseAbs() - e.h_hat.cwiseAbs()).norm(), 1e-9 * c.h_hat.norm());
}

TEST(Targets, ExtractionAndTies)
{
    const SystemConfig sys = [] {
        SystemConfig c;
        c.N = 144;
        return c;
    }();
    const DelayDopplerGrid g = DelayDopplerGrid::uniform(20, 0.25, 11);
    SparseChannelEstimate est;
    est.h_hat = CVector::Zero(g.size());
    est.h_hat[g.index(2, 8)] = {0.0, 2.0};
    const std::vector<RadarTarget> t = extract_targets(est, g, sys, 1);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].grid_index, 30);
    EXPECT_EQ(t[0].delay_tap, 2);
    EXPECT_NEAR(t[0].doppler, 0.15, 1e-15);
    EXPECT_NEAR(t[0].range_m, 15.0, 1e-12);

    CVector tie = CVector::Zero(6);
    tie[4] = 1.0;
    tie[1] = -1.0;
    EXPECT_EQ(top_support(tie, 1)[0], 1);
    EXPECT_THROW(extract_targets(est, g, sys, g.size() + 1), ConfigError);
}

TEST(Targets, UnitConversionsRoundTrip)
{
    SystemConfig sys;
    sys.N = 144;
    EXPECT_NEAR(range_to_tap(15.0, sys), 2.0, 1e-12);
    EXPECT_NEAR(tap_to_range(2, sys), 15.0, 1e-12);
    const double f = velocity_to_doppler(151.0 / 3.6, sys);
    EXPECT_NEAR(doppler_to_velocity(f, sys), 151.0 / 3.6, 1e-9);
    EXPECT_NEAR(f, 2.0 * (151.0 / 3.6) * 70e9 / 3e8 * 144 / 20e6, 1e-12);
}

TEST(Metrics, NormalizedRmse)
{
    EXPECT_EQ(normalized_rmse({15.0, 3.0}, {15.0, 3.0}), 0.0);
    EXPECT_NEAR(normalized_rmse({16.0}, {15.0}), 1.0 / 15.0, 1e-15);
    // squared error over |truth| scales linearly with a common factor
    const double a = normalized_rmse({16.0, -2.5}, {15.0, -3.0});
    const double b = normalized_rmse({32.0, -5.0}, {30.0, -6.0});
    EXPECT_NEAR(b, 2.0 * a, 1e-14);
    EXPECT_THROW(normalized_rmse({1.0}, {0.0}), DomainError);
    EXPECT_THROW(normalized_rmse({1.0}, {1.0, 2.0}), ShapeError);
}

TEST(Plateau, FirstStableIteration)
{
    EXPECT_EQ(iterations_to_plateau({}), 0);
    EXPECT_EQ(iterations_to_plateau({{1}, {2}, {2}, {2}}), 2);
    EXPECT_EQ(iterations_to_plateau({{3}, {3}}), 1);
    EXPECT_EQ(iterations_to_plateau({{3}, {4}, {3}}), 3);
}
