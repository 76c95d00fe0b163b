#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ddisac/errors.hpp"
#include "ddisac/simkit.hpp"

using namespace ddisac;

namespace {

ExperimentPlan small_jcde_plan()
{
    ExperimentPlan p;
    p.scenario = Scenario::jcde;
    p.system.N = 32;
    p.system.ell_max = 4;
    p.system.cp_len = 4;
    p.otfs_k = 8;
    p.otfs_m = 4;
    p.pilot_block = 8;
    p.nlos_paths = 2;
    p.waveforms = {WaveformKind::ofdm, WaveformKind::afdm};
    p.methods = {Method::pbigabp, Method::genie};
    p.jcde.i_max = 15;
    p.snr_db = {5.0, 15.0};
    p.trials = 6;
    p.seed = 42;
    return p;
}

ExperimentPlan small_rpe_plan()
{
    ExperimentPlan p;
    p.scenario = Scenario::rpe;
    p.system.N = 144;
    p.waveforms = {WaveformKind::afdm};
    p.methods = {Method::pda_em, Method::sbl_em};
    p.layout = LayoutKind::single_pilot_guard;
    p.pilot_block = 12;
    p.snr_db = {20.0};
    p.trials = 4;
    p.seed = 9;
    return p;
}

void expect_same_records(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b)
{
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].waveform, b[i].waveform);
        EXPECT_EQ(a[i].method, b[i].method);
        EXPECT_EQ(a[i].snr_db, b[i].snr_db);
        EXPECT_EQ(a[i].trials, b[i].trials);
        EXPECT_EQ(a[i].ber, b[i].ber);
        EXPECT_EQ(a[i].nmse, b[i].nmse);
        EXPECT_EQ(a[i].rmse_range, b[i].rmse_range);
        EXPECT_EQ(a[i].rmse_velocity, b[i].rmse_velocity);
        EXPECT_EQ(a[i].mean_iterations, b[i].mean_iterations);
        EXPECT_EQ(a[i].failures, b[i].failures);
        EXPECT_EQ(a[i].seed, b[i].seed);
    }
}

}  // namespace

TEST(Metrics, BerAndNmse)
{
    const std::vector<std::uint8_t> a{0, 1, 1, 0};
    EXPECT_EQ(ber(a, a), 0.0);
    EXPECT_EQ(ber(a, {1, 0, 0, 1}), 1.0);
    EXPECT_EQ(ber(a, {0, 1, 1, 1}), 0.25);
    EXPECT_THROW(ber(a, {0, 1}), ShapeError);
    CVector t(3);
    t << cplx(1, 2), cplx(-0.5, 0.1), cplx(0, 3);
    EXPECT_EQ(nmse(t, t), 0.0);
    EXPECT_NEAR(nmse(2.0 * t, t), 1.0, 1e-15);
    EXPECT_THROW(nmse(t.head(2), t), ShapeError);
    EXPECT_THROW(nmse(t, CVector::Zero(3)), DomainError);
}

TEST(Metrics, NoisePower)
{
    EXPECT_NEAR(noise_power(10.0, 1.0, 1.0), 0.1, 1e-16);
    EXPECT_NEAR(noise_power(0.0, 2.0, 0.5), 1.0, 1e-16);
    EXPECT_EQ(noise_power(std::numeric_limits<double>::infinity(), 1.0, 1.0), 0.0);
}

TEST(Plan, Validation)
{
    ExperimentPlan p = small_jcde_plan();
    EXPECT_NO_THROW(p.validate());
    p.snr_db.clear();
    EXPECT_THROW(p.validate(), ConfigError);
    p = small_jcde_plan();
    p.trials = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = small_jcde_plan();
    p.methods = {Method::sbl_em};
    EXPECT_THROW(p.validate(), ConfigError);
    p = small_jcde_plan();
    p.otfs_k = 7;
    p.waveforms = {WaveformKind::otfs};
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_THROW(run_rpe_sweep(small_jcde_plan(), 1), ConfigError);
    EXPECT_THROW(method_from_string("nope"), ConfigError);
    EXPECT_EQ(method_from_string("pilot_only"), Method::pilot_only);
    EXPECT_EQ(scenario_from_string("rpe"), Scenario::rpe);
}

TEST(Sweep, TrialStreamsDiffer)
{
    auto a = trial_rng(1, 0, 0), b = trial_rng(1, 0, 1), c = trial_rng(1, 1, 0), d = trial_rng(2, 0, 0);
    auto a2 = trial_rng(1, 0, 0);
    const auto va = a();
    EXPECT_EQ(va, a2());
    EXPECT_NE(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
}

TEST(Sweep, NearNoiselessGenieHasZeroBer)
{
    ExperimentPlan p = small_jcde_plan();
    p.system.f_max = 0.0;
    p.waveforms = {WaveformKind::afdm};
    p.methods = {Method::genie};
    p.snr_db = {120.0};  // N0 = 1e-12
    p.trials = 100;
    const std::vector<MetricsRecord> r = run_jcde_sweep(p, 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].ber.value(), 0.0);
    EXPECT_EQ(r[0].failures, 0);
}

TEST(Sweep, DeterministicAcrossRunsAndThreads)
{
    const ExperimentPlan p = small_jcde_plan();
    const auto a = run_jcde_sweep(p, 1);
    const auto b = run_jcde_sweep(p, 1);
    const auto c = run_jcde_sweep(p, 3);
    expect_same_records(a, b);
    expect_same_records(a, c);
    for (const MetricsRecord& r : a) {
        ASSERT_TRUE(r.ber && r.nmse);
        EXPECT_GE(*r.ber, 0.0);
        EXPECT_LE(*r.ber, 1.0);
        EXPECT_GE(*r.nmse, 0.0);
        EXPECT_FALSE(r.rmse_range);
    }
}

TEST(Sweep, SingleTrialReplay)
{
    const ExperimentPlan p = small_jcde_plan();
    const SweepResults all = run_trial_range(p, 0, p.trials, 1);
    for (int s = 0; s < 2; ++s)
        for (int t : {0, 3, 5}) {
            const std::vector<TrialMetrics> one = run_trial(p, s, t);
            for (std::size_t k = 0; k < one.size(); ++k) {
                const TrialMetrics& w = all.cells[s][k].at(t);
                EXPECT_EQ(one[k].bit_errors, w.bit_errors);
                EXPECT_EQ(one[k].nmse, w.nmse);
                EXPECT_EQ(one[k].failed, w.failed);
            }
        }
}

TEST(Sweep, MergingHalvesEqualsFullSweep)
{
    const ExperimentPlan p = small_jcde_plan();
    const SweepResults full = run_trial_range(p, 0, 6, 1);
    const SweepResults merged = merge(run_trial_range(p, 0, 3, 1), run_trial_range(p, 3, 3, 1));
    expect_same_records(summarize(p, full), summarize(p, merged));
    EXPECT_THROW(merge(full, run_trial_range(p, 5, 1, 1)), ConfigError);

    const ExperimentPlan q = small_rpe_plan();
    expect_same_records(summarize(q, run_trial_range(q, 0, 4, 1)),
                        summarize(q, merge(run_trial_range(q, 2, 2, 1), run_trial_range(q, 0, 2, 1))));
}

TEST(Sweep, RpeNoiselessFullFrameExactRecovery)
{
    ExperimentPlan p = small_rpe_plan();
    p.layout = LayoutKind::block_pilots;
    p.snr_db = {std::numeric_limits<double>::infinity()};
    p.trials = 10;
    const auto r = run_rpe_sweep(p, 1);
    ASSERT_EQ(r.size(), 2u);
    for (const MetricsRecord& m : r) {
        EXPECT_EQ(m.rmse_range.value(), 0.0) << m.method;
        EXPECT_EQ(m.rmse_velocity.value(), 0.0) << m.method;
        EXPECT_FALSE(m.ber);
        EXPECT_GE(m.mean_iterations.value(), 1.0);
    }
}

TEST(Sweep, RpeRecordsHaveRadarMetricsOnly)
{
    const auto r = run_rpe_sweep(small_rpe_plan(), 1);
    for (const MetricsRecord& m : r) {
        EXPECT_EQ(m.scenario, Scenario::rpe);
        EXPECT_TRUE(m.rmse_range && m.rmse_velocity && m.mean_iterations);
        EXPECT_GE(*m.rmse_range, 0.0);
        EXPECT_FALSE(m.nmse);
    }
}
