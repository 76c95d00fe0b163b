#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddisac/ddchan.hpp"
#include "ddisac/jcde.hpp"
#include "ddisac/rpe.hpp"
#include "ddisac/waveform.hpp"

namespace ddisac {

enum class Scenario { jcde, rpe };
enum class Method { pbigabp, genie, pilot_only, pda_em, sbl_em };

std::string to_string(Scenario s);
std::string to_string(Method m);
Scenario scenario_from_string(const std::string& s);  // throws ConfigError
Method method_from_string(const std::string& s);

struct ExperimentPlan {
    Scenario scenario = Scenario::jcde;
    SystemConfig system;
    std::vector<WaveformKind> waveforms{WaveformKind::afdm};
    std::vector<Method> methods{Method::pbigabp};

    int otfs_k = 32;
    int otfs_m = 4;
    std::optional<double> afdm_c1;
    std::optional<double> afdm_c2;

    LayoutKind layout = LayoutKind::block_pilots;
    bool ofdm_comb_pilots = true;  // OFDM frames spread a block layout's pilots across subcarriers
    int pilot_block = 32;
    double pilot_power_boost = 1.0;
    std::optional<double> pilot_only_boost;  // frame used by the pilot-only baseline

    int nlos_paths = 4;
    bool distinct_delays = true;  // scattered paths on distinct nonzero taps
    double sigma_h2 = 1.0;
    double E_s = 1.0;
    JcdeConfig jcde;  // N0, E_s, sigma_h2 and num_paths are filled per trial

    // Radar scenario.
    int targets = 1;
    bool fixed_target = true;  // one target at target_range_m / target_velocity_kmh
    double target_range_m = 15.0;
    double target_velocity_kmh = 151.0;
    int doppler_points = 11;
    SblConfig sbl;
    PdaConfig pda;

    // Noise power handed to solvers at infinite SNR, where the channel itself is noiseless.
    double noiseless_solver_n0 = 1e-12;

    std::vector<double> snr_db;  // +inf means noiseless
    int trials = 100;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
    WaveformSpec make_waveform(WaveformKind kind) const;
    FrameLayout make_layout(double boost) const;
    FrameLayout make_layout(double boost, WaveformKind kind) const;
    DelayDopplerGrid make_grid() const;
};

struct SeriesKey {
    WaveformKind waveform;
    Method method;
};

std::vector<SeriesKey> series_for(const ExperimentPlan& plan);

// Per-trial outcome of one method. A negative value marks a metric the scenario does not produce.
struct TrialMetrics {
    bool failed = false;
    double bit_errors = 0.0;
    double bits = 0.0;
    double nmse = -1.0;
    double rmse_range = -1.0;
    double rmse_velocity = -1.0;
    double iterations = -1.0;
};

struct SweepResults {
    std::vector<SeriesKey> series;
    std::vector<double> snr_db;
    // cells[snr][series] maps trial index to its metrics.
    std::vector<std::vector<std::map<int, TrialMetrics>>> cells;
    std::vector<double> wall_seconds;  // per SNR point
};

struct MetricsRecord {
    Scenario scenario = Scenario::jcde;
    std::string waveform;
    std::string method;
    double snr_db = 0.0;
    int trials = 0;
    std::optional<double> ber;
    std::optional<double> nmse;
    std::optional<double> rmse_range;
    std::optional<double> rmse_velocity;
    std::optional<double> mean_iterations;
    int failures = 0;
    std::uint64_t seed = 0;
    double wall_time_seconds = 0.0;
};

// Stream for one trial, a pure function of the three indices.
std::mt19937_64 trial_rng(std::uint64_t base_seed, int snr_index, int trial_index);

// All series of one trial, in series_for order.
std::vector<TrialMetrics> run_trial(const ExperimentPlan& plan, int snr_index, int trial_index);

// Trials [first, first + count) at every SNR point. threads <= 0 uses default_thread_count().
SweepResults run_trial_range(const ExperimentPlan& plan, int first, int count, int threads = 0);

// Throws ConfigError when both sides hold the same trial.
SweepResults merge(const SweepResults& a, const SweepResults& b);

std::vector<MetricsRecord> summarize(const ExperimentPlan& plan, const SweepResults& results);

std::vector<MetricsRecord> run_jcde_sweep(const ExperimentPlan& plan, int threads = 0);
std::vector<MetricsRecord> run_rpe_sweep(const ExperimentPlan& plan, int threads = 0);
std::vector<MetricsRecord> run_sweep(const ExperimentPlan& plan, int threads = 0);

// DDISAC_THREADS if set, else hardware concurrency.
int default_thread_count();

double ber(const std::vector<std::uint8_t>& decoded, const std::vector<std::uint8_t>& truth);
double nmse(const CVector& estimate, const CVector& truth);

// Noise power for a given SNR in dB: E_s * sigma_h2 / 10^(snr/10); zero at +inf.
double noise_power(double snr_db, double E_s, double sigma_h2);

}  // namespace ddisac
