#include "ddisac/simkit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "ddisac/errors.hpp"

namespace ddisac {

std::string to_string(Scenario s)
{
    return s == Scenario::jcde ? "jcde" : "rpe";
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::pbigabp: return "pbigabp";
    case Method::genie: return "genie";
    case Method::pilot_only: return "pilot_only";
    case Method::pda_em: return "pda_em";
    case Method::sbl_em: return "sbl_em";
    }
    return "unknown";
}

Scenario scenario_from_string(const std::string& s)
{
    if (s == "jcde") return Scenario::jcde;
    if (s == "rpe") return Scenario::rpe;
    throw ConfigError("unknown scenario '" + s + "'");
}

Method method_from_string(const std::string& s)
{
    for (Method m : {Method::pbigabp, Method::genie, Method::pilot_only, Method::pda_em, Method::sbl_em})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + s + "'");
}

namespace {

bool is_jcde_method(Method m)
{
    return m == Method::pbigabp || m == Method::genie || m == Method::pilot_only;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

void ExperimentPlan::validate() const
{
    system.validate();
    if (waveforms.empty()) throw ConfigError("no waveforms requested");
    if (methods.empty()) throw ConfigError("no methods requested");
    for (Method m : methods) {
        if (scenario == Scenario::jcde && !is_jcde_method(m))
            throw ConfigError("method " + to_string(m) + " does not apply to the jcde scenario");
        if (scenario == Scenario::rpe && is_jcde_method(m))
            throw ConfigError("method " + to_string(m) + " does not apply to the rpe scenario");
    }
    for (WaveformKind w : waveforms)
        if (w == WaveformKind::otfs && otfs_k * otfs_m != system.N)
            throw ConfigError("OTFS grid K*M must equal N");
    if (afdm_c1 && !(*afdm_c1 > 0.0)) throw ConfigError("AFDM c1 must be positive");
    if (layout != LayoutKind::all_pilots && (pilot_block < 1 || pilot_block > system.N))
        throw ConfigError("pilot block must lie in [1, N]");
    if (!(pilot_power_boost > 0.0)) throw ConfigError("pilot power boost must be positive");
    if (pilot_only_boost && !(*pilot_only_boost > 0.0)) throw ConfigError("pilot-only boost must be positive");
    if (nlos_paths < 1) throw ConfigError("need at least one scattered path");
    if (distinct_delays && nlos_paths > system.ell_max)
        throw ConfigError("not enough delay taps for distinct scattered paths");
    if (!(sigma_h2 > 0.0) || !(E_s > 0.0)) throw ConfigError("sigma_h2 and E_s must be positive");
    JcdeConfig j = jcde;
    j.N0 = 1.0;
    j.validate();
    if (snr_db.empty()) throw ConfigError("SNR list is empty");
    for (double s : snr_db)
        if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) throw ConfigError("invalid SNR point");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (scenario == Scenario::rpe) {
        if (targets < 1) throw ConfigError("need at least one target");
        if (fixed_target && targets != 1) throw ConfigError("the fixed target setup has exactly one target");
        if (doppler_points < 1) throw ConfigError("need at least one Doppler point");
        if (sbl.i_max < 1 || pda.i_max < 1) throw ConfigError("solver i_max must be at least 1");
        if (!(noiseless_solver_n0 > 0.0)) throw ConfigError("noiseless solver noise must be positive");
        const DelayDopplerGrid g = make_grid();
        if (targets > g.size()) throw ConfigError("more targets than grid cells");
        if (layout == LayoutKind::single_pilot_guard && pilot_block < 2)
            throw ConfigError("pilot block too short for radar estimation");
    }
}

WaveformSpec ExperimentPlan::make_waveform(WaveformKind kind) const
{
    switch (kind) {
    case WaveformKind::ofdm: return WaveformSpec::ofdm(system.N);
    case WaveformKind::otfs: return WaveformSpec::otfs(otfs_k, otfs_m);
    case WaveformKind::afdm: {
        const AfdmChirp c = afdm_tuning(system.N, system.f_max);
        return WaveformSpec::afdm(system.N, afdm_c1.value_or(c.c1), afdm_c2.value_or(c.c2));
    }
    }
    throw ConfigError("unknown waveform");
}

FrameLayout ExperimentPlan::make_layout(double boost) const
{
    switch (layout) {
    case LayoutKind::block_pilots: return FrameLayout::block_pilots(system.N, pilot_block, boost);
    case LayoutKind::comb_pilots: return FrameLayout::comb_pilots(system.N, pilot_block, boost);
    case LayoutKind::single_pilot_guard: return FrameLayout::single_pilot_guard(system.N, pilot_block, boost);
    case LayoutKind::all_pilots: return FrameLayout::all_pilots(system.N);
    }
    throw ConfigError("unknown layout");
}

FrameLayout ExperimentPlan::make_layout(double boost, WaveformKind kind) const
{
    if (kind == WaveformKind::ofdm && layout == LayoutKind::block_pilots && ofdm_comb_pilots)
        return FrameLayout::comb_pilots(system.N, pilot_block, boost);
    return make_layout(boost);
}

DelayDopplerGrid ExperimentPlan::make_grid() const
{
    return DelayDopplerGrid::uniform(system.ell_max, system.f_max, doppler_points);
}

std::vector<SeriesKey> series_for(const ExperimentPlan& plan)
{
    std::vector<SeriesKey> s;
    for (WaveformKind w : plan.waveforms)
        for (Method m : plan.methods) s.push_back({w, m});
    return s;
}

std::mt19937_64 trial_rng(std::uint64_t base_seed, int snr_index, int trial_index)
{
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(snr_index));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(trial_index) << 1));
    return std::mt19937_64(h);
}

double noise_power(double snr_db, double E_s, double sigma_h2)
{
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return E_s * sigma_h2 / std::pow(10.0, snr_db / 10.0);
}

double ber(const std::vector<std::uint8_t>& decoded, const std::vector<std::uint8_t>& truth)
{
    if (decoded.size() != truth.size()) throw ShapeError("bit sequences differ in length");
    if (truth.empty()) return 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) errors += (decoded[i] != 0) != (truth[i] != 0);
    return static_cast<double>(errors) / static_cast<double>(truth.size());
}

double nmse(const CVector& estimate, const CVector& truth)
{
    if (estimate.size() != truth.size()) throw ShapeError("vectors differ in length");
    const double den = truth.squaredNorm();
    if (den == 0.0) throw DomainError("NMSE undefined for a zero truth");
    return (estimate - truth).squaredNorm() / den;
}

namespace {

std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t n)
{
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng() >> 63);
    return b;
}

CVector unit_noise(std::mt19937_64& rng, int N)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    CVector w(N);
    for (int n = 0; n < N; ++n) {
        const double re = g(rng);
        const double im = g(rng);
        w[n] = {re, im};
    }
    return w;
}

CVector receive(const WaveformSpec& spec, const CMatrix& H, const CVector& x, const CVector& w, double N0)
{
    CVector r = H * spec.modulate(x);
    if (N0 > 0.0) r += std::sqrt(N0) * w;
    return spec.demodulate(r);
}

TrialMetrics jcde_metrics(const JcdeOutput& out, const std::vector<std::uint8_t>& bits, const CVector& gains)
{
    TrialMetrics t;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) errors += out.bits[i] != bits[i];
    t.bit_errors = static_cast<double>(errors);
    t.bits = static_cast<double>(bits.size());
    t.nmse = nmse(out.gains, gains);
    t.iterations = out.iterations;
    return t;
}

std::vector<TrialMetrics> run_jcde_trial(const ExperimentPlan& plan, int snr_index, int trial_index)
{
    std::mt19937_64 rng = trial_rng(plan.seed, snr_index, trial_index);
    const SystemConfig& sys = plan.system;
    const double N0 = noise_power(plan.snr_db[snr_index], plan.E_s, plan.sigma_h2);
    const ChannelRealization real = sample_paths(sys, plan.nlos_paths, plan.sigma_h2, rng,
                                                    plan.distinct_delays ? TapDraw::distinct : TapDraw::independent);
    const int payload = plan.make_layout(plan.pilot_power_boost).payload_count();
    const std::vector<std::uint8_t> bits = random_bits(rng, 2 * static_cast<std::size_t>(payload));
    const CVector w = unit_noise(rng, sys.N);

    const Constellation cons{plan.E_s};
    const CVector symbols = qpsk_map(bits, cons);
    const int P1 = static_cast<int>(real.paths.size());
    CVector gains(P1);
    for (int p = 0; p < P1; ++p) gains[p] = real.paths[p].gain;

    JcdeConfig cfg = plan.jcde;
    cfg.E_s = plan.E_s;
    cfg.sigma_h2 = plan.sigma_h2;
    cfg.num_paths = P1;
    cfg.N0 = N0 > 0.0 ? N0 : plan.noiseless_solver_n0;

    std::vector<TrialMetrics> out;
    for (WaveformKind wk : plan.waveforms) {
        const WaveformSpec spec = plan.make_waveform(wk);
        const FrameLayout layout = plan.make_layout(plan.pilot_power_boost, wk);
        const CVector x = build_frame(layout, symbols);
        const CMatrix H = build_td_channel(real, spec.prefix_rule());
        std::vector<CMatrix> ops;
        ops.reserve(P1);
        for (const ChannelPath& path : real.paths) ops.push_back(build_path_operator(spec, path.delay_tap, path.doppler));
        const CVector y = receive(spec, H, x, w, N0);

        for (Method m : plan.methods) {
            try {
                switch (m) {
                case Method::pbigabp:
                    out.push_back(jcde_metrics(run_pbigabp(y, ops, layout, cfg), bits, gains));
                    break;
                case Method::genie:
                    out.push_back(jcde_metrics(genie_linear_gabp(y, ops, gains, x, layout, cfg), bits, gains));
                    break;
                case Method::pilot_only: {
                    const double boost = plan.pilot_only_boost.value_or(plan.pilot_power_boost);
                    if (boost == plan.pilot_power_boost) {
                        out.push_back(jcde_metrics(pilot_only_estimate(y, ops, layout, cfg), bits, gains));
                    } else {
                        const FrameLayout l2 = plan.make_layout(boost, wk);
                        const CVector x2 = build_frame(l2, symbols);
                        const CVector y2 = receive(spec, H, x2, w, N0);
                        out.push_back(jcde_metrics(pilot_only_estimate(y2, ops, l2, cfg), bits, gains));
                    }
                    break;
                }
                default: throw ConfigError("method not valid for jcde");
                }
            } catch (const NumericalError&) {
                TrialMetrics t;
                t.failed = true;
                out.push_back(t);
            }
        }
    }
    return out;
}

struct TrueTarget {
    int grid_index;
    int delay_tap;
    double doppler;
    double range_m;
    double velocity_mps;
};

std::vector<TrueTarget> draw_targets(const ExperimentPlan& plan, const DelayDopplerGrid& grid, std::mt19937_64& rng)
{
    const SystemConfig& sys = plan.system;
    std::vector<int> cells;
    if (plan.fixed_target) {
        const double tap_f = range_to_tap(plan.target_range_m, sys);
        const int tap = static_cast<int>(std::lround(tap_f));
        auto it = std::find(grid.delay_taps.begin(), grid.delay_taps.end(), tap);
        if (it == grid.delay_taps.end()) throw ConfigError("fixed target range falls outside the delay grid");
        const int k = static_cast<int>(it - grid.delay_taps.begin());
        const int d = grid.nearest_doppler(velocity_to_doppler(plan.target_velocity_kmh / 3.6, sys));
        cells.push_back(grid.index(k, d));
    } else {
        // Zero delay or zero Doppler would make the normalized error undefined.
        std::vector<int> eligible;
        for (int m = 0; m < grid.size(); ++m) {
            const auto [k, d] = grid.cell(m);
            if (grid.delay_taps[k] > 0 && grid.doppler_points[d] != 0.0) eligible.push_back(m);
        }
        if (static_cast<int>(eligible.size()) < plan.targets)
            throw ConfigError("not enough grid cells with nonzero delay and Doppler");
        for (int i = 0; i < plan.targets; ++i) {
            std::uniform_int_distribution<int> pick(i, static_cast<int>(eligible.size()) - 1);
            std::swap(eligible[i], eligible[pick(rng)]);
            cells.push_back(eligible[i]);
        }
    }
    std::vector<TrueTarget> out;
    for (int m : cells) {
        const auto [k, d] = grid.cell(m);
        TrueTarget t;
        t.grid_index = m;
        t.delay_tap = grid.delay_taps[k];
        t.doppler = grid.doppler_points[d];
        t.range_m = tap_to_range(t.delay_tap, sys);
        t.velocity_mps = doppler_to_velocity(t.doppler, sys);
        out.push_back(t);
    }
    return out;
}

// Pairs estimates with truths by the permutation of least total normalized error.
void score_targets(const std::vector<RadarTarget>& est, const std::vector<TrueTarget>& truth, TrialMetrics& t)
{
    const std::size_t P = truth.size();
    std::vector<double> tr(P), tv(P);
    for (std::size_t i = 0; i < P; ++i) {
        tr[i] = truth[i].range_m;
        tv[i] = truth[i].velocity_mps;
    }
    std::vector<std::size_t> perm(P);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        std::vector<double> er(P), ev(P);
        for (std::size_t i = 0; i < P; ++i) {
            er[i] = est[perm[i]].range_m;
            ev[i] = est[perm[i]].velocity_mps;
        }
        const double r = normalized_rmse(er, tr);
        const double v = normalized_rmse(ev, tv);
        if (r + v < best) {
            best = r + v;
            t.rmse_range = r;
            t.rmse_velocity = v;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
}

std::vector<TrialMetrics> run_rpe_trial(const ExperimentPlan& plan, int snr_index, int trial_index)
{
    std::mt19937_64 rng = trial_rng(plan.seed, snr_index, trial_index);
    const SystemConfig& sys = plan.system;
    const double N0 = noise_power(plan.snr_db[snr_index], plan.E_s, plan.sigma_h2);
    const DelayDopplerGrid grid = plan.make_grid();
    const std::vector<TrueTarget> truth = draw_targets(plan, grid, rng);

    ChannelRealization real;
    real.config = sys;
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    const double amp = std::sqrt(plan.sigma_h2);
    for (const TrueTarget& t : truth) real.paths.push_back({std::polar(amp, phase(rng)), t.delay_tap, t.doppler});

    const int payload = plan.make_layout(plan.pilot_power_boost).payload_count();
    const std::vector<std::uint8_t> bits = random_bits(rng, 2 * static_cast<std::size_t>(payload));
    const CVector w = unit_noise(rng, sys.N);
    const CVector symbols = qpsk_map(bits, Constellation{plan.E_s});
    const double solver_n0 = N0 > 0.0 ? N0 : plan.noiseless_solver_n0;
    const int P = static_cast<int>(truth.size());

    std::vector<TrialMetrics> out;
    for (WaveformKind wk : plan.waveforms) {
        const WaveformSpec spec = plan.make_waveform(wk);
        const FrameLayout layout = plan.make_layout(plan.pilot_power_boost, wk);
        const CVector x = build_frame(layout, symbols);
        const CMatrix H = build_td_channel(real, spec.prefix_rule());
        const CVector y = receive(spec, H, x, w, N0);
        const DelayDopplerDictionary dict = build_dictionary(spec, x, grid);
        CMatrix E = dict.E;
        CVector yo = y;
        if (layout.kind == LayoutKind::single_pilot_guard) {
            PilotBlock pb = restrict_to_pilot_block(dict.E, y, layout);
            E = std::move(pb.E);
            yo = std::move(pb.y);
        }
        for (Method m : plan.methods) {
            TrialMetrics t;
            try {
                SparseChannelEstimate est;
                if (m == Method::pda_em) {
                    est = pda_em(yo, E, solver_n0, P, plan.pda, P);
                } else if (m == Method::sbl_em) {
                    const CMatrix Rw = CMatrix::Identity(E.rows(), E.rows()) * solver_n0;
                    est = sbl_em(yo, E, Rw, plan.sbl, P);
                } else {
                    throw ConfigError("method not valid for rpe");
                }
                score_targets(extract_targets(est, grid, sys, P), truth, t);
                t.iterations = iterations_to_plateau(est.support_trace);
            } catch (const NumericalError&) {
                t = TrialMetrics{};
                t.failed = true;
            }
            out.push_back(t);
        }
    }
    return out;
}

}  // namespace

std::vector<TrialMetrics> run_trial(const ExperimentPlan& plan, int snr_index, int trial_index)
{
    if (snr_index < 0 || snr_index >= static_cast<int>(plan.snr_db.size())) throw ConfigError("SNR index out of range");
    return plan.scenario == Scenario::jcde ? run_jcde_trial(plan, snr_index, trial_index)
                                           : run_rpe_trial(plan, snr_index, trial_index);
}

int default_thread_count()
{
    if (const char* env = std::getenv("DDISAC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

SweepResults run_trial_range(const ExperimentPlan& plan, int first, int count, int threads)
{
    plan.validate();
    if (first < 0 || count < 0) throw ConfigError("trial range must be nonnegative");
    const int nthreads = std::max(1, std::min(threads > 0 ? threads : default_thread_count(), std::max(count, 1)));

    SweepResults res;
    res.series = series_for(plan);
    res.snr_db = plan.snr_db;
    const int S = static_cast<int>(plan.snr_db.size());
    res.cells.assign(S, std::vector<std::map<int, TrialMetrics>>(res.series.size()));
    res.wall_seconds.assign(S, 0.0);

    for (int s = 0; s < S; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::vector<TrialMetrics>> slot(count);
        std::atomic<int> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    slot[i] = run_trial(plan, s, first + i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                    return;
                }
            }
        };
        if (nthreads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (error) std::rethrow_exception(error);
        for (int i = 0; i < count; ++i)
            for (std::size_t k = 0; k < res.series.size(); ++k) res.cells[s][k][first + i] = slot[i][k];
        res.wall_seconds[s] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return res;
}

SweepResults merge(const SweepResults& a, const SweepResults& b)
{
    if (a.series.size() != b.series.size() || a.snr_db != b.snr_db)
        throw ConfigError("cannot merge sweeps of different plans");
    for (std::size_t k = 0; k < a.series.size(); ++k)
        if (a.series[k].waveform != b.series[k].waveform || a.series[k].method != b.series[k].method)
            throw ConfigError("cannot merge sweeps of different plans");
    SweepResults out = a;
    out.wall_seconds.resize(a.snr_db.size(), 0.0);
    for (std::size_t s = 0; s < b.wall_seconds.size() && s < out.wall_seconds.size(); ++s)
        out.wall_seconds[s] += b.wall_seconds[s];
    for (std::size_t s = 0; s < b.cells.size(); ++s)
        for (std::size_t k = 0; k < b.cells[s].size(); ++k)
            for (const auto& [trial, m] : b.cells[s][k])
                if (!out.cells[s][k].emplace(trial, m).second)
                    throw ConfigError("trial " + std::to_string(trial) + " present in both sweeps");
    return out;
}

std::vector<MetricsRecord> summarize(const ExperimentPlan& plan, const SweepResults& results)
{
    std::vector<MetricsRecord> out;
    for (std::size_t s = 0; s < results.cells.size(); ++s)
        for (std::size_t k = 0; k < results.series.size(); ++k) {
            const auto& cell = results.cells[s][k];
            MetricsRecord r;
            r.scenario = plan.scenario;
            r.waveform = to_string(results.series[k].waveform);
            r.method = to_string(results.series[k].method);
            r.snr_db = results.snr_db[s];
            r.trials = static_cast<int>(cell.size());
            r.seed = plan.seed;
            if (s < results.wall_seconds.size()) r.wall_time_seconds = results.wall_seconds[s];
            double errors = 0, bits = 0, nm = 0, rr = 0, rv = 0, it = 0;
            int ok = 0;
            for (const auto& [trial, t] : cell) {
                if (t.failed) {
                    ++r.failures;
                    continue;
                }
                ++ok;
                errors += t.bit_errors;
                bits += t.bits;
                nm += t.nmse;
                rr += t.rmse_range;
                rv += t.rmse_velocity;
                it += t.iterations;
            }
            if (ok > 0) {
                if (plan.scenario == Scenario::jcde) {
                    if (bits > 0) r.ber = errors / bits;
                    r.nmse = nm / ok;
                } else {
                    r.rmse_range = rr / ok;
                    r.rmse_velocity = rv / ok;
                }
                r.mean_iterations = it / ok;
            }
            out.push_back(r);
        }
    return out;
}

std::vector<MetricsRecord> run_sweep(const ExperimentPlan& plan, int threads)
{
    return summarize(plan, run_trial_range(plan, 0, plan.trials, threads));
}

std::vector<MetricsRecord> run_jcde_sweep(const ExperimentPlan& plan, int threads)
{
    if (plan.scenario != Scenario::jcde) throw ConfigError("plan is not a jcde scenario");
    return run_sweep(plan, threads);
}

std::vector<MetricsRecord> run_rpe_sweep(const ExperimentPlan& plan, int threads)
{
    if (plan.scenario != Scenario::rpe) throw ConfigError("plan is not an rpe scenario");
    return run_sweep(plan, threads);
}

}  // namespace ddisac
