#include <random>

#include "ddisac/errors.hpp"
#include "ddisac/rpe.hpp"
#include "ddisac_cli/app.hpp"

namespace ddisac::cli {

using nlohmann::json;

namespace {

json matrix_json(const CMatrix& A)
{
    json re = json::array(), im = json::array();
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        json rr = json::array(), ri = json::array();
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
            rr.push_back(A(r, c).real());
            ri.push_back(A(r, c).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    return {{"rows", A.rows()}, {"cols", A.cols()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

}  // namespace

json channel_dump(const ExperimentPlan& plan, bool with_matrices)
{
    plan.validate();
    std::mt19937_64 rng = trial_rng(plan.seed, 0, 0);
    const ChannelRealization real = sample_paths(plan.system, plan.nlos_paths, plan.sigma_h2, rng,
                                                 plan.distinct_delays ? TapDraw::distinct : TapDraw::independent);
    json j;
    j["seed"] = plan.seed;
    j["N"] = plan.system.N;
    double gain_energy = 0.0;
    bool distinct = true;
    json paths = json::array();
    for (std::size_t p = 0; p < real.paths.size(); ++p) {
        const ChannelPath& path = real.paths[p];
        paths.push_back({{"gain_re", path.gain.real()},
                         {"gain_im", path.gain.imag()},
                         {"delay_tap", path.delay_tap},
                         {"doppler", path.doppler}});
        gain_energy += std::norm(path.gain);
        for (std::size_t q = 0; q < p; ++q)
            if (real.paths[q].delay_tap == path.delay_tap) distinct = false;
    }
    j["paths"] = std::move(paths);
    j["distinct_taps"] = distinct;
    j["expected_frobenius_sq"] = plan.system.N * gain_energy;

    json per = json::array();
    for (WaveformKind wk : plan.waveforms) {
        const WaveformSpec spec = plan.make_waveform(wk);
        const CMatrix H = build_td_channel(real, spec.prefix_rule());
        const CMatrix G = build_effective_channel(spec, real);
        json w{{"waveform", to_string(wk)},
               {"td_frobenius_sq", H.squaredNorm()},
               {"effective_frobenius_sq", G.squaredNorm()}};
        if (with_matrices) {
            w["td_channel"] = matrix_json(H);
            w["effective_channel"] = matrix_json(G);
        }
        per.push_back(std::move(w));
    }
    j["waveforms"] = std::move(per);
    return j;
}

json dictionary_dump(const ExperimentPlan& plan, bool with_matrices)
{
    plan.validate();
    std::mt19937_64 rng = trial_rng(plan.seed, 0, 0);
    const DelayDopplerGrid grid = plan.make_grid();
    const int payload = plan.make_layout(plan.pilot_power_boost).payload_count();
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<std::uint8_t> bits(2 * static_cast<std::size_t>(payload));
    for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
    const CVector symbols = qpsk_map(bits, Constellation{plan.E_s});

    json j;
    j["seed"] = plan.seed;
    j["delay_taps"] = grid.delay_taps;
    j["doppler_points"] = grid.doppler_points;
    json per = json::array();
    for (WaveformKind wk : plan.waveforms) {
        const WaveformSpec spec = plan.make_waveform(wk);
        const FrameLayout layout = plan.make_layout(plan.pilot_power_boost, wk);
        const CVector x = build_frame(layout, symbols);
        const DelayDopplerDictionary dict = build_dictionary(spec, x, grid);
        CMatrix E = dict.E;
        std::vector<int> rows;
        if (layout.kind == LayoutKind::single_pilot_guard) {
            PilotBlock pb = restrict_to_pilot_block(dict.E, CVector::Zero(x.size()), layout);
            E = std::move(pb.E);
            rows = pb.rows;
        } else {
            for (int n = 0; n < x.size(); ++n) rows.push_back(n);
        }
        const Eigen::VectorXd norms = E.colwise().norm().transpose();
        json w{{"waveform", to_string(wk)},
               {"frame_norm", x.norm()},
               {"rows", rows},
               {"column_norm_min", norms.minCoeff()},
               {"column_norm_max", norms.maxCoeff()},
               {"frobenius", E.norm()}};
        if (with_matrices) w["E"] = matrix_json(E);
        per.push_back(std::move(w));
    }
    j["waveforms"] = std::move(per);
    return j;
}

}  // namespace ddisac::cli
