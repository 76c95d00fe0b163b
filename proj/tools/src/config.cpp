#include "ddisac_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "ddisac/errors.hpp"

namespace ddisac::cli {

using nlohmann::json;

namespace {

std::string layout_name(LayoutKind k)
{
    switch (k) {
    case LayoutKind::block_pilots: return "block_pilots";
    case LayoutKind::comb_pilots: return "comb_pilots";
    case LayoutKind::single_pilot_guard: return "single_pilot_guard";
    case LayoutKind::all_pilots: return "all_pilots";
    }
    return "?";
}

LayoutKind layout_from_name(const std::string& s)
{
    for (LayoutKind k : {LayoutKind::block_pilots, LayoutKind::comb_pilots, LayoutKind::single_pilot_guard,
                         LayoutKind::all_pilots})
        if (layout_name(k) == s) return k;
    throw ConfigError("unknown layout '" + s + "'");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& dst, const std::string& where)
{
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        dst = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& dst, const std::string& where)
{
    auto it = j.find(key);
    if (it == j.end()) return;
    if (it->is_null()) {
        dst.reset();
        return;
    }
    T v{};
    read(j, key, v, where);
    dst = v;
}

double snr_value(const json& v)
{
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    }
    throw ConfigError("SNR points must be numbers or \"inf\"");
}

json snr_json(double s)
{
    if (std::isinf(s)) return s > 0 ? json("inf") : json("-inf");
    return s;
}

}  // namespace

ExperimentPlan plan_from_json(const json& j)
{
    check_keys(j,
               {"scenario", "system", "waveforms", "methods", "otfs_k", "otfs_m", "afdm_c1", "afdm_c2", "layout",
                "ofdm_comb_pilots", "pilot_block", "pilot_power_boost", "pilot_only_boost", "nlos_paths",
                "distinct_delays", "sigma_h2", "E_s", "jcde", "targets", "fixed_target", "target_range_m",
                "target_velocity_kmh", "doppler_points", "sbl", "pda", "noiseless_solver_n0", "snr_db", "trials",
                "seed"},
               "config");
    ExperimentPlan p;
    const std::string top = "config";

    if (j.contains("scenario")) p.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    if (j.contains("system")) {
        const json& s = j.at("system");
        check_keys(s, {"N", "carrier_hz", "bandwidth_hz", "ell_max", "f_max", "cp_len"}, "system");
        read(s, "N", p.system.N, "system");
        read(s, "carrier_hz", p.system.carrier_hz, "system");
        read(s, "bandwidth_hz", p.system.bandwidth_hz, "system");
        read(s, "ell_max", p.system.ell_max, "system");
        read(s, "f_max", p.system.f_max, "system");
        read(s, "cp_len", p.system.cp_len, "system");
    }
    if (j.contains("waveforms")) {
        p.waveforms.clear();
        for (const json& w : j.at("waveforms")) p.waveforms.push_back(waveform_kind_from_string(w.get<std::string>()));
    }
    if (j.contains("methods")) {
        p.methods.clear();
        for (const json& m : j.at("methods")) p.methods.push_back(method_from_string(m.get<std::string>()));
    }
    read(j, "otfs_k", p.otfs_k, top);
    read(j, "otfs_m", p.otfs_m, top);
    read_opt(j, "afdm_c1", p.afdm_c1, top);
    read_opt(j, "afdm_c2", p.afdm_c2, top);
    if (j.contains("layout")) p.layout = layout_from_name(j.at("layout").get<std::string>());
    read(j, "ofdm_comb_pilots", p.ofdm_comb_pilots, top);
    read(j, "pilot_block", p.pilot_block, top);
    read(j, "pilot_power_boost", p.pilot_power_boost, top);
    read_opt(j, "pilot_only_boost", p.pilot_only_boost, top);
    read(j, "nlos_paths", p.nlos_paths, top);
    read(j, "distinct_delays", p.distinct_delays, top);
    read(j, "sigma_h2", p.sigma_h2, top);
    read(j, "E_s", p.E_s, top);
    if (j.contains("jcde")) {
        const json& c = j.at("jcde");
        check_keys(c, {"beta_x", "beta_h", "i_max"}, "jcde");
        read(c, "beta_x", p.jcde.beta_x, "jcde");
        read(c, "beta_h", p.jcde.beta_h, "jcde");
        read(c, "i_max", p.jcde.i_max, "jcde");
    }
    read(j, "targets", p.targets, top);
    read(j, "fixed_target", p.fixed_target, top);
    read(j, "target_range_m", p.target_range_m, top);
    read(j, "target_velocity_kmh", p.target_velocity_kmh, top);
    read(j, "doppler_points", p.doppler_points, top);
    if (j.contains("sbl")) {
        const json& c = j.at("sbl");
        check_keys(c, {"epsilon", "i_max"}, "sbl");
        read(c, "epsilon", p.sbl.epsilon, "sbl");
        read(c, "i_max", p.sbl.i_max, "sbl");
    }
    if (j.contains("pda")) {
        const json& c = j.at("pda");
        check_keys(c, {"beta", "i_max", "update_mean"}, "pda");
        read(c, "beta", p.pda.beta, "pda");
        read(c, "i_max", p.pda.i_max, "pda");
        read(c, "update_mean", p.pda.update_mean, "pda");
    }
    read(j, "noiseless_solver_n0", p.noiseless_solver_n0, top);
    if (j.contains("snr_db")) {
        const json& s = j.at("snr_db");
        if (!s.is_array()) throw ConfigError("snr_db must be a list");
        p.snr_db.clear();
        for (const json& v : s) p.snr_db.push_back(snr_value(v));
    }
    read(j, "trials", p.trials, top);
    read(j, "seed", p.seed, top);

    p.validate();
    return p;
}

json plan_to_json(const ExperimentPlan& p)
{
    json j;
    j["scenario"] = to_string(p.scenario);
    j["system"] = {{"N", p.system.N},
                   {"carrier_hz", p.system.carrier_hz},
                   {"bandwidth_hz", p.system.bandwidth_hz},
                   {"ell_max", p.system.ell_max},
                   {"f_max", p.system.f_max},
                   {"cp_len", p.system.cp_len}};
    j["waveforms"] = json::array();
    for (WaveformKind w : p.waveforms) j["waveforms"].push_back(to_string(w));
    j["methods"] = json::array();
    for (Method m : p.methods) j["methods"].push_back(to_string(m));
    j["otfs_k"] = p.otfs_k;
    j["otfs_m"] = p.otfs_m;
    j["afdm_c1"] = p.afdm_c1 ? json(*p.afdm_c1) : json(nullptr);
    j["afdm_c2"] = p.afdm_c2 ? json(*p.afdm_c2) : json(nullptr);
    j["layout"] = layout_name(p.layout);
    j["ofdm_comb_pilots"] = p.ofdm_comb_pilots;
    j["pilot_block"] = p.pilot_block;
    j["pilot_power_boost"] = p.pilot_power_boost;
    j["pilot_only_boost"] = p.pilot_only_boost ? json(*p.pilot_only_boost) : json(nullptr);
    j["nlos_paths"] = p.nlos_paths;
    j["distinct_delays"] = p.distinct_delays;
    j["sigma_h2"] = p.sigma_h2;
    j["E_s"] = p.E_s;
    j["jcde"] = {{"beta_x", p.jcde.beta_x}, {"beta_h", p.jcde.beta_h}, {"i_max", p.jcde.i_max}};
    j["targets"] = p.targets;
    j["fixed_target"] = p.fixed_target;
    j["target_range_m"] = p.target_range_m;
    j["target_velocity_kmh"] = p.target_velocity_kmh;
    j["doppler_points"] = p.doppler_points;
    j["sbl"] = {{"epsilon", p.sbl.epsilon}, {"i_max", p.sbl.i_max}};
    j["pda"] = {{"beta", p.pda.beta}, {"i_max", p.pda.i_max}, {"update_mean", p.pda.update_mean}};
    j["noiseless_solver_n0"] = p.noiseless_solver_n0;
    j["snr_db"] = json::array();
    for (double s : p.snr_db) j["snr_db"].push_back(snr_json(s));
    j["trials"] = p.trials;
    j["seed"] = p.seed;
    return j;
}

ExperimentPlan load_plan(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return plan_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace ddisac::cli
