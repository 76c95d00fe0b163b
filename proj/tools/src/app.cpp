#include "ddisac_cli/app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "ddisac/errors.hpp"
#include "ddisac_cli/config.hpp"
#include "ddisac_cli/report.hpp"

namespace ddisac::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void error_line(std::ostream& err, const std::string& kind, const std::string& message)
{
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

struct Options {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::vector<double> snr;
    bool no_plot = false;
    bool no_matrices = false;
};

void add_common(CLI::App* sub, Options& o)
{
    sub->add_option("--config", o.config, "experiment config (JSON)")->required();
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--seed", o.seed, "override the base seed");
    sub->add_option("--trials", o.trials, "override trials per SNR point");
    sub->add_option("--snr", o.snr, "override the SNR grid in dB");
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

fs::path prepare_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
    return fs::path(dir);
}

int run_sweep_command(Scenario want, const Options& o, std::ostream& out)
{
    ExperimentPlan plan = load_plan(o.config);
    if (plan.scenario != want)
        throw ConfigError("config scenario is " + to_string(plan.scenario) + ", subcommand is " + to_string(want));
    if (o.seed) plan.seed = *o.seed;
    if (o.trials) plan.trials = *o.trials;
    if (!o.snr.empty()) plan.snr_db = o.snr;
    plan.validate();

    const fs::path dir = prepare_dir(o.out_dir);
    const std::string stem = fs::path(o.config).stem().string();
    const std::string resolved = plan_to_json(plan).dump();

    const std::vector<MetricsRecord> records = run_sweep(plan);

    const fs::path csv = dir / (stem + ".csv");
    emit_csv(records, csv.string(), {"config: " + resolved, "seed: " + std::to_string(plan.seed)});
    out << csv.string() << '\n';
    if (!o.no_plot) {
        const std::string comment = "config: " + resolved + "\nseed: " + std::to_string(plan.seed);
        for (const std::string& m : present_metrics(records)) {
            const fs::path svg = dir / (stem + "_" + m + ".svg");
            emit_plot(records, m, svg.string(), comment);
            out << svg.string() << '\n';
        }
    }
    return 0;
}

int run_dump_command(bool channel, const Options& o, std::ostream& out)
{
    ExperimentPlan plan = load_plan(o.config);
    if (o.seed) plan.seed = *o.seed;
    const fs::path dir = prepare_dir(o.out_dir);
    json j = channel ? channel_dump(plan, !o.no_matrices) : dictionary_dump(plan, !o.no_matrices);
    j["config"] = plan_to_json(plan);
    const fs::path path =
        dir / (fs::path(o.config).stem().string() + (channel ? "_channel.json" : "_dictionary.json"));
    write_text(path, j.dump(1) + "\n");
    out << path.string() << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"delay-Doppler ISAC link simulator", "ddisac"};
    app.require_subcommand(1);
    Options o;
    CLI::App* jcde = app.add_subcommand("jcde", "joint channel and data estimation sweep");
    CLI::App* rpe = app.add_subcommand("rpe", "radar parameter estimation sweep");
    CLI::App* chan = app.add_subcommand("channel-dump", "dump one channel draw");
    CLI::App* dict = app.add_subcommand("dict-dump", "dump the delay-Doppler dictionary");
    for (CLI::App* s : {jcde, rpe, chan, dict}) add_common(s, o);
    for (CLI::App* s : {jcde, rpe}) s->add_flag("--no-plot", o.no_plot, "skip SVG plots");
    for (CLI::App* s : {chan, dict}) s->add_flag("--no-matrices", o.no_matrices, "norms and shapes only");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        error_line(err, "usage", e.what());
        return 2;
    }

    try {
        if (jcde->parsed()) return run_sweep_command(Scenario::jcde, o, out);
        if (rpe->parsed()) return run_sweep_command(Scenario::rpe, o, out);
        if (chan->parsed()) return run_dump_command(true, o, out);
        return run_dump_command(false, o, out);
    } catch (const ConfigError& e) {
        error_line(err, "config", e.what());
        return 2;
    } catch (const ShapeError& e) {
        error_line(err, "config", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        error_line(err, "config", e.what());
        return 2;
    } catch (const NumericalError& e) {
        error_line(err, "numerical", e.what());
        return 1;
    } catch (const std::exception& e) {
        error_line(err, "runtime", e.what());
        return 1;
    }
}

}  // namespace ddisac::cli
