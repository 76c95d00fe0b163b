#include "ddisac_cli/report.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ddisac/errors.hpp"

namespace ddisac::cli {

namespace {

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17e", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s)
{
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("bad number '" + s + "' in CSV");
    return v;
}

std::optional<double> to_opt(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    return to_double(s);
}

std::optional<double> metric_of(const MetricsRecord& r, const std::string& metric)
{
    if (metric == "ber") return r.ber;
    if (metric == "nmse") return r.nmse;
    if (metric == "rmse_range") return r.rmse_range;
    if (metric == "rmse_velocity") return r.rmse_velocity;
    if (metric == "mean_iterations") return r.mean_iterations;
    throw ConfigError("unknown metric '" + metric + "'");
}

std::string xml_comment(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '-' && !out.empty() && out.back() == '-') out += ' ';
        out += c;
    }
    if (!out.empty() && out.back() == '-') out += ' ';
    return out;
}

std::string xml_text(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace

std::string format_csv(const std::vector<MetricsRecord>& records, const std::vector<std::string>& preamble)
{
    std::ostringstream os;
    for (const std::string& p : preamble)
        for (const std::string& line : split(p, '\n')) os << "# " << line << '\n';
    os << kCsvHeader << '\n';
    for (const MetricsRecord& r : records) {
        os << to_string(r.scenario) << ',' << r.waveform << ',' << r.method << ',' << num(r.snr_db) << ','
           << r.trials << ',' << opt(r.ber) << ',' << opt(r.nmse) << ',' << opt(r.rmse_range) << ','
           << opt(r.rmse_velocity) << ',' << opt(r.mean_iterations) << ',' << r.failures << ',' << r.seed << '\n';
    }
    return os.str();
}

std::vector<MetricsRecord> parse_csv(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    bool header = false;
    std::vector<MetricsRecord> out;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != kCsvHeader) throw ConfigError("unexpected CSV header");
            header = true;
            continue;
        }
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 12) throw ConfigError("CSV row has " + std::to_string(f.size()) + " fields");
        MetricsRecord r;
        r.scenario = scenario_from_string(f[0]);
        r.waveform = f[1];
        r.method = f[2];
        r.snr_db = to_double(f[3]);
        r.trials = std::stoi(f[4]);
        r.ber = to_opt(f[5]);
        r.nmse = to_opt(f[6]);
        r.rmse_range = to_opt(f[7]);
        r.rmse_velocity = to_opt(f[8]);
        r.mean_iterations = to_opt(f[9]);
        r.failures = std::stoi(f[10]);
        r.seed = std::stoull(f[11]);
        out.push_back(std::move(r));
    }
    if (!header) throw ConfigError("CSV header missing");
    return out;
}

void emit_csv(const std::vector<MetricsRecord>& records, const std::string& path,
              const std::vector<std::string>& preamble)
{
    if (records.empty()) throw ConfigError("no records to write");
    write_file(path, format_csv(records, preamble));
}

std::vector<std::string> present_metrics(const std::vector<MetricsRecord>& records)
{
    std::vector<std::string> out;
    for (const char* m : {"ber", "nmse", "rmse_range", "rmse_velocity", "mean_iterations"})
        for (const MetricsRecord& r : records)
            if (metric_of(r, m)) {
                out.push_back(m);
                break;
            }
    return out;
}

std::string format_svg(const std::vector<MetricsRecord>& records, const std::string& metric,
                       const std::string& comment)
{
    const double W = 640, H = 420, L = 70, R = 170, T = 30, B = 50;
    const double pw = W - L - R, ph = H - T - B;

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const MetricsRecord& r : records) {
        const std::optional<double> v = metric_of(r, metric);
        const std::string key = r.waveform + " / " + r.method;
        if (!series.count(key)) order.push_back(key);
        auto& pts = series[key];
        if (!v || !(*v > 0.0) || !std::isfinite(r.snr_db)) continue;
        pts.emplace_back(r.snr_db, std::log10(*v));
        xmin = std::min(xmin, r.snr_db);
        xmax = std::max(xmax, r.snr_db);
        ymin = std::min(ymin, std::log10(*v));
        ymax = std::max(ymax, std::log10(*v));
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = -1;
        ymax = 0;
    }
    if (xmax == xmin) {
        xmin -= 1;
        xmax += 1;
    }
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax == ymin) ymax = ymin + 1;

    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return T + (ymax - y) / (ymax - ymin) * ph; };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!comment.empty()) os << "<!--\n" << xml_comment(comment) << "\n-->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int d = static_cast<int>(ymin); d <= static_cast<int>(ymax); ++d) {
        const double y = sy(d);
        os << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << y << "\" y2=\"" << y
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    std::vector<double> xs;
    for (const MetricsRecord& r : records)
        if (std::isfinite(r.snr_db) && std::find(xs.begin(), xs.end(), r.snr_db) == xs.end()) xs.push_back(r.snr_db);
    for (double x : xs)
        os << "<text x=\"" << sx(x) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">" << x << "</text>\n";
    os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">SNR [dB]</text>\n";
    os << "<text x=\"16\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << T + ph / 2
       << ")\">" << xml_text(metric) << " (log)</text>\n";

    for (std::size_t s = 0; s < order.size(); ++s) {
        const char* c = colors[s % (sizeof colors / sizeof *colors)];
        const auto& pts = series[order[s]];
        if (!pts.empty()) {
            os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : pts) os << sx(x) << ',' << sy(y) << ' ';
            os << "\"/>\n";
            for (const auto& [x, y] : pts)
                os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
        }
        const double ly = T + 12 + 16 * static_cast<double>(s);
        os << "<line x1=\"" << L + pw + 10 << "\" x2=\"" << L + pw + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
           << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << L + pw + 36 << "\" y=\"" << ly + 4 << "\">" << xml_text(order[s]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_plot(const std::vector<MetricsRecord>& records, const std::string& metric, const std::string& path,
               const std::string& comment)
{
    if (records.empty()) throw ConfigError("no records to plot");
    write_file(path, format_svg(records, metric, comment));
}

}  // namespace ddisac::cli
