#pragma once

#include <string>
#include <vector>

#include "ddisac/simkit.hpp"

namespace ddisac::cli {

inline const char* kCsvHeader =
    "scenario,waveform,method,snr_db,trials,ber,nmse,rmse_range,rmse_velocity,mean_iterations,failures,seed";

// preamble lines are written as '#' comments ahead of the header.
std::string format_csv(const std::vector<MetricsRecord>& records, const std::vector<std::string>& preamble = {});
std::vector<MetricsRecord> parse_csv(const std::string& text);

void emit_csv(const std::vector<MetricsRecord>& records, const std::string& path,
              const std::vector<std::string>& preamble = {});

// Metrics with at least one value: ber, nmse, rmse_range, rmse_velocity, mean_iterations.
std::vector<std::string> present_metrics(const std::vector<MetricsRecord>& records);

// SNR on x, metric on a log10 y axis, one polyline per waveform/method series.
std::string format_svg(const std::vector<MetricsRecord>& records, const std::string& metric,
                       const std::string& comment = {});
void emit_plot(const std::vector<MetricsRecord>& records, const std::string& metric, const std::string& path,
               const std::string& comment = {});

}  // namespace ddisac::cli
