#pragma once

#include <map>
#include <string>
#include <vector>

namespace oqs {

/// One persisted run: configuration metadata plus a time series of
/// per-observable means and standard errors. The on-disk form is CSV with
/// `#`-prefixed `key=value` metadata lines, a header
/// `t,<obs>_mean,<obs>_stderr,...` and rows printed at 17 significant
/// digits (round-trip bit-stable). The time column carries gamma*t
/// (metadata `time_scale=gamma_t`), or raw t when gamma = 0.
struct RunRecord {
    std::vector<std::pair<std::string, std::string>> metadata; // insertion order
    std::vector<std::string> observables; // column base names
    std::vector<double> times;            // strictly increasing
    std::vector<std::vector<double>> mean;   // [obs][row]
    std::vector<std::vector<double>> stderr_; // [obs][row]

    void set_meta(const std::string& key, const std::string& value);
    const std::string* find_meta(const std::string& key) const;
    void validate() const;
};

void write_record(const RunRecord& rec, const std::string& path);
RunRecord read_record(const std::string& path);

/// Plain `key = value` configuration file (# starts a comment); keys mirror
/// the CLI flags. Values keep their literal text.
std::map<std::string, std::string> parse_config_file(const std::string& path);

std::string format_double(double v); // %.17g

} // namespace oqs
