#include "oqs/record.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oqs {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void RunRecord::set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : metadata)
        if (k == key) { v = value; return; }
    metadata.emplace_back(key, value);
}

const std::string* RunRecord::find_meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return &v;
    return nullptr;
}

void RunRecord::validate() const {
    if (mean.size() != observables.size() || stderr_.size() != observables.size())
        throw std::invalid_argument("RunRecord: column count mismatch");
    for (std::size_t o = 0; o < observables.size(); ++o)
        if (mean[o].size() != times.size() || stderr_[o].size() != times.size())
            throw std::invalid_argument("RunRecord: series length mismatch");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw std::invalid_argument("RunRecord: time column not strictly increasing");
}

void write_record(const RunRecord& rec, const std::string& path) {
    rec.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_record: cannot open " + path);
    for (const auto& [k, v] : rec.metadata) os << "# " << k << '=' << v << '\n';
    os << 't';
    for (const std::string& name : rec.observables)
        os << ',' << name << "_mean," << name << "_stderr";
    os << '\n';
    for (std::size_t row = 0; row < rec.times.size(); ++row) {
        os << format_double(rec.times[row]);
        for (std::size_t o = 0; o < rec.observables.size(); ++o)
            os << ',' << format_double(rec.mean[o][row]) << ','
               << format_double(rec.stderr_[o][row]);
        os << '\n';
    }
    if (!os) throw std::runtime_error("write_record: write failed for " + path);
}

RunRecord read_record(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_record: cannot open " + path);
    RunRecord rec;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            const auto eq = body.find('=');
            if (eq != std::string::npos)
                rec.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            if (cells.empty() || cells[0] != "t")
                throw std::runtime_error("read_record: missing 't' header column in " + path);
            if (cells.size() % 2 != 1)
                throw std::runtime_error("read_record: header must pair mean/stderr columns");
            for (std::size_t i = 1; i < cells.size(); i += 2) {
                const std::string& m = cells[i];
                const std::string& s = cells[i + 1];
                if (m.size() < 5 || m.substr(m.size() - 5) != "_mean")
                    throw std::runtime_error("read_record: expected '<obs>_mean', got '" + m + "'");
                const std::string base = m.substr(0, m.size() - 5);
                if (s != base + "_stderr")
                    throw std::runtime_error("read_record: expected '" + base +
                                             "_stderr', got '" + s + "'");
                rec.observables.push_back(base);
            }
            rec.mean.assign(rec.observables.size(), {});
            rec.stderr_.assign(rec.observables.size(), {});
            have_header = true;
            continue;
        }
        if (cells.size() != 1 + 2 * rec.observables.size())
            throw std::runtime_error("read_record: row width mismatch in " + path);
        rec.times.push_back(std::stod(cells[0]));
        for (std::size_t o = 0; o < rec.observables.size(); ++o) {
            rec.mean[o].push_back(std::stod(cells[1 + 2 * o]));
            rec.stderr_[o].push_back(std::stod(cells[2 + 2 * o]));
        }
    }
    if (!have_header) throw std::runtime_error("read_record: no header found in " + path);
    rec.validate();
    return rec;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto notspace = line.find_first_not_of(" \t\r");
        if (notspace == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) +
                                     " is not 'key = value'");
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
        out[key] = value;
    }
    return out;
}

} // namespace oqs
