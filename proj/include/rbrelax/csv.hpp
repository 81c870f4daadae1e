#pragma once

// Trace serialization. One CSV per trace: `# key=value` metadata lines in
// any order, one header row `time_s,alpha_raw,alpha_norm`, then data rows.
// Floats carry 17 significant digits so read(write(x)) reproduces every
// double bit for bit, and a fixed format keeps repeated runs byte-identical.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rbrelax/trace.hpp"

namespace rbrelax {

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& where, int line) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0'))
        throw std::runtime_error(where + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    return v;
}

} // namespace detail

inline void write_trace_csv(const DecayTrace& tr, std::ostream& os) {
    tr.validate();
    os << "# protocol=" << tr.meta.protocol << "\n";
    os << "# density_cm3=" << detail::format_double(tr.meta.density_cm3) << "\n";
    os << "# bz_gauss=" << detail::format_double(tr.meta.bz_gauss) << "\n";
    os << "# delay_s=" << detail::format_double(tr.meta.delay_s) << "\n";
    os << "time_s,alpha_raw,alpha_norm\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
        os << detail::format_double(tr.time_s[i]) << ',' << detail::format_double(tr.alpha_raw[i])
           << ',' << detail::format_double(tr.alpha_norm[i]) << "\n";
}

inline void write_trace_csv(const DecayTrace& tr, const std::string& path) {
    std::ofstream os(path, std::ios::binary); // binary: no newline translation anywhere
    if (!os) throw std::runtime_error(path + ": cannot open for writing");
    write_trace_csv(tr, os);
    if (!os) throw std::runtime_error(path + ": write failed");
}

inline DecayTrace read_trace_csv(std::istream& is, const std::string& name = "<stream>") {
    DecayTrace tr;
    std::string row;
    int line = 0;
    bool saw_header = false;
    while (std::getline(is, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;
        if (row[0] == '#') {
            std::string body = row.substr(1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue; // plain comment
            std::string key = body.substr(0, eq);
            std::string value = body.substr(eq + 1);
            key.erase(0, key.find_first_not_of(' '));
            key.erase(key.find_last_not_of(' ') + 1);
            if (key == "protocol")
                tr.meta.protocol = value;
            else if (key == "density_cm3")
                tr.meta.density_cm3 = detail::parse_double(value, name, line);
            else if (key == "bz_gauss")
                tr.meta.bz_gauss = detail::parse_double(value, name, line);
            else if (key == "delay_s")
                tr.meta.delay_s = detail::parse_double(value, name, line);
            continue; // unknown metadata keys pass through as comments
        }
        if (!saw_header) {
            if (row != "time_s,alpha_raw,alpha_norm")
                throw std::runtime_error(name + ":" + std::to_string(line) +
                                         ": expected header 'time_s,alpha_raw,alpha_norm', got '" +
                                         row + "'");
            saw_header = true;
            continue;
        }
        const auto c1 = row.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : row.find(',', c1 + 1);
        if (c2 == std::string::npos || row.find(',', c2 + 1) != std::string::npos)
            throw std::runtime_error(name + ":" + std::to_string(line) + ": expected 3 columns");
        tr.time_s.push_back(detail::parse_double(row.substr(0, c1), name, line));
        tr.alpha_raw.push_back(detail::parse_double(row.substr(c1 + 1, c2 - c1 - 1), name, line));
        tr.alpha_norm.push_back(detail::parse_double(row.substr(c2 + 1), name, line));
    }
    if (!saw_header) throw std::runtime_error(name + ": missing header row");
    tr.validate();
    return tr;
}

inline DecayTrace read_trace_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error(path + ": cannot open");
    return read_trace_csv(is, path);
}

} // namespace rbrelax
