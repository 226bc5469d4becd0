#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdi/circuit.hpp"
#include "fdi/errors.hpp"

namespace fdi {

// All numeric CSV fields are written with 9 significant digits and a
// dot decimal separator; parsing what we wrote reproduces the same
// bytes on a rewrite.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_trace_csv(std::ostream& os, const std::vector<Trace>& traces) {
    bool labeled = !traces.empty();
    for (const auto& t : traces) {
        if (!t.label) labeled = false;
    }
    os << (labeled ? "t,v0,v1,v2,s1,label\n" : "t,v0,v1,v2,s1\n");
    for (const auto& tr : traces) {
        for (const auto& s : tr.samples) {
            os << format_g9(s.t) << ',' << format_g9(s.v0) << ',' << format_g9(s.v1) << ','
               << format_g9(s.v2) << ',' << s.s1;
            if (labeled) os << ',' << label_name(*tr.label);
            os << '\n';
        }
    }
}

inline void write_trace_csv(const std::string& path, const std::vector<Trace>& traces,
                            bool append = false) {
    std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
    if (!os) throw Error(Errc::IoError, "cannot open for writing: " + path);
    if (!append || os.tellp() == std::streampos(0)) {
        write_trace_csv(os, traces);
        return;
    }
    // appending: rows only, no header
    std::ostringstream tmp;
    write_trace_csv(tmp, traces);
    const std::string body = tmp.str();
    os << body.substr(body.find('\n') + 1);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::ParseError, "bad numeric field '" + s + "' on line " + std::to_string(line_no));
    }
}

}  // namespace detail

// Read one or more traces from a trace/dataset CSV. Concatenated traces
// are split where the time column restarts (t not increasing).
inline std::vector<Trace> read_traces_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool labeled;
    if (line == "t,v0,v1,v2,s1") {
        labeled = false;
    } else if (line == "t,v0,v1,v2,s1,label") {
        labeled = true;
    } else {
        throw Error(Errc::ParseError, "unrecognized CSV header: " + line);
    }

    std::vector<Trace> traces;
    Trace current;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != (labeled ? 6u : 5u)) {
            throw Error(Errc::ParseError, "wrong field count on line " + std::to_string(line_no));
        }
        Sample s;
        s.t = detail::parse_double(fields[0], line_no);
        s.v0 = detail::parse_double(fields[1], line_no);
        s.v1 = detail::parse_double(fields[2], line_no);
        s.v2 = detail::parse_double(fields[3], line_no);
        if (fields[4] == "0") {
            s.s1 = 0;
        } else if (fields[4] == "1") {
            s.s1 = 1;
        } else {
            throw Error(Errc::ParseError, "s1 must be 0 or 1 on line " + std::to_string(line_no));
        }
        std::optional<Label> label;
        if (labeled) {
            label = label_from_name(fields[5]);
            if (!label) {
                throw Error(Errc::ParseError, "unknown label '" + fields[5] + "' on line " +
                                                  std::to_string(line_no));
            }
        }
        if (!current.samples.empty() && s.t <= current.samples.back().t) {
            current.validate();
            traces.push_back(std::move(current));
            current = Trace{};
        }
        if (!current.samples.empty() && labeled && current.label != label) {
            throw Error(Errc::ParseError, "label changes mid-trace on line " + std::to_string(line_no));
        }
        current.label = label;
        current.samples.push_back(s);
    }
    if (current.samples.empty()) throw Error(Errc::ParseError, "CSV contains no samples");
    current.validate();
    traces.push_back(std::move(current));
    return traces;
}

inline std::vector<Trace> read_traces_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::IoError, "cannot open for reading: " + path);
    return read_traces_csv(is);
}

}  // namespace fdi
