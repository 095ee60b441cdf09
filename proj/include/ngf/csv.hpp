#pragma once

// Locale-independent CSV helpers. Doubles are written in shortest
// round-trip form so that files re-read bit-identically.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ngf/error.hpp"

namespace ngf::csv {

inline std::string format(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format(long long v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::size_t v) { return std::to_string(v); }

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DomainError("csv: not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline long long parse_int(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DomainError("csv: not an integer: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    template <typename... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        ((emit(cells, first)), ...);
        os_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

private:
    template <typename T>
    void emit(const T& v, bool& first) {
        if (!first) os_ << ',';
        first = false;
        if constexpr (std::is_convertible_v<T, std::string_view>) {
            os_ << std::string_view(v);
        } else {
            os_ << format(v);
        }
    }

    std::ostream& os_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw DomainError("csv: missing column '" + std::string(name) + "'");
    }
};

inline Table read(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw DomainError("csv: empty input");
    t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw DomainError("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("csv: cannot open '" + path + "'");
    return read(in);
}

}  // namespace ngf::csv
