#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lbrc/dataset.hpp"
#include "lbrc/error.hpp"
#include "lbrc/step_function.hpp"

namespace lbrc {

// 17 significant digits: parsing the text gives back the same double.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

// Parses CSV text with a header naming {a, v, delta} or {a, y, delta} in
// any order. Blank lines are skipped; data rows are numbered from 1.
inline Dataset parse_dataset_text(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        const auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        lines.push_back(line);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    std::size_t li = 0;
    while (li < lines.size() && detail::trim(lines[li]).empty()) ++li;
    if (li == lines.size()) throw InputError("no observations");

    auto header = detail::split_commas(lines[li++]);
    if (!header.empty() && header[0].substr(0, 3) == "\xEF\xBB\xBF") header[0].remove_prefix(3);
    int col_a = -1;
    int col_v = -1;
    int col_y = -1;
    int col_d = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto h = header[c];
        int* slot = h == "a" ? &col_a : h == "v" ? &col_v : h == "y" ? &col_y : h == "delta" ? &col_d : nullptr;
        if (slot == nullptr) throw InputError("header: unknown column '" + std::string(h) + "'");
        if (*slot >= 0) throw InputError("header: duplicate column '" + std::string(h) + "'");
        *slot = static_cast<int>(c);
    }
    if (col_a < 0) throw InputError("header: missing column 'a'");
    if (col_d < 0) throw InputError("header: missing column 'delta'");
    if (col_v < 0 && col_y < 0) throw InputError("header: missing column 'v' (or 'y')");
    if (col_v >= 0 && col_y >= 0) throw InputError("header: give either 'v' or 'y', not both");
    const bool use_y = col_y >= 0;

    std::vector<LbrcObservation> obs;
    std::size_t row = 0;
    for (; li < lines.size(); ++li) {
        if (detail::trim(lines[li]).empty()) continue;
        ++row;
        const auto fields = detail::split_commas(lines[li]);
        const auto where = [&](const char* col) { return "row " + std::to_string(row) + ", column " + col + ": "; };
        if (fields.size() != header.size())
            throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        const auto number = [&](int col, const char* name) {
            const auto v = detail::parse_number(fields[static_cast<std::size_t>(col)]);
            if (!v || !std::isfinite(*v))
                throw InputError(where(name) + "cannot parse '" + std::string(fields[static_cast<std::size_t>(col)]) +
                                 "' as a number");
            return *v;
        };
        const double a = number(col_a, "a");
        const double second = use_y ? number(col_y, "y") : number(col_v, "v");
        const double d = number(col_d, "delta");
        if (!(a > 0.0)) throw InputError(where("a") + "a ≤ 0");
        if (d != 0.0 && d != 1.0) throw InputError(where("delta") + "delta must be 0 or 1");
        double v = second;
        if (use_y) {
            if (second < a) throw InputError(where("y") + "y < a");
            v = second - a;
        } else if (v < 0.0) {
            throw InputError(where("v") + "v < 0");
        }
        LbrcObservation o = LbrcObservation::make(a, v, static_cast<int>(d));
        if (use_y) o.y = second;
        obs.push_back(o);
    }
    if (obs.empty()) throw InputError("no observations");
    return Dataset(std::move(obs));
}

inline Dataset parse_dataset(const std::string& path) {
    try {
        return parse_dataset_text(detail::read_file(path));
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline void write_dataset(std::ostream& out, const Dataset& d) {
    out << "a,v,delta\n";
    for (const auto& o : d) out << format_double(o.a) << ',' << format_double(o.v) << ',' << o.delta << '\n';
}

inline std::string dataset_to_csv(const Dataset& d) {
    std::ostringstream ss;
    write_dataset(ss, d);
    return ss.str();
}

// A curve as (t, value) rows with '#' metadata lines.
struct CurveExport {
    std::string estimator;
    std::size_t n = 0;
    std::string config_hash;
    std::vector<std::pair<double, double>> rows;
};

// Evaluation points for a step curve: all jumps plus the extra points,
// merged into one strictly increasing list.
inline std::vector<double> curve_points(const std::vector<double>& jumps, const std::vector<double>& extra) {
    std::vector<double> pts = jumps;
    pts.insert(pts.end(), extra.begin(), extra.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

template <class Fn>
CurveExport make_curve(std::string estimator, std::size_t n, std::string hash, const std::vector<double>& points,
                       Fn&& f) {
    CurveExport c{std::move(estimator), n, std::move(hash), {}};
    for (double t : points) c.rows.emplace_back(t, f(t));
    return c;
}

inline void write_curve(std::ostream& out, const CurveExport& c, const std::string& value_name = "value") {
    out << "# estimator: " << c.estimator << '\n';
    out << "# n: " << c.n << '\n';
    out << "# config_hash: " << c.config_hash << '\n';
    out << "t," << value_name << '\n';
    for (const auto& [t, v] : c.rows) out << format_double(t) << ',' << format_double(v) << '\n';
}

// Flat `key = value` text; '#' starts a comment. Keys must be unique.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        std::string_view line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (!line.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string value(detail::trim(line.substr(eq + 1)));
            if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
            if (!kv.emplace(key, value).second) throw InputError("config key '" + key + "': given twice");
        }
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return kv;
}

}  // namespace lbrc
