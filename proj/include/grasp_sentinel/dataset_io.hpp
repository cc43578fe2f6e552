#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <vector>

#include "grasp_sentinel/types.hpp"

namespace gsentinel {

// Dataset file layout (UTF-8, one record per line):
//
//   #grasp-sentinel v1 k=<int> units=m,deg,ms
//   trial_id,condition,grasp_label,t_ms,px,py,pz,qw,qx,qy,qz,a1,...,ak
//
// Floats are written with 17 significant digits so a save/load cycle is exact.
// All rows of one trial are contiguous.

inline constexpr std::string_view kDatasetMagic = "#grasp-sentinel";
inline constexpr std::string_view kDatasetVersion = "v1";
inline constexpr std::string_view kDatasetUnits = "m,deg,ms";

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, end);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_size(std::string_view s, std::size_t& out) {
    s = trim(s);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace detail

inline void write_dataset(const Dataset& ds, std::ostream& os) {
    std::string line;
    os << kDatasetMagic << ' ' << kDatasetVersion << " k=" << ds.k << " units=" << kDatasetUnits
       << '\n';
    for (const auto& trial : ds.trials) {
        for (const auto& s : trial.states) {
            line.clear();
            line += trial.id;
            line += ',';
            line += to_string(trial.condition);
            line += ',';
            line += to_string(trial.grasp);
            for (double v : {s.t_ms, s.position[0], s.position[1], s.position[2], s.orientation.w,
                             s.orientation.x, s.orientation.y, s.orientation.z}) {
                line += ',';
                detail::append_double(line, v);
            }
            for (double a : s.activation) {
                line += ',';
                detail::append_double(line, a);
            }
            line += '\n';
            os << line;
        }
    }
}

/// Parses a dataset stream and validates it. Throws DataError naming the
/// offending line, or listing invariant violations.
inline Dataset read_dataset(std::istream& is, std::string_view source = "<stream>") {
    const std::string where(source);
    auto fail = [&](std::size_t line_no, const std::string& msg) -> DataError {
        return DataError(where + ":" + std::to_string(line_no) + ": " + msg);
    };

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw DataError(where + ": empty file, missing header");
    ++line_no;

    Dataset ds;
    {
        const auto tokens = detail::split(detail::trim(line), ' ');
        bool have_k = false, have_units = false;
        if (tokens.size() < 2 || tokens[0] != kDatasetMagic)
            throw fail(line_no, "missing '#grasp-sentinel' header");
        if (tokens[1] != kDatasetVersion)
            throw fail(line_no, "unsupported format version '" + std::string(tokens[1]) + "'");
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            const auto tok = tokens[i];
            if (tok.empty()) continue;
            if (tok.starts_with("k=")) {
                if (!detail::parse_size(tok.substr(2), ds.k) || ds.k < 1)
                    throw fail(line_no, "invalid k in header");
                have_k = true;
            } else if (tok.starts_with("units=")) {
                if (tok.substr(6) != kDatasetUnits)
                    throw fail(line_no, "unsupported units '" + std::string(tok.substr(6)) + "'");
                have_units = true;
            } else {
                throw fail(line_no, "unknown header field '" + std::string(tok) + "'");
            }
        }
        if (!have_k) throw fail(line_no, "header lacks k=");
        if (!have_units) throw fail(line_no, "header lacks units=");
    }

    const std::size_t expected_fields = 11 + ds.k;
    std::unordered_set<std::string> closed_trials;
    Trial* current = nullptr;

    while (std::getline(is, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto f = detail::split(body, ',');
        if (f.size() != expected_fields)
            throw fail(line_no, "expected " + std::to_string(expected_fields) + " fields for k=" +
                                    std::to_string(ds.k) + ", got " + std::to_string(f.size()));

        const std::string id(detail::trim(f[0]));
        if (id.empty()) throw fail(line_no, "empty trial id");
        const auto cond = parse_condition(detail::trim(f[1]));
        if (!cond) throw fail(line_no, "unknown condition '" + std::string(f[1]) + "'");
        const auto grasp = parse_grasp_label(detail::trim(f[2]));
        if (!grasp) throw fail(line_no, "unknown grasp label '" + std::string(f[2]) + "'");

        if (!current || current->id != id) {
            if (current) closed_trials.insert(current->id);
            if (closed_trials.contains(id))
                throw fail(line_no, "rows of trial '" + id + "' are not contiguous");
            ds.trials.push_back(Trial{id, *grasp, *cond, {}});
            current = &ds.trials.back();
        } else if (current->grasp != *grasp || current->condition != *cond) {
            throw fail(line_no, "trial '" + id + "' changes condition or grasp label mid-trial");
        }

        double v[8];
        for (std::size_t i = 0; i < 8; ++i)
            if (!detail::parse_double(f[3 + i], v[i]))
                throw fail(line_no, "field " + std::to_string(4 + i) + " is not a number");
        WristState s;
        s.t_ms = v[0];
        s.position = {v[1], v[2], v[3]};
        s.orientation = {v[4], v[5], v[6], v[7]};
        s.activation.resize(ds.k);
        for (std::size_t i = 0; i < ds.k; ++i)
            if (!detail::parse_double(f[11 + i], s.activation[i]))
                throw fail(line_no, "field " + std::to_string(12 + i) + " is not a number");
        current->states.push_back(std::move(s));
    }

    const auto violations = validate_dataset(ds);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << where << ": " << violations.size() << " invariant violation(s)";
        for (const auto& v : violations) msg << "\n  " << describe(v);
        throw DataError(msg.str());
    }
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");
    return read_dataset(in, path.string());
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write dataset file '" + path.string() + "'");
    write_dataset(ds, out);
    out.flush();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace gsentinel
