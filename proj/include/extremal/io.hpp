#pragma once

// Output plumbing shared by the CLI: full-precision number formatting,
// the config hash stamped into every artifact, and small emit helpers.
// Everything here is deterministic by construction (fixed orders, no
// clocks, no locale dependence).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace extremal {
namespace io {

/// Shortest exact decimal form via %.17g ('.' decimal point regardless
/// of locale is guaranteed by snprintf with the "C" numeric spelling we
/// never change).
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// FNV-1a, 64-bit: tiny, stable, good enough to fingerprint a config.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string config_hash(std::string_view canonical_config) {
    return hex64(fnv1a64(canonical_config));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);  // binary: '\n' stays '\n'
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << body;
    if (!out) throw Error("write failed: " + path.string());
}

/// Join CSV cells; values are expected pre-formatted (no quoting layer —
/// none of our cells contain commas).
inline std::string csv_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

/// Standard artifact header: hash comment then the column header row.
inline std::string csv_header(const std::string& hash,
                              const std::vector<std::string>& columns) {
    return "# config_hash=" + hash + "\n" + csv_line(columns);
}

/// gnuplot script plotting a bifurcation diagram (lambda, sup_norm) and
/// the stability trace (lambda, mu1) from a branch CSV.
inline std::string branch_plot_script(const std::string& csv_name,
                                      const std::string& hash) {
    std::string s;
    s += "# config_hash=" + hash + "\n";
    s += "set datafile separator ','\n";
    s += "set key left top\n";
    s += "set multiplot layout 2,1\n";
    s += "set xlabel 'lambda'\n";
    s += "set ylabel 'sup norm'\n";
    s += "plot '" + csv_name + "' using 1:2 with linespoints pt 7 ps 0.4 title 'branch'\n";
    s += "set ylabel 'mu_1'\n";
    s += "plot '" + csv_name + "' using 1:3 with linespoints pt 7 ps 0.4 title 'stability'\n";
    s += "unset multiplot\n";
    return s;
}

/// gnuplot script for a dimension sweep: lambda* and last sup norm vs n.
inline std::string sweep_plot_script(const std::string& csv_name,
                                     const std::string& hash) {
    std::string s;
    s += "# config_hash=" + hash + "\n";
    s += "set datafile separator ','\n";
    s += "set key left top\n";
    s += "set xlabel 'n'\n";
    s += "set multiplot layout 2,1\n";
    s += "set ylabel 'lambda* bracket'\n";
    s += "plot '" + csv_name + "' using 1:2 with linespoints pt 7 ps 0.5 title 'lambda_ok', \\\n";
    s += "     '" + csv_name + "' using 1:3 with points pt 6 ps 0.5 title 'lambda_fail'\n";
    s += "set ylabel 'sup norm at last point'\n";
    s += "plot '" + csv_name + "' using 1:5 with linespoints pt 7 ps 0.5 title 'sup'\n";
    s += "unset multiplot\n";
    return s;
}

}  // namespace io
}  // namespace extremal
