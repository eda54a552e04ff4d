#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bounds.hpp"
#include "core.hpp"
#include "diagnostics.hpp"

namespace dsparse::io {

/// Thrown on file-system failures; the message names the path.
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: enough for an exact double round trip.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& text)
{
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw ValidationError("cannot parse number '" + text + "'");
    return v;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// Dense matrices:
//
//   # dsparse-matrix rows=<r> cols=<c>
//   v,v,...,v        (one line per row)

inline std::string matrix_to_csv(const Eigen::MatrixXd& a)
{
    std::ostringstream os;
    os << "# dsparse-matrix rows=" << a.rows() << " cols=" << a.cols() << '\n';
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j) os << ',';
            os << format_double(a(i, j));
        }
        os << '\n';
    }
    return os.str();
}

inline Eigen::MatrixXd matrix_from_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    long rows = -1;
    long cols = -1;
    if (std::sscanf(header.c_str(), "# dsparse-matrix rows=%ld cols=%ld", &rows, &cols) != 2 || rows < 0 || cols < 0) {
        throw ValidationError("matrix csv: bad header '" + header + "'");
    }
    Eigen::MatrixXd a(rows, cols);
    std::string line;
    for (long i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw ValidationError("matrix csv: missing row " + std::to_string(i));
        std::istringstream cells(line);
        std::string cell;
        long j = 0;
        while (std::getline(cells, cell, ',')) {
            if (j >= cols) throw ValidationError("matrix csv: too many values in row " + std::to_string(i));
            a(i, j++) = parse_double(cell);
        }
        if (j != cols) throw ValidationError("matrix csv: row " + std::to_string(i) + " has " + std::to_string(j) + " values");
    }
    return a;
}

inline void write_matrix(const std::string& path, const Eigen::MatrixXd& a) { write_text(path, matrix_to_csv(a)); }

inline Eigen::MatrixXd read_matrix(const std::string& path)
{
    try {
        return matrix_from_csv(read_text(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// DSRIP reports as JSON records

inline nlohmann::json to_json(const DsripReport& r)
{
    nlohmann::json j;
    j["U_S"] = r.upper;
    j["L_S"] = r.lower;
    j["delta_S"] = r.delta;
    j["method"] = r.method;
    j["trials"] = r.trials;
    j["is_lower_bound_on_delta"] = r.is_lower_bound_on_delta;
    return j;
}

inline DsripReport dsrip_report_from_json(const nlohmann::json& j)
{
    DsripReport r;
    r.upper = j.at("U_S").get<double>();
    r.lower = j.at("L_S").get<double>();
    r.delta = j.at("delta_S").get<double>();
    r.method = j.at("method").get<std::string>();
    r.trials = j.at("trials").get<std::size_t>();
    r.is_lower_bound_on_delta = j.at("is_lower_bound_on_delta").get<bool>();
    return r;
}

// ---------------------------------------------------------------------------
// Packing codebooks:
//
//   # dsparse-codebook m=<m> d=<d> s=<s> s0=<s0> magnitude=<v> elements=<M> target=<t> min_distance=<h>
//   i,j,value i,j,value ...      (one element per line, 0-based row i and column j)

struct Codebook
{
    Index m = 0, d = 0, s = 0, s0 = 0;
    double magnitude = 0.0;
    Index target = 0;
    Index min_distance = 0;
    std::vector<std::vector<std::pair<Entry, double>>> elements;
};

inline std::string codebook_text(const PackingSet& set)
{
    std::ostringstream os;
    os << "# dsparse-codebook m=" << set.m << " d=" << set.d << " s=" << set.s << " s0=" << set.s0
       << " magnitude=" << format_double(set.magnitude) << " elements=" << set.size() << " target=" << set.target
       << " min_distance=" << set.min_pairwise_hamming << '\n';
    const std::string value = format_double(set.magnitude);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto& mask = set.mask(k);
        bool first = true;
        for (Index flat = 0; flat < set.m * set.d; ++flat) {
            const auto f = static_cast<std::size_t>(flat);
            if (!((mask[f / 64] >> (f % 64)) & 1u)) continue;
            if (!first) os << ' ';
            first = false;
            os << flat % set.d << ',' << flat / set.d << ',' << value;
        }
        os << '\n';
    }
    return os.str();
}

inline Codebook codebook_from_text(const std::string& text)
{
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    Codebook cb;
    long m, d, s, s0, count, target, min_distance;
    char magnitude[64];
    if (std::sscanf(header.c_str(),
                    "# dsparse-codebook m=%ld d=%ld s=%ld s0=%ld magnitude=%63s elements=%ld target=%ld "
                    "min_distance=%ld",
                    &m, &d, &s, &s0, magnitude, &count, &target, &min_distance) != 8) {
        throw ValidationError("codebook: bad header '" + header + "'");
    }
    cb.m = m;
    cb.d = d;
    cb.s = s;
    cb.s0 = s0;
    cb.magnitude = parse_double(magnitude);
    cb.target = target;
    cb.min_distance = min_distance;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream triples(line);
        std::string triple;
        std::vector<std::pair<Entry, double>> element;
        while (triples >> triple) {
            long i, j;
            char value[64];
            if (std::sscanf(triple.c_str(), "%ld,%ld,%63s", &i, &j, value) != 3) {
                throw ValidationError("codebook: bad triple '" + triple + "'");
            }
            element.push_back({Entry{i, j}, parse_double(value)});
        }
        cb.elements.push_back(std::move(element));
    }
    if (static_cast<long>(cb.elements.size()) != count) {
        throw ValidationError("codebook: header promises " + std::to_string(count) + " elements, found " +
                              std::to_string(cb.elements.size()));
    }
    return cb;
}

} // namespace dsparse::io
