#pragma once

// Shortest round-trip decimal formatting, so text output can be compared
// byte for byte and parsed back exactly.

#include <charconv>
#include <complex>
#include <string>
#include <string_view>
#include <system_error>

#include <Eigen/Dense>

namespace geofreq::fmt {

inline void append(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline std::string num(double v) {
    std::string s;
    append(s, v);
    return s;
}

/// "a + bj" / "a - bj", or just "a" when the imaginary part is zero.
inline std::string complex(std::complex<double> z) {
    std::string s = num(z.real());
    if (z.imag() != 0.0) {
        s += z.imag() > 0.0 ? " + " : " - ";
        append(s, std::abs(z.imag()));
        s += 'j';
    }
    return s;
}

/// Rows on separate lines, entries separated by single spaces.
template <typename Derived>
std::string matrix(const Eigen::MatrixBase<Derived>& m, std::string_view indent = "  ") {
    std::string s;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s += indent;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) s += ' ';
            append(s, m(i, j));
        }
        s += '\n';
    }
    return s;
}

template <typename Derived>
std::string row(const Eigen::MatrixBase<Derived>& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        append(s, v(i));
    }
    return s;
}

/// Parses a complete token as a double; false on trailing garbage.
inline bool parse_double(std::string_view tok, double& out) {
    if (tok.empty()) return false;
    if (tok.front() == '+') tok.remove_prefix(1);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

}  // namespace geofreq::fmt
