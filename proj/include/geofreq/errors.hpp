#pragma once

#include <stdexcept>
#include <string>

namespace geofreq {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// The state matrix has an eigenvalue whose geometric multiplicity is below
/// its algebraic multiplicity.
class NonDiagonalizable : public Error {
public:
    NonDiagonalizable(const std::string& what, double eig_re, double eig_im)
        : Error(what), eigenvalue_re(eig_re), eigenvalue_im(eig_im) {}

    double eigenvalue_re;
    double eigenvalue_im;
};

class InvalidBlock : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Integration produced a non-finite state.
class DivergedError : public Error {
public:
    DivergedError(const std::string& what, double t) : Error(what), time(t) {}
    double time;
};

class NoEquilibrium : public Error {
public:
    using Error::Error;
};

class AmbiguousDominance : public Error {
public:
    using Error::Error;
};

class InsufficientTail : public Error {
public:
    using Error::Error;
};

class NoLimitCycle : public Error {
public:
    using Error::Error;
};

/// Config or matrix file could not be parsed. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line_no, std::string field_name = {})
        : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
          line(line_no),
          field(std::move(field_name)) {}

    int line;
    std::string field;
};

}  // namespace geofreq
