#ifndef DURCAST_ERRORS_HPP
#define DURCAST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace durcast {

// Truncating a prior at t_past removed every support point: the prior cannot
// explain the observed elapsed duration.
class empty_posterior_error : public std::runtime_error {
public:
    explicit empty_posterior_error(const std::string& what) : std::runtime_error(what) {}
};

// Every table entry at the queried t_past is infeasible.
class no_candidate_error : public std::runtime_error {
public:
    explicit no_candidate_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the offending location when known.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::string source = {}, long line = 0)
        : std::runtime_error(what), source_(std::move(source)), line_(line) {}
    const std::string& source() const { return source_; }
    long line() const { return line_; }

private:
    std::string source_;
    long line_;
};

// A date series with a hole where daily cadence is required.
class malformed_series_error : public std::runtime_error {
public:
    explicit malformed_series_error(const std::string& what) : std::runtime_error(what) {}
};

class fit_error : public std::runtime_error {
public:
    explicit fit_error(const std::string& what) : std::runtime_error(what) {}
};

class insufficient_data_error : public std::runtime_error {
public:
    explicit insufficient_data_error(const std::string& what) : std::runtime_error(what) {}
};

class alignment_error : public std::runtime_error {
public:
    explicit alignment_error(const std::string& what) : std::runtime_error(what) {}
};

class degenerate_distribution_error : public std::runtime_error {
public:
    explicit degenerate_distribution_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace durcast

#endif
