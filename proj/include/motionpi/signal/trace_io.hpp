#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionpi/signal/types.hpp"

namespace motionpi::signal {

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Reads newline-delimited `t,ax,ay,az` records. Blank lines and lines
/// starting with '#' are skipped.
[[nodiscard]] std::vector<AccelSample> read_trace(std::istream& in);
void write_trace(std::ostream& out, std::span<const AccelSample> samples);

/// One trigger timestamp per line, shortest round-trip decimal form.
void write_triggers(std::ostream& out, std::span<const double> triggers);
[[nodiscard]] std::vector<double> read_triggers(std::istream& in);

[[nodiscard]] std::string format_double(double v);

}  // namespace motionpi::signal
