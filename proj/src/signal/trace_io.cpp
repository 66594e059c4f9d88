#include "motionpi/signal/trace_io.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>

namespace motionpi::signal {

namespace {

double parse_field(std::string_view text, std::size_t line) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw TraceFormatError(line, "not a decimal number: '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::vector<AccelSample> read_trace(std::istream& in) {
    std::vector<AccelSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (view.find_first_not_of(" \t\r") == std::string_view::npos || view.front() == '#') {
            continue;
        }
        std::array<double, 4> fields{};
        std::size_t field = 0;
        std::size_t pos = 0;
        while (true) {
            const auto comma = view.find(',', pos);
            if (field >= fields.size()) {
                throw TraceFormatError(line_no, "expected 4 fields");
            }
            fields[field++] = parse_field(view.substr(pos, comma - pos), line_no);
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (field != fields.size()) {
            throw TraceFormatError(line_no, "expected 4 fields");
        }
        const AccelSample s{fields[0], fields[1], fields[2], fields[3]};
        if (!out.empty() && !(s.t > out.back().t)) {
            throw TraceFormatError(line_no, "timestamp not strictly increasing");
        }
        out.push_back(s);
    }
    return out;
}

void write_trace(std::ostream& out, std::span<const AccelSample> samples) {
    for (const auto& s : samples) {
        out << format_double(s.t) << ',' << format_double(s.ax) << ',' << format_double(s.ay) << ','
            << format_double(s.az) << '\n';
    }
}

void write_triggers(std::ostream& out, std::span<const double> triggers) {
    for (double t : triggers) {
        out << format_double(t) << '\n';
    }
}

std::vector<double> read_triggers(std::istream& in) {
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_field(line, line_no));
    }
    return out;
}

}  // namespace motionpi::signal
