#include "vqlab/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <system_error>

#include "vqlab/errors.hpp"

namespace vqlab {

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line_no)
{
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError("trace line " + std::to_string(line_no) + ": bad field '" +
                          std::string(text) + "'");
    }
    return value;
}

}  // namespace

void write_trace(std::ostream& out, std::span<const PacketEvent> stream)
{
    char buf[64];
    for (const auto& ev : stream) {
        const int n = std::snprintf(buf, sizeof buf, "%.17g,%u,%u\n", ev.time, ev.size, ev.source_id);
        out.write(buf, n);
    }
}

PacketStream read_trace(std::istream& in)
{
    PacketStream stream;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ConfigError("trace line " + std::to_string(line_no) + ": expected 3 fields");
        }
        const std::string_view view(line);
        PacketEvent ev;
        ev.time = parse_field<double>(view.substr(0, c1), line_no);
        ev.size = parse_field<std::uint32_t>(view.substr(c1 + 1, c2 - c1 - 1), line_no);
        ev.source_id = parse_field<std::uint32_t>(view.substr(c2 + 1), line_no);
        if (!(ev.time >= 0.0) || ev.size == 0) {
            throw ConfigError("trace line " + std::to_string(line_no) +
                              ": time must be >= 0 and size > 0");
        }
        if (!stream.empty() && ev.time < stream.back().time) {
            throw ConfigError("trace line " + std::to_string(line_no) + ": times not sorted");
        }
        stream.push_back(ev);
    }
    return stream;
}

void write_trace_file(const std::string& path, std::span<const PacketEvent> stream)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open trace for writing: " + path);
    write_trace(out, stream);
}

PacketStream read_trace_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace: " + path);
    return read_trace(in);
}

}  // namespace vqlab
