#pragma once

#include <iosfwd>
#include <string>

#include "vqlab/traffic.hpp"

namespace vqlab {

// Newline-delimited `time_s,size_bytes,source_id` records, '.' radix.
// Times are written with 17 significant digits so a round trip is exact.
void write_trace(std::ostream& out, std::span<const PacketEvent> stream);
PacketStream read_trace(std::istream& in);

void write_trace_file(const std::string& path, std::span<const PacketEvent> stream);
PacketStream read_trace_file(const std::string& path);

}  // namespace vqlab
