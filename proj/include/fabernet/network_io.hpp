#pragma once

#include "fabernet/relunet.hpp"

#include <iosfwd>
#include <string>

namespace fabernet {

/// JSON document with "dims", per-layer "entries" [[row, col, weight]] and sparse
/// "bias" [[row, value]], and a "stats" block. Numbers use 17 significant digits,
/// so write followed by read reproduces every weight bit for bit.
void write_network(std::ostream& out, const ReluNetwork& net);
/// Parses and validates a network document; the stats block must match a recount.
ReluNetwork read_network(std::istream& in);

void save_network(const std::string& path, const ReluNetwork& net);
ReluNetwork load_network(const std::string& path);

} // namespace fabernet
