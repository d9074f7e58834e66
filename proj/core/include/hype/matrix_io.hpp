#pragma once

#include <iosfwd>
#include <string>

#include "hype/matrix.hpp"

namespace hype {

/// Shortest decimal representation that round-trips at the given width.
std::string format_value(double v, FloatWidth width = FloatWidth::f64);

/// Plain comma-separated rows, one line per row, shortest round-trip
/// formatting. No quoting; numeric data never needs it.
void write_csv(std::ostream& out, const Matrix& m);
std::string to_csv(const Matrix& m);

/// Parses CSV produced by write_csv. Every row must have the same number
/// of fields. Values are stored at the requested width.
Matrix read_csv(std::istream& in, FloatWidth width = FloatWidth::f64);
Matrix read_csv_string(const std::string& text, FloatWidth width = FloatWidth::f64);

/// JSON object {"rows": R, "cols": C, "width": "f64", "values": [[...]]}.
std::string to_json(const Matrix& m);
Matrix from_json(const std::string& text);

}  // namespace hype
