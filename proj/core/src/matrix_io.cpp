#include "hype/matrix_io.hpp"

#include <charconv>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace hype {

std::string format_value(double v, FloatWidth width) {
  char buf[64];
  std::to_chars_result r{};
  if (width == FloatWidth::f32) {
    r = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
  } else {
    r = std::to_chars(buf, buf + sizeof buf, v);
  }
  return std::string(buf, r.ptr);
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) {
        out << ',';
      }
      out << format_value(m(i, j), m.width());
    }
    out << '\n';
  }
}

std::string to_csv(const Matrix& m) {
  std::ostringstream out;
  write_csv(out, m);
  return out.str();
}

Matrix read_csv(std::istream& in, FloatWidth width) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      const std::string field = line.substr(start, end - start);
      char* parse_end = nullptr;
      const double v = std::strtod(field.c_str(), &parse_end);
      if (parse_end == field.c_str() || *parse_end != '\0') {
        throw std::invalid_argument("read_csv: bad numeric field '" + field + "'");
      }
      row.push_back(v);
      if (end == line.size()) {
        break;
      }
      start = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ShapeError("read_csv: ragged row lengths");
    }
    rows.push_back(std::move(row));
  }
  const std::size_t nr = rows.size();
  const std::size_t nc = nr == 0 ? 0 : rows.front().size();
  Matrix m(nr, nc, width);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      m.set(i, j, rows[i][j]);
    }
  }
  return m;
}

Matrix read_csv_string(const std::string& text, FloatWidth width) {
  std::istringstream in(text);
  return read_csv(in, width);
}

std::string to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["width"] = to_string(m.width());
  auto values = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) {
      row.push_back(m(i, k));
    }
    values.push_back(std::move(row));
  }
  j["values"] = std::move(values);
  return j.dump();
}

Matrix from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const std::string width_tag = j.at("width").get<std::string>();
  const FloatWidth width = width_tag == "f32" ? FloatWidth::f32 : FloatWidth::f64;
  const auto& values = j.at("values");
  if (values.size() != rows) {
    throw ShapeError("from_json: row count mismatch");
  }
  Matrix m(rows, cols, width);
  for (std::size_t i = 0; i < rows; ++i) {
    if (values[i].size() != cols) {
      throw ShapeError("from_json: column count mismatch");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m.set(i, k, values[i][k].get<double>());
    }
  }
  return m;
}

}  // namespace hype
