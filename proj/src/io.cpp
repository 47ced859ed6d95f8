#include "alphacl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace alphacl {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Status write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return Error{Errc::kIo, "cannot open for write: " + tmp};
    out << text;
    if (!out.flush()) return Error{Errc::kIo, "write failed: " + tmp};
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    return Error{Errc::kIo, "rename failed: " + path};
  }
  return ok_status();
}

Status write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                        const std::vector<std::string>& header) {
  std::ostringstream out;
  if (!header.empty() &&
      header.size() != static_cast<std::size_t>(m.cols())) {
    return Error{Errc::kShapeMismatch, "csv header width != matrix cols"};
  }
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c) out << ',';
    out << (header.empty() ? "c" + std::to_string(c) : header[c]);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  return write_file_atomic(path, out.str());
}

Status write_rows_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      return Error{Errc::kShapeMismatch, "csv row width != header width"};
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  return write_file_atomic(path, out.str());
}

Result<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Error{Errc::kIo, "cannot open: " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace alphacl
