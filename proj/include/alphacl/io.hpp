#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "alphacl/result.hpp"

namespace alphacl {

// Format a double with 17 significant digits (round-trip exact for IEEE754
// binary64), C locale, no locale-dependent separators.
std::string format_double(double v);

// Write text to `path` atomically: write to a temp file in the same
// directory, then rename over the target.
Status write_file_atomic(const std::string& path, const std::string& text);

// Matrix as CSV with a header row of column names; empty `header` derives
// c0..c{n-1}. 17 significant digits per entry.
Status write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                        const std::vector<std::string>& header = {});

// Rows of doubles under an explicit header (step traces etc.).
Status write_rows_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

Result<std::string> read_file(const std::string& path);

}  // namespace alphacl
