#pragma once

#include "twofold/common.hpp"

#include <string>

namespace twofold {

/// CSV: row-major, comma-separated, no header, '.' decimal, one row per line.
/// Values are written with 17 significant digits so round trips are exact.
void save_matrix_csv(const std::string& path, const Matrix& m);
Matrix load_matrix_csv(const std::string& path);

std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text);

/// JSON wrapper {"rows":n,"cols":m,"data":[...]} with row-major data.
std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& text);

/// Shortest decimal string that round-trips the double (always with a '.')
std::string format_double(double v);

}  // namespace twofold
