#ifndef HFY_IO_HPP
#define HFY_IO_HPP

#include <Eigen/Core>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "hfy/structured.hpp"

// Pattern files are plain CSV, one pattern per row, doubles printed with
// 17 significant digits so a write-then-read round trip is exact. Lines
// starting with '#' are skipped; the optional header is written as one.

namespace hfy {

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);

Eigen::MatrixXd read_pattern_csv(const std::string& path);
void write_pattern_csv(std::ostream& out, const Eigen::MatrixXd& X,
                       bool header = false);
void write_pattern_csv(const std::string& path, const Eigen::MatrixXd& X,
                       bool header = false);

/// Parse one CSV line of doubles (used for reading query/pattern rows and
/// inline vectors). Throws with the field position on malformed input.
Eigen::VectorXd parse_csv_row(const std::string& line);

void to_json(nlohmann::json& j, const FactorGraph& g);
void from_json(const nlohmann::json& j, FactorGraph& g);

FactorGraph load_factor_graph(const std::string& path);
void save_factor_graph(const std::string& path, const FactorGraph& g);

}  // namespace hfy

#endif
