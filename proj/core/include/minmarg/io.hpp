#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "minmarg/mesh.hpp"
#include "minmarg/solver.hpp"

namespace minmarg {

/// 17-significant-digit decimal rendering; round-trips doubles exactly and
/// is locale-independent.
std::string format_double(double value);

/// Columns: xi, phi_1, ..., phi_n; one row per cell center, LF endings.
void write_potentials_csv(const std::filesystem::path& path, const Mesh& mesh,
                          const PotentialSet& potentials);

/// Inverse of write_potentials_csv; `p` is not stored in the file.
PotentialSet read_potentials_csv(const std::filesystem::path& path, double p);

/// Two-column table (strike, value), with an optional header line.
struct PayoffTable {
  std::vector<double> strikes;
  std::vector<double> values;
};
PayoffTable read_payoff_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents);

}  // namespace minmarg
