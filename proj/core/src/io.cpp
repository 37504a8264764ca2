#include "minmarg/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace minmarg {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  return fields;
}

bool parse_field(const std::string& field, double& out) {
  const char* begin = field.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  return end != begin && end && *end == '\0';
}

[[noreturn]] void fail_file(const std::filesystem::path& path,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_potentials_csv(const std::filesystem::path& path, const Mesh& mesh,
                          const PotentialSet& potentials) {
  std::ostringstream os;
  os << "xi";
  for (int i = 0; i < mesh.dim(); ++i) os << ",phi_" << (i + 1);
  os << '\n';
  for (int k = 0; k < mesh.cells(); ++k) {
    os << format_double(mesh.centers()[k]);
    for (int i = 0; i < mesh.dim(); ++i)
      os << ',' << format_double(potentials.phis[i][k]);
    os << '\n';
  }
  write_text_file(path, os.str());
}

PotentialSet read_potentials_csv(const std::filesystem::path& path, double p) {
  std::ifstream in(path);
  if (!in) fail_file(path, "cannot open");
  std::string line;
  if (!std::getline(in, line)) fail_file(path, "empty file");
  const std::size_t columns = split_fields(line).size();
  if (columns < 2) fail_file(path, "expected xi plus at least one phi column");

  PotentialSet out;
  out.p = p;
  out.phis.assign(columns - 1, {});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns) fail_file(path, "ragged row: " + line);
    for (std::size_t i = 1; i < columns; ++i) {
      double v = 0.0;
      if (!parse_field(fields[i], v)) fail_file(path, "bad number: " + fields[i]);
      out.phis[i - 1].push_back(v);
    }
  }
  if (out.phis.front().empty()) fail_file(path, "no data rows");
  return out;
}

PayoffTable read_payoff_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_file(path, "cannot open");
  PayoffTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) fail_file(path, "expected two columns: " + line);
    double k = 0.0, v = 0.0;
    const bool numeric = parse_field(fields[0], k) && parse_field(fields[1], v);
    if (!numeric) {
      if (first) {  // header row
        first = false;
        continue;
      }
      fail_file(path, "bad number in row: " + line);
    }
    first = false;
    table.strikes.push_back(k);
    table.values.push_back(v);
  }
  if (table.strikes.empty()) fail_file(path, "no data rows");
  return table;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_file(path, "cannot open for writing");
  out << contents;
  if (!out) fail_file(path, "write failed");
}

}  // namespace minmarg
