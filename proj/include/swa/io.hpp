#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace swa::io {

/// Shortest text that reads back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);
std::size_t parse_size(const std::string& text);

std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

/// Writes "# <line>" for each provenance line.
void write_provenance(std::ostream& out, std::span<const std::string> provenance);

/// Tab-separated table: '#' lines are skipped, the first remaining line is the
/// header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};
Table read_table(const std::filesystem::path& path);

} // namespace swa::io
