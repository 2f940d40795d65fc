#include "twistlab/results.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace twistlab {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

double get_scalar(const ResultsBundle& bundle, const std::string& name) {
  for (const auto& [k, v] : bundle.scalars)
    if (k == name) return v;
  throw std::out_of_range("no scalar named '" + name + "' in results");
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string table_to_csv(const ResultTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ",";
    out += table.columns[i];
  }
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::invalid_argument("table '" + table.name +
                                  "' has a row of the wrong width");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += fmt(row[i]);
    }
    out += "\n";
  }
  return out;
}

std::string export_bundle(const ResultsBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("config.ini", bundle.config_echo);
  for (const auto& t : bundle.tables)
    files.emplace_back(t.name + ".csv", table_to_csv(t));

  std::string summary;
  for (const auto& [k, v] : bundle.scalars) summary += k + " = " + fmt(v) + "\n";
  files.emplace_back("summary.txt", summary);

  std::string manifest = "experiment " + bundle.experiment + "\n";
  for (const auto& [name, text] : files) {
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    manifest += std::string(hex) + "  " + name + "\n";
    write_file((fs::path(dir) / name).string(), text);
  }
  write_file((fs::path(dir) / "manifest.txt").string(), manifest);
  return manifest;
}

}  // namespace twistlab
