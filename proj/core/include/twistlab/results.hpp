#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace twistlab {

// Tabular output of an experiment run. Rows are plain doubles; columns
// carry the header names that end up in the CSV file.
struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Everything a run produces: the configuration echo, any number of tables
// and a flat list of named scalar outcomes (kept in insertion order so the
// files are reproducible byte for byte).
struct ResultsBundle {
  std::string experiment;
  std::string config_echo;
  std::vector<ResultTable> tables;
  std::vector<std::pair<std::string, double>> scalars;

  void add_scalar(const std::string& name, double value) {
    scalars.emplace_back(name, value);
  }
};

// Look up a scalar by name; throws std::out_of_range when missing.
double get_scalar(const ResultsBundle& bundle, const std::string& name);

// FNV-1a 64-bit hash used for the output manifest.
std::uint64_t fnv1a64(const std::string& data);

// Render a table as CSV text (header line plus %.17g rows).
std::string table_to_csv(const ResultTable& table);

// Write config.ini, one CSV per table, summary.txt with the scalars and
// manifest.txt hashing every written file. Creates dir when needed and
// returns the manifest text, so callers can compare runs without touching
// the filesystem again.
std::string export_bundle(const ResultsBundle& bundle, const std::string& dir);

}  // namespace twistlab
